"""
Dataset files: ``PLDMDS`` containers with one record per episode.
"""

import logging

from error_handler import DatasetFormatError
from models.dataset import Dataset, DatasetSpec, Episode
from serialization import decode_arrays, encode_arrays, read_container, write_container

logger = logging.getLogger(__name__)

DATASET_MAGIC = b"PLDMDS"
DATASET_VERSION = 1


def save_dataset(dataset: Dataset, path: str) -> int:
    """
    Write a dataset file.

    Args:
        dataset: Dataset to write
        path: Destination path

    Returns:
        Payload checksum
    """
    header = {"spec": dataset.spec.to_dict(), "metadata": dataset.metadata}
    records = (encode_arrays(ep.to_arrays()) for ep in dataset.episodes)
    digest = write_container(path, DATASET_MAGIC, DATASET_VERSION, header, records, count=len(dataset.episodes))
    logger.info(f"Saved {len(dataset.episodes)} episodes to {path}")
    return digest


def load_dataset(path: str) -> Dataset:
    """
    Read a dataset file written by :func:`save_dataset`.

    Raises:
        DatasetFormatError, DatasetVersionError, DatasetTruncatedError, ChecksumError
    """
    _, header, records = read_container(path, DATASET_MAGIC, DATASET_VERSION)
    if "spec" not in header:
        raise DatasetFormatError(f"{path}: metadata block has no 'spec'")
    spec = DatasetSpec.from_dict(header["spec"])
    episodes = [Episode.from_arrays(decode_arrays(record)) for record in records]
    logger.info(f"Loaded {len(episodes)} episodes from {path}")
    return Dataset(spec=spec, episodes=episodes, metadata=header.get("metadata", {}))

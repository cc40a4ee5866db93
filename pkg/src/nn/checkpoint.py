"""
Parameter checkpoints: ``PLDMCK`` containers of named arrays plus JSON metadata.
"""

import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from error_handler import DatasetFormatError
from serialization import decode_arrays, encode_arrays, read_container, write_container

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"PLDMCK"
CHECKPOINT_VERSION = 1


def save_checkpoint(
    path: str,
    params: Dict[str, np.ndarray],
    metadata: Dict[str, Any],
    optimizer_state: Optional[Dict[str, np.ndarray]] = None,
) -> int:
    """
    Write parameters (and optionally optimizer state) to a checkpoint file.

    Args:
        path: Destination path
        params: Named parameter arrays
        metadata: JSON-serializable description (architecture, loss weights, ...)
        optimizer_state: Optional named optimizer arrays

    Returns:
        Payload checksum
    """
    records = [encode_arrays(params)]
    if optimizer_state is not None:
        records.append(encode_arrays(optimizer_state))
    digest = write_container(path, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, metadata, records)
    logger.info(f"Saved checkpoint {path} ({len(params)} tensors)")
    return digest


def load_checkpoint(
    path: str,
) -> Tuple[Dict[str, np.ndarray], Dict[str, Any], Optional[Dict[str, np.ndarray]]]:
    """
    Read a checkpoint written by :func:`save_checkpoint`.

    Returns:
        Tuple of (params, metadata, optimizer_state or None)
    """
    _, metadata, records = read_container(path, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)
    if not records:
        raise DatasetFormatError(f"{path}: checkpoint has no parameter record")
    params = decode_arrays(records[0])
    optimizer_state = decode_arrays(records[1]) if len(records) > 1 else None
    return params, metadata, optimizer_state

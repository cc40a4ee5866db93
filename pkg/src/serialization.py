"""
Binary container shared by dataset files and parameter checkpoints.

Layout (all integers little-endian)::

    magic (6 bytes) | version u16 | payload length u64 | payload | checksum u64

The payload is a JSON metadata block followed by length-prefixed records. A
record is a set of named arrays, each stored with a dtype tag and a shape header
followed by the raw row-major bytes. The checksum is an 8-byte BLAKE2b digest
of the payload.
"""

import hashlib
import json
import logging
import os
import struct
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sized, Tuple

import numpy as np

from error_handler import (
    ChecksumError,
    DataError,
    DatasetFormatError,
    DatasetTruncatedError,
    DatasetVersionError,
)

logger = logging.getLogger(__name__)

_HEADER = struct.Struct("<6sHQ")
_CHECKSUM = struct.Struct("<Q")

DTYPE_TAGS = {
    np.dtype(np.uint8): 0,
    np.dtype(np.float32): 1,
    np.dtype(np.float64): 2,
    np.dtype(np.int64): 3,
}
_TAG_DTYPES = {tag: dtype.newbyteorder("<") for dtype, tag in DTYPE_TAGS.items()}


def _digest_value(hasher: "hashlib.blake2b") -> int:
    return int.from_bytes(hasher.digest(), "little")


def checksum(payload: bytes) -> int:
    """64-bit BLAKE2b checksum of a payload."""
    return _digest_value(hashlib.blake2b(payload, digest_size=8))


def canonical_json(obj: Any) -> str:
    """Deterministic JSON text: sorted keys, no insignificant whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def encode_arrays(arrays: Mapping[str, np.ndarray]) -> bytes:
    """
    Serialize named arrays into a single record.

    Args:
        arrays: Mapping of array name to array; insertion order is preserved

    Returns:
        Record bytes
    """
    parts = [struct.pack("<H", len(arrays))]
    for name, array in arrays.items():
        array = np.ascontiguousarray(array)
        if array.dtype not in DTYPE_TAGS:
            raise DataError(f"Unsupported dtype {array.dtype} for array '{name}'")
        encoded_name = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded_name)))
        parts.append(encoded_name)
        parts.append(struct.pack("<BB", DTYPE_TAGS[array.dtype], array.ndim))
        parts.append(struct.pack(f"<{array.ndim}I", *array.shape))
        parts.append(array.astype(array.dtype.newbyteorder("<"), copy=False).tobytes())
    return b"".join(parts)


def decode_arrays(record: bytes) -> Dict[str, np.ndarray]:
    """
    Deserialize a record produced by :func:`encode_arrays`.

    Args:
        record: Record bytes

    Returns:
        Mapping of array name to a writable array
    """
    view = memoryview(record)
    offset = 0
    try:
        (count,) = struct.unpack_from("<H", view, offset)
        offset += 2
        arrays = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", view, offset)
            offset += 2
            name = bytes(view[offset : offset + name_len]).decode("utf-8")
            offset += name_len
            tag, ndim = struct.unpack_from("<BB", view, offset)
            offset += 2
            shape = struct.unpack_from(f"<{ndim}I", view, offset)
            offset += 4 * ndim
            dtype = _TAG_DTYPES[tag]
            nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
            data = np.frombuffer(view[offset : offset + nbytes], dtype=dtype)
            offset += nbytes
            arrays[name] = data.reshape(shape).astype(dtype.newbyteorder("="))
    except (struct.error, KeyError, ValueError) as e:
        raise DatasetFormatError(f"Malformed record: {e}") from e
    return arrays


def write_container(
    path: str,
    magic: bytes,
    version: int,
    metadata: Mapping[str, Any],
    records: Iterable[bytes],
    count: Optional[int] = None,
) -> int:
    """
    Write a versioned, checksummed container.

    Records are streamed to a temporary file next to ``path`` and the checksum
    is updated as they go; the payload length in the header is patched at the
    end and the file is moved into place.

    Args:
        path: Destination file path
        magic: Six-byte file signature
        version: Format version
        metadata: JSON-serializable metadata block
        records: Record byte strings, written in order; may be a generator
        count: Number of records; required when ``records`` has no length

    Returns:
        Payload checksum
    """
    if count is None:
        if not isinstance(records, Sized):
            raise DataError("write_container: count is required for unsized records")
        count = len(records)
    meta_bytes = canonical_json(metadata).encode("utf-8")
    hasher = hashlib.blake2b(digest_size=8)
    payload_len = 0

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    partial = f"{path}.partial"
    try:
        with open(partial, "wb") as f:
            f.write(_HEADER.pack(magic, version, 0))

            def emit(chunk: bytes) -> None:
                nonlocal payload_len
                f.write(chunk)
                hasher.update(chunk)
                payload_len += len(chunk)

            emit(struct.pack("<I", len(meta_bytes)))
            emit(meta_bytes)
            emit(struct.pack("<I", count))
            written = 0
            for record in records:
                emit(struct.pack("<Q", len(record)))
                emit(record)
                written += 1
            if written != count:
                raise DataError(f"write_container: expected {count} records, got {written}")
            digest = _digest_value(hasher)
            f.write(_CHECKSUM.pack(digest))
            f.seek(0)
            f.write(_HEADER.pack(magic, version, payload_len))
        os.replace(partial, path)
    except OSError as e:
        raise DataError(f"Cannot write {path}: {e}") from e
    finally:
        if os.path.exists(partial):
            os.remove(partial)
    logger.debug(f"Wrote container {path} ({payload_len} payload bytes, {count} records)")
    return digest


def read_container(
    path: str, magic: bytes, supported_version: int
) -> Tuple[int, Dict[str, Any], List[bytes]]:
    """
    Read and verify a container written by :func:`write_container`.

    Args:
        path: Source file path
        magic: Expected six-byte file signature
        supported_version: Highest format version this reader understands

    Returns:
        Tuple of (version, metadata, records)

    Raises:
        DatasetFormatError: Wrong signature or malformed payload
        DatasetVersionError: Unsupported format version
        DatasetTruncatedError: File shorter than declared
        ChecksumError: Payload does not match the stored checksum
    """
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as e:
        raise DataError(f"Cannot read {path}: {e}") from e

    if len(blob) < _HEADER.size:
        raise DatasetTruncatedError(f"{path}: file shorter than the header")
    file_magic, version, payload_len = _HEADER.unpack_from(blob, 0)
    if file_magic != magic:
        raise DatasetFormatError(f"{path}: bad signature {file_magic!r}, expected {magic!r}")
    if version > supported_version or version < 1:
        raise DatasetVersionError(
            f"{path}: format version {version} is not supported (max {supported_version})"
        )
    end = _HEADER.size + payload_len
    if len(blob) < end + _CHECKSUM.size:
        raise DatasetTruncatedError(
            f"{path}: expected {end + _CHECKSUM.size} bytes, found {len(blob)}"
        )
    payload = blob[_HEADER.size : end]
    (stored,) = _CHECKSUM.unpack_from(blob, end)
    if checksum(payload) != stored:
        raise ChecksumError(f"{path}: payload checksum mismatch")

    try:
        (meta_len,) = struct.unpack_from("<I", payload, 0)
        offset = 4
        metadata = json.loads(payload[offset : offset + meta_len].decode("utf-8"))
        offset += meta_len
        (count,) = struct.unpack_from("<I", payload, offset)
        offset += 4
        records = []
        for _ in range(count):
            (rec_len,) = struct.unpack_from("<Q", payload, offset)
            offset += 8
            records.append(payload[offset : offset + rec_len])
            offset += rec_len
    except (struct.error, ValueError) as e:
        raise DatasetFormatError(f"{path}: malformed payload: {e}") from e
    return version, metadata, records

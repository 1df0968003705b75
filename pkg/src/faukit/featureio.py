"""Binary feature-tensor files.

Layout (all integers little-endian):

    magic    4 bytes  b"FAUT"
    version  u16      1
    dtype    u8       1 = float32 (only tag defined)
    ndim     u8       number of dimensions, 1..4
    dims     u32 * ndim
    payload  float32 * prod(dims), C order (channel-major, row-major)

Values are stored as float32 and widened to float64 on read; training runs
entirely in float64.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError

MAGIC = b"FAUT"
VERSION = 1
DTYPE_F32 = 1
_MAX_NDIM = 4
_HEADER = struct.Struct("<4sHBB")


def write_features(path: str | Path, values: np.ndarray) -> None:
    """Write a feature tensor, casting to float32."""
    arr = np.ascontiguousarray(np.asarray(values, dtype=np.float64))
    if arr.ndim < 1 or arr.ndim > _MAX_NDIM:
        raise FormatError(f"feature tensors must have 1..{_MAX_NDIM} dims, got {arr.ndim}")
    if any(d <= 0 for d in arr.shape):
        raise FormatError(f"feature tensor has an empty dimension: {arr.shape}")
    header = _HEADER.pack(MAGIC, VERSION, DTYPE_F32, arr.ndim)
    dims = struct.pack(f"<{arr.ndim}I", *arr.shape)
    payload = arr.astype("<f4").tobytes(order="C")
    Path(path).write_bytes(header + dims + payload)


def read_features(path: str | Path) -> np.ndarray:
    """Read a feature tensor back as float64, validating the full layout."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except FileNotFoundError:
        raise DataError(f"feature file not found: {path}") from None
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, dtype, ndim = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dtype != DTYPE_F32:
        raise FormatError(f"{path}: unknown dtype tag {dtype}")
    if ndim < 1 or ndim > _MAX_NDIM:
        raise FormatError(f"{path}: ndim {ndim} outside 1..{_MAX_NDIM}")
    dims_end = _HEADER.size + 4 * ndim
    if len(blob) < dims_end:
        raise FormatError(f"{path}: truncated dimension list")
    dims = struct.unpack_from(f"<{ndim}I", blob, _HEADER.size)
    if any(d == 0 for d in dims):
        raise FormatError(f"{path}: zero-sized dimension in {dims}")
    count = int(np.prod(dims, dtype=np.int64))
    expected = dims_end + 4 * count
    if len(blob) != expected:
        raise FormatError(
            f"{path}: payload is {len(blob) - dims_end} bytes, expected {4 * count}"
        )
    flat = np.frombuffer(blob, dtype="<f4", count=count, offset=dims_end)
    return flat.astype(np.float64).reshape(dims)

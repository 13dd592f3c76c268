"""Bit-exact serialization of matrices and masks (SSWT files).

File layout, all little-endian, no padding:

    magic    4 bytes     b"SSWT"
    version  u32         1
    dtype    u32         1 (float64)
    ndim     u32         2
    dims     2 x u64     rows, cols
    payload  rows*cols x f64, row-major

Matrices are plain 2-D float64 arrays. Masks use the same container with
every entry exactly 0.0 or 1.0. Save followed by load reproduces the input
bit for bit, so cross-checks elsewhere in the package never need an I/O
tolerance.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionOverflow,
    InvalidConfig,
    IoFailure,
    MalformedHeader,
    NonBinaryEntry,
    NonFiniteValue,
    ShapeMismatch,
    TruncatedPayload,
)

MAGIC = b"SSWT"
FORMAT_VERSION = 1
DTYPE_F64 = 1
_HEADER = struct.Struct("<4sIIIQQ")

# Sanity cap on rows*cols; guards against allocating on absurd headers.
MAX_ELEMENTS = 2**40


@dataclass(frozen=True)
class CalibrationMeta:
    """Shape bookkeeping for a calibration batch of n_samples sequences."""

    n_samples: int
    seq_len: int
    total_cols: int

    def __post_init__(self):
        if self.n_samples < 1 or self.seq_len < 1:
            raise InvalidConfig("n_samples and seq_len must be >= 1")
        if self.total_cols != self.n_samples * self.seq_len:
            raise InvalidConfig(
                f"total_cols {self.total_cols} != "
                f"{self.n_samples} * {self.seq_len}"
            )

    @classmethod
    def from_counts(cls, n_samples: int, seq_len: int) -> "CalibrationMeta":
        return cls(n_samples, seq_len, n_samples * seq_len)


def _as_matrix(m) -> np.ndarray:
    arr = np.ascontiguousarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D matrix, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeMismatch(f"matrix dimensions must be positive, got {arr.shape}")
    return arr


def save_matrix(m, path) -> None:
    """Write a 2-D float64 matrix to an SSWT file."""
    arr = _as_matrix(m)
    rows, cols = arr.shape
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, DTYPE_F64, 2, rows, cols)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(arr.astype("<f8", copy=False).tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_matrix(path) -> np.ndarray:
    """Read an SSWT file back into a 2-D float64 array.

    Raises MalformedHeader, DimensionOverflow, TruncatedPayload or
    NonFiniteValue when the file does not hold a finite matrix.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    if len(raw) < _HEADER.size:
        raise MalformedHeader(f"{path}: file shorter than header ({len(raw)} bytes)")
    magic, version, dtype, ndim, rows, cols = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise MalformedHeader(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise MalformedHeader(f"{path}: unsupported version {version}")
    if dtype != DTYPE_F64:
        raise MalformedHeader(f"{path}: unsupported dtype code {dtype}")
    if ndim != 2:
        raise MalformedHeader(f"{path}: expected ndim=2, got {ndim}")
    if rows == 0 or cols == 0:
        raise MalformedHeader(f"{path}: zero dimension {rows}x{cols}")
    if rows * cols > MAX_ELEMENTS:
        raise DimensionOverflow(f"{path}: {rows}x{cols} exceeds element budget")

    payload = raw[_HEADER.size:]
    expected = rows * cols * 8
    if len(payload) < expected:
        raise TruncatedPayload(
            f"{path}: expected {rows * cols} values, got {len(payload) // 8}"
        )
    if len(payload) > expected:
        raise MalformedHeader(f"{path}: {len(payload) - expected} trailing bytes")

    arr = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(rows, cols)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{path}: payload contains NaN or infinity")
    return arr


def save_mask(mask, path) -> None:
    """Write a binary mask; entries must be exactly 0.0 or 1.0."""
    arr = _as_matrix(mask)
    _check_binary(arr, str(path))
    save_matrix(arr, path)


def load_mask(path) -> np.ndarray:
    """Read a mask file, enforcing the binary-entry invariant."""
    arr = load_matrix(path)
    _check_binary(arr, str(path))
    return arr


def _check_binary(arr: np.ndarray, origin: str) -> None:
    bad = (arr != 0.0) & (arr != 1.0)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise NonBinaryEntry(f"{origin}: entry ({i},{j}) = {arr[i, j]!r} is not 0.0/1.0")

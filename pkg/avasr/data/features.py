"""Binary feature matrix files.

Layout: a 16-byte header ``magic (4s) | rows (u32) | cols (u32) | reserved (u32)``
followed by ``rows * cols`` little-endian float32 values in row-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from avasr.exceptions import IngestionError


MAGIC = b"AVFT"
_HEADER = struct.Struct("<4sIII")


def write_features(path: Path, matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix, dtype="<f4")
    if matrix.ndim != 2:
        raise IngestionError(
            f"Feature matrix must be 2-D, got shape {matrix.shape}",
            error_code="BAD_FEATURE_SHAPE",
            details={"path": str(path), "shape": list(matrix.shape)},
        )
    rows, cols = matrix.shape
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(_HEADER.pack(MAGIC, rows, cols, 0) + matrix.tobytes(order="C"))


def read_features(path: Path) -> np.ndarray:
    """Read a feature file into a float32 ``[rows, cols]`` array."""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise IngestionError(
            f"Cannot read feature file {path}: {e}",
            error_code="FEATURE_READ_ERROR",
            details={"path": str(path)},
        ) from e
    if len(raw) < _HEADER.size:
        raise IngestionError(
            f"Feature file {path} is truncated",
            error_code="FEATURE_TRUNCATED",
            details={"path": str(path), "bytes": len(raw)},
        )
    magic, rows, cols, _ = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise IngestionError(
            f"Feature file {path} has bad magic {magic!r}",
            error_code="FEATURE_BAD_MAGIC",
            details={"path": str(path)},
        )
    expected = _HEADER.size + 4 * rows * cols
    if len(raw) != expected:
        raise IngestionError(
            f"Feature file {path} has {len(raw)} bytes, header implies {expected}",
            error_code="FEATURE_SIZE_MISMATCH",
            details={"path": str(path), "rows": rows, "cols": cols},
        )
    data = np.frombuffer(raw, dtype="<f4", count=rows * cols, offset=_HEADER.size)
    return data.reshape(rows, cols).astype(np.float32)

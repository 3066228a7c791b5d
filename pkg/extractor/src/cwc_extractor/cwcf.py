"""CWCF feature-file and label-file writers.

Independent implementation of the interchange contract consumed by the
classifier package: magic ``CWCF``, version u32 = 1, dtype u8 (1 = float32),
rows u64, cols u64, all little-endian, column-major payload.  Features are
written at 32-bit precision (inference is natively 32-bit; the consumer
widens on load).  Writes are atomic: temp file in the target directory,
then rename.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"CWCF"
VERSION = 1
DTYPE_F32 = 1
_HEADER = struct.Struct("<4sIBQQ")


def _atomic_write(path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_features(columns: np.ndarray, path) -> None:
    """Write a (d, n) float array as a 32-bit CWCF file."""
    columns = np.asarray(columns, dtype=np.float32)
    if columns.ndim != 2 or columns.shape[0] < 1 or columns.shape[1] < 1:
        raise ValueError(f"expected a nonempty 2-D (d, n) array, got shape {columns.shape}")
    d, n = columns.shape
    header = _HEADER.pack(MAGIC, VERSION, DTYPE_F32, d, n)
    _atomic_write(path, header + columns.tobytes(order="F"))


def write_labels(labels, path) -> None:
    """Write integer labels, one per line."""
    text = "".join(f"{int(label)}\n" for label in labels)
    _atomic_write(path, text.encode("utf-8"))

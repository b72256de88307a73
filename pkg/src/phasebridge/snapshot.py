"""Binary grid snapshots.

Layout (little-endian throughout): an 8-byte magic ``MKSNAP01``, then nx
and nv as unsigned 64-bit integers, then the time stamp as a 64-bit float
(32 header bytes total), followed by nx*nv 64-bit floats in row-major
order (x outer, v inner).  The format is bit-exact: writing the same
array twice produces identical bytes.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import DensityArray, PhaseGrid

MAGIC = b"MKSNAP01"
_HEADER = struct.Struct("<8sQQd")


def write_snapshot(path, t: float, values: np.ndarray) -> None:
    """Write a (nx, nv) float array with its time stamp."""
    values = np.ascontiguousarray(values, dtype="<f8")
    if values.ndim != 2:
        raise ValueError("write_snapshot: values must be 2-D (nx, nv)")
    nx, nv = values.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, nx, nv, float(t)))
        fh.write(values.tobytes(order="C"))


def read_snapshot(path) -> tuple[float, DensityArray]:
    """Read a snapshot back as (t, DensityArray on the matching PhaseGrid)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"snapshot {path}: truncated header")
    magic, nx, nv, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"snapshot {path}: bad magic {magic!r}")
    expected = _HEADER.size + 8 * nx * nv
    if len(raw) != expected:
        raise ValueError(f"snapshot {path}: expected {expected} bytes, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(nx, nv).copy()
    return t, DensityArray(PhaseGrid(int(nx), int(nv)), values)

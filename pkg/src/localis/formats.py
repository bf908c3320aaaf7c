"""On-disk formats: CSV and compact little-endian binaries.

``LOCF`` (functions / masks): 16-byte header ``magic, version, m, N`` (u32 each
after the magic) followed by N rows of ``m`` coordinates and one value, all
float64.

``LOCM`` (matrices): 16-byte header ``magic, version, rows, cols`` followed by
the row-major float64 entries.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .function_space import GridSpec, RegionMask, SampledFunction

FUNC_MAGIC = b"LOCF"
MATRIX_MAGIC = b"LOCM"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


def _check_real(values):
    if np.iscomplexobj(values):
        if np.any(np.imag(values) != 0):
            raise ValueError("binary formats store real doubles only")
        values = np.real(values)
    return np.ascontiguousarray(values, dtype="<f8")


def write_function(path, f: SampledFunction | RegionMask):
    values = f.member.astype(float) if isinstance(f, RegionMask) else _check_real(f.values)
    pts = f.grid.points
    payload = np.column_stack([pts, values]).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FUNC_MAGIC, VERSION, pts.shape[1], pts.shape[0]))
        fh.write(payload.tobytes())


def read_function_array(path) -> tuple[np.ndarray, np.ndarray]:
    """Return (points, values) from a LOCF file."""
    data = Path(path).read_bytes()
    magic, version, m, n = _HEADER.unpack_from(data)
    if magic != FUNC_MAGIC:
        raise ValueError(f"{path}: not a LOCF file")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported LOCF version {version}")
    arr = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if arr.size != n * (m + 1):
        raise ValueError(f"{path}: truncated payload")
    arr = arr.reshape(n, m + 1)
    return arr[:, :m].copy(), arr[:, m].copy()


def read_function(path, grid: GridSpec, p: float = 2.0) -> SampledFunction:
    pts, vals = read_function_array(path)
    _match_points(grid, pts, path)
    return SampledFunction(grid, vals, p)


def read_mask(path, grid: GridSpec) -> RegionMask:
    pts, vals = read_function_array(path)
    _match_points(grid, pts, path)
    return RegionMask(grid, vals != 0)


def _match_points(grid, pts, path):
    if pts.shape != grid.points.shape or not np.array_equal(pts, grid.points):
        raise ValueError(f"{path}: sample points do not match the grid")


def write_function_csv(path, f: SampledFunction | RegionMask):
    values = f.member.astype(int) if isinstance(f, RegionMask) else f.values
    m = f.grid.dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(m)] + ["value"])
        for pt, v in zip(f.grid.points, values):
            w.writerow([repr(float(c)) for c in pt] + [repr(v.item() if hasattr(v, "item") else v)])


def read_function_csv(path, grid: GridSpec, p: float = 2.0) -> SampledFunction:
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    _match_points(grid, raw[:, :-1], path)
    return SampledFunction(grid, raw[:, -1], p)


def write_matrix(path, A):
    A = _check_real(np.atleast_2d(A.toarray() if hasattr(A, "toarray") else A))
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MATRIX_MAGIC, VERSION, *A.shape))
        fh.write(A.tobytes())


def read_matrix(path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, version, rows, cols = _HEADER.unpack_from(data)
    if magic != MATRIX_MAGIC:
        raise ValueError(f"{path}: not a LOCM file")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported LOCM version {version}")
    arr = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if arr.size != rows * cols:
        raise ValueError(f"{path}: truncated payload")
    return arr.reshape(rows, cols).copy()


def write_matrix_csv(path, A):
    A = np.atleast_2d(A.toarray() if hasattr(A, "toarray") else A)
    np.savetxt(path, A, delimiter=",", fmt="%.17g")


def write_singular_values_csv(path, sigma):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "sigma"])
        for i, s in enumerate(sigma):
            w.writerow([i, repr(float(s))])

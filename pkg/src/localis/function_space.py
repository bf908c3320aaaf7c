"""Discretised L^p(G): uniform grids in exponential coordinates, sampled
functions, region masks and the two invariant pairings on the scaled group.

Grid points along coordinate ``c`` are ``-R_c + j h_c`` for ``j = 0 .. 2R_c/h_c - 1``
and every cell carries the Haar weight ``prod(h)`` (Lebesgue measure in
exponential coordinates). Functions are zero outside the grid.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .group_core import Group

DEFAULT_POINT_CAP = 2 ** 20
LATTICE_TOL = 1e-9


class ResourceLimitError(RuntimeError):
    """Raised when a requested grid exceeds the configured point cap."""


def _per_coordinate(value, m: int, name: str) -> tuple:
    arr = np.broadcast_to(np.asarray(value, dtype=float), (m,)) if np.ndim(value) == 0 \
        else np.asarray(value, dtype=float)
    if arr.shape != (m,):
        raise ValueError(f"{name} must be a scalar or have {m} entries, got {value!r}")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be positive, got {value!r}")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class GridSpec:
    group: Group
    spacing: tuple
    extent: tuple

    @cached_property
    def shape(self) -> tuple:
        return tuple(int(round(2 * R / h)) for h, R in zip(self.spacing, self.extent))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def dim(self) -> int:
        return self.group.dim

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def axes(self) -> list[np.ndarray]:
        return [-R + h * np.arange(n) for h, R, n in zip(self.spacing, self.extent, self.shape)]

    @cached_property
    def points(self) -> np.ndarray:
        """All grid points, shape (N, m), in C order of the multi-index."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([c.ravel() for c in mesh], axis=-1)

    def lattice_coords(self, points) -> np.ndarray:
        """Fractional multi-indices of arbitrary points."""
        points = np.asarray(points, dtype=float)
        return (points + np.asarray(self.extent)) / np.asarray(self.spacing)

    def on_lattice(self, points) -> np.ndarray:
        u = self.lattice_coords(points)
        return np.all(np.abs(u - np.rint(u)) < LATTICE_TOL, axis=-1)

    def index_of(self, points, require_lattice: bool = True) -> np.ndarray:
        """Flat grid index of each point, or -1 when it is off the lattice or
        outside the extent."""
        u = self.lattice_coords(points)
        j = np.rint(u)
        ok = np.all((j >= 0) & (j < np.asarray(self.shape)), axis=-1)
        if require_lattice:
            ok &= np.all(np.abs(u - j) < LATTICE_TOL, axis=-1)
        j = np.where(ok[..., None], j, 0).astype(np.int64)
        flat = np.ravel_multi_index(tuple(np.moveaxis(j, -1, 0)), self.shape)
        return np.where(ok, flat, -1)

    def contains(self, points) -> np.ndarray:
        u = self.lattice_coords(points)
        return np.all((u > -LATTICE_TOL) & (u < np.asarray(self.shape) - 1 + LATTICE_TOL), axis=-1)

    def interior(self, margin: float) -> np.ndarray:
        """Boolean mask of points at distance >= margin (per coordinate) from the boundary."""
        lo = -np.asarray(self.extent) + margin
        hi = np.asarray(self.extent) - np.asarray(self.spacing) - margin
        p = self.points
        return np.all((p >= lo - LATTICE_TOL) & (p <= hi + LATTICE_TOL), axis=-1)

    def to_dict(self) -> dict:
        return {"group": self.group.to_dict(), "h": list(self.spacing), "R": list(self.extent)}


def make_grid(G: Group, h, R, cap: int = DEFAULT_POINT_CAP) -> GridSpec:
    """Uniform grid on [-R, R)^m with spacing h (scalars or per-coordinate)."""
    spacing = _per_coordinate(h, G.dim, "spacing h")
    extent = _per_coordinate(R, G.dim, "extent R")
    counts = []
    for hc, Rc in zip(spacing, extent):
        q = 2 * Rc / hc
        if abs(q - round(q)) > 1e-9 or round(q) < 1:
            raise ValueError(f"2R/h must be a positive integer, got 2*{Rc}/{hc} = {q}")
        counts.append(int(round(q)))
    total = int(np.prod(counts))
    if total > cap:
        raise ResourceLimitError(f"grid has {total} points, exceeding the cap of {cap}")
    return GridSpec(G, spacing, extent)


@dataclass
class SampledFunction:
    grid: GridSpec
    values: np.ndarray
    p: float = 2.0

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.grid.size,):
            raise ValueError(
                f"expected {self.grid.size} samples, got array of shape {self.values.shape}"
            )
        if self.p < 1:
            raise ValueError(f"exponent p must be >= 1, got {self.p}")

    @classmethod
    def from_callable(cls, grid: GridSpec, fn, p: float = 2.0) -> "SampledFunction":
        return cls(grid, np.asarray(fn(grid.points), dtype=float).reshape(grid.size), p)

    def with_values(self, values) -> "SampledFunction":
        return SampledFunction(self.grid, values, self.p)


@dataclass
class RegionMask:
    grid: GridSpec
    member: np.ndarray
    truncated: int = field(default=0, compare=False)

    def __post_init__(self):
        self.member = np.asarray(self.member, dtype=bool)
        if self.member.shape != (self.grid.size,):
            raise ValueError(
                f"mask must have {self.grid.size} entries, got shape {self.member.shape}"
            )

    def _same(self, other: "RegionMask"):
        if other.grid != self.grid:
            raise ValueError("masks live on different grids")

    def __and__(self, other):
        self._same(other)
        return RegionMask(self.grid, self.member & other.member)

    def __or__(self, other):
        self._same(other)
        return RegionMask(self.grid, self.member | other.member)

    def __invert__(self):
        return RegionMask(self.grid, ~self.member)

    def __sub__(self, other):
        self._same(other)
        return RegionMask(self.grid, self.member & ~other.member)

    @property
    def count(self) -> int:
        return int(self.member.sum())

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.member)

    @property
    def points(self) -> np.ndarray:
        return self.grid.points[self.member]

    def is_empty(self) -> bool:
        return not self.member.any()

    def issubset(self, other: "RegionMask") -> bool:
        self._same(other)
        return not np.any(self.member & ~other.member)

    @classmethod
    def full(cls, grid):
        return cls(grid, np.ones(grid.size, bool))

    @classmethod
    def empty(cls, grid):
        return cls(grid, np.zeros(grid.size, bool))

    @classmethod
    def box(cls, grid: GridSpec, lo, hi):
        """Closed axis-aligned box [lo, hi] in exponential coordinates."""
        lo = np.broadcast_to(np.asarray(lo, float), (grid.dim,))
        hi = np.broadcast_to(np.asarray(hi, float), (grid.dim,))
        p = grid.points
        return cls(grid, np.all((p >= lo - LATTICE_TOL) & (p <= hi + LATTICE_TOL), axis=-1))


def lp_norm(f: SampledFunction) -> float:
    return float((np.sum(np.abs(f.values) ** f.p) * f.grid.cell_volume) ** (1.0 / f.p))


def project_region(F: RegionMask, f: SampledFunction) -> SampledFunction:
    if F.grid != f.grid:
        raise ValueError("mask and function live on different grids")
    return f.with_values(np.where(F.member, f.values, 0))


class PairingKind(enum.Enum):
    HAAR = "haar"
    HARDY = "hardy"


def _level_values(family, n_levels: int, size: int) -> np.ndarray:
    if isinstance(family, np.ndarray):
        arr = family
    else:
        arr = np.stack([f.values if isinstance(f, SampledFunction) else np.asarray(f)
                        for f in family])
    if arr.shape != (n_levels, size):
        raise ValueError(f"family must have shape ({n_levels}, {size}), got {arr.shape}")
    return arr


def haar_level_weights(t_levels: Sequence[float], k: int) -> np.ndarray:
    """Trapezoid weights for the scale measure dt / t^(k+1) on a decreasing list of levels."""
    t = np.asarray(t_levels, dtype=float)
    if len(t) == 1:
        return np.array([1.0 / t[0] ** (k + 1)])
    dt = np.abs(np.diff(t))
    w = np.zeros_like(t)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w / t ** (k + 1)


def pairing(kind: PairingKind | str, f1, f2, t_levels: Sequence[float], grid: GridSpec,
            richardson: bool = False) -> complex | float:
    """Invariant pairing of two functions on the scaled group sampled at ``t_levels``.

    ``f1`` and ``f2`` are families indexed by level: arrays of shape (L, N) or
    sequences of ``SampledFunction``.
    """
    kind = PairingKind(kind)
    t = np.asarray(t_levels, dtype=float)
    if t.size == 0:
        raise ValueError("pairing needs at least one t-level")
    if np.any(np.diff(t) >= 0):
        raise ValueError("t_levels must be strictly decreasing")
    a = _level_values(f1, t.size, grid.size)
    b = _level_values(f2, t.size, grid.size)
    per_level = np.sum(a * np.conj(b), axis=1) * grid.cell_volume
    if kind is PairingKind.HAAR:
        val = np.sum(per_level * haar_level_weights(t, grid.group.homogeneous_dim))
    else:
        val = per_level[-1]
        if richardson and t.size >= 2:
            # error assumed linear in t
            t0, t1 = t[-2], t[-1]
            val = per_level[-1] + (per_level[-1] - per_level[-2]) * t1 / (t0 - t1)
    return complex(val) if np.iscomplexobj(val) else float(val)


def left_shift_family(family: np.ndarray, grid: GridSpec, g) -> np.ndarray:
    """Apply the left shift f(t, x) -> f(t, g^{-1} x) at every level of a family."""
    G = grid.group
    src = grid.index_of(G.compose(G.inverse(g), grid.points))
    out = np.zeros_like(family)
    ok = src >= 0
    out[:, ok] = family[:, src[ok]]
    return out

"""Operator constructors on a grid and the finite-dimensional stand-ins for
compactness: singular-value proxies, local-type scores and self-covering
checks for windows.

Operators are dense ``(N, N)`` arrays acting on value vectors; an integral
operator with kernel ``K`` is stored as ``K(x_i, y_j) * cell_volume``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .function_space import LATTICE_TOL, GridSpec, RegionMask, SampledFunction
from .group_core import ScaledElement, act_on_points, pull_back_points
from .representation import check_aligned, pullback_index


# ---------------------------------------------------------------------------
# windows


def box_norm(group, points) -> np.ndarray:
    """Homogeneous box quasi-norm: max over coordinates of |c|^(1/degree)."""
    p = np.abs(np.asarray(points, dtype=float))
    return np.max(p ** (1.0 / group.degrees), axis=-1)


@dataclass(frozen=True)
class WindowSpec:
    """A bounded closed neighbourhood F_e of the identity.

    The set is described geometrically by ``{x : box_norm(x) <= radius}``
    (an interval in R^1, a homogeneous box on H^n), so its images under any
    scaled element can be formed exactly, including non-dyadic scales.
    """

    grid: GridSpec
    radius: float = 1.0
    r_cover: float | None = None

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"window radius must be positive, got {self.radius}")
        if self.grid.index_of(self.grid.group.identity) < 0:
            raise ValueError("the grid must contain the identity for a window to be anchored at it")

    def contains(self, points) -> np.ndarray:
        return box_norm(self.grid.group, points) <= self.radius * (1 + 1e-12)

    @property
    def mask(self) -> RegionMask:
        return RegionMask(self.grid, self.contains(self.grid.points))

    @property
    def indices(self) -> np.ndarray:
        return self.mask.indices

    @property
    def points(self) -> np.ndarray:
        return self.grid.points[self.indices]

    def image_mask(self, s: ScaledElement) -> RegionMask:
        """Grid points of F_(t,g) = (t,g).F_e, for any scale."""
        q = pull_back_points(s, self.grid.points, self.grid.group)
        return RegionMask(self.grid, self.contains(q))


# ---------------------------------------------------------------------------
# constructors


def multiplication_operator(a: SampledFunction) -> np.ndarray:
    return np.diag(np.asarray(a.values))


def projection_matrix(F: RegionMask) -> np.ndarray:
    return np.diag(F.member.astype(float))


def group_convolution(kernel: SampledFunction) -> np.ndarray:
    """(K f)(g) = sum_h k(h^{-1} g) f(h) dmu(h)."""
    grid = kernel.grid
    G = grid.group
    pts = grid.points
    rel = G.compose(G.inverse(pts)[None, :, :], pts[:, None, :])  # [i, j] = h_j^{-1} g_i
    idx = grid.index_of(rel)
    out = np.zeros((grid.size, grid.size), dtype=np.result_type(kernel.values, float))
    ok = idx >= 0
    out[ok] = kernel.values[idx[ok]]
    return out * grid.cell_volume


def shift_operator(grid: GridSpec, b) -> np.ndarray:
    """(S f)(x) = f(b^{-1} x), the left shift by a lattice element b."""
    check_aligned(grid, ScaledElement(1.0, tuple(np.atleast_1d(b))))
    idx, _ = pullback_index(grid, ScaledElement(1.0, tuple(np.atleast_1d(b))))
    S = np.zeros((grid.size, grid.size))
    rows = np.flatnonzero(idx >= 0)
    S[rows, idx[rows]] = 1.0
    return S


def hilbert_transform(grid: GridSpec) -> np.ndarray:
    """Principal-value midpoint discretisation of (1/pi) p.v. int f(y)/(x-y) dy."""
    if grid.group.kind != "euclidean" or grid.dim != 1:
        raise ValueError("the Hilbert transform is defined here on Euclidean(1) grids only")
    x = grid.points[:, 0]
    d = x[:, None] - x[None, :]
    with np.errstate(divide="ignore"):
        H = grid.spacing[0] / (np.pi * d)
    np.fill_diagonal(H, 0.0)
    return H


def finite_rank(columns: Sequence[SampledFunction], rows: Sequence[SampledFunction],
                grid: GridSpec | None = None) -> np.ndarray:
    """sum_i col_i (x) row_i, acting as f -> sum_i col_i <f, row_i>."""
    if len(columns) != len(rows):
        raise ValueError(f"got {len(columns)} columns but {len(rows)} rows")
    if not columns:
        if grid is None:
            raise ValueError("an empty finite-rank operator needs a grid")
        return np.zeros((grid.size, grid.size))
    grid = columns[0].grid
    C = np.stack([c.values for c in columns], axis=1)
    R = np.stack([r.values for r in rows], axis=0)
    return C @ np.conj(R) * grid.cell_volume


# ---------------------------------------------------------------------------
# masks


def transform_mask(s: ScaledElement, F: RegionMask) -> RegionMask:
    """Grid points of (t,g).F for dyadic t <= 1 and lattice g.

    A grid point x belongs to the image when its pull-back lies in F. Images
    of members that fall outside the extent are counted in ``truncated``.
    """
    grid = F.grid
    check_aligned(grid, s)
    idx, _ = pullback_index(grid, s)
    member = np.zeros(grid.size, bool)
    ok = idx >= 0
    member[ok] = F.member[idx[ok]]
    img = act_on_points(s, F.points, grid.group)
    lattice = grid.on_lattice(img)
    truncated = int(np.sum(lattice & (grid.index_of(img) < 0)))
    return RegionMask(grid, member, truncated=truncated)


# ---------------------------------------------------------------------------
# essential-norm proxy


def singular_values(A) -> np.ndarray:
    A = A.toarray() if hasattr(A, "toarray") else np.asarray(A)
    if A.size == 0:
        return np.zeros(0)
    return scipy.linalg.svdvals(A)


def enorm_proxy(A, rank: int = 0) -> float:
    """sigma_{rank+1}(A): operator-norm distance to matrices of rank <= rank."""
    n = min(A.shape) if A.ndim == 2 else 0
    if rank < 0:
        raise ValueError("rank must be non-negative")
    if rank >= max(A.shape):
        raise ValueError(f"rank {rank} must be smaller than the matrix size {A.shape}")
    s = singular_values(A)
    return float(s[rank]) if rank < n else 0.0


def _random_box_pair(grid: GridSpec, rng, separation, length_range, gap_extra):
    """Two axis-aligned boxes whose set distance is at least ``separation``."""
    m = grid.dim
    lo_all = -np.asarray(grid.extent)
    hi_all = np.asarray(grid.extent) - np.asarray(grid.spacing)
    axis = rng.integers(m)
    L1 = rng.uniform(*length_range, size=m)
    L2 = rng.uniform(*length_range, size=m)
    gap = separation + rng.uniform(0, gap_extra)
    span = L1[axis] + gap + L2[axis]
    width = hi_all - lo_all
    start = lo_all[axis] + rng.uniform(0, max(width[axis] - span, 0))
    lo1 = lo_all + rng.uniform(0, np.maximum(width - L1, 0))
    lo2 = lo_all + rng.uniform(0, np.maximum(width - L2, 0))
    lo1[axis], lo2[axis] = start, start + L1[axis] + gap
    if rng.random() < 0.5:
        lo1[axis], lo2[axis] = start + L2[axis] + gap, start
    return (lo1, lo1 + L1), (lo2, lo2 + L2)


def mask_distance(F1: RegionMask, F2: RegionMask) -> float:
    p1, p2 = F1.points, F2.points
    if len(p1) == 0 or len(p2) == 0:
        return np.inf
    return float(np.min(np.linalg.norm(p1[:, None, :] - p2[None, :, :], axis=-1)))


def local_type_score(A, grid: GridSpec, separation: float, rank: int = 0, trials: int = 64,
                     seed: int = 0, length_range=(0.5, 3.0), gap_extra: float = 2.0,
                     box_pairs=None) -> float:
    """Max over sampled disjoint box pairs (F1, F2) at distance >= separation of
    enorm_proxy(P_F1 A P_F2, rank).

    Box shapes are drawn from ``seed`` only, so scores at different separations
    are comparable pair by pair.
    """
    if separation < 2 * min(grid.spacing) - LATTICE_TOL:
        raise ValueError("separation must be at least two grid cells")
    A = np.asarray(A)
    rng = np.random.default_rng(seed)
    pairs = box_pairs if box_pairs is not None else [
        _random_box_pair(grid, rng, separation, length_range, gap_extra) for _ in range(trials)]
    best = 0.0
    for (lo1, hi1), (lo2, hi2) in pairs:
        F1 = RegionMask.box(grid, lo1, hi1)
        F2 = RegionMask.box(grid, lo2, hi2)
        if F1.is_empty() or F2.is_empty():
            continue
        block = A[np.ix_(F1.indices, F2.indices)]
        if rank >= max(block.shape):
            continue
        best = max(best, enorm_proxy(block, rank))
    return best


# ---------------------------------------------------------------------------
# self-covering


def find_cover_center(window: WindowSpec, target: RegionMask, r: float,
                      candidates: np.ndarray | None = None):
    """A lattice point g with F_(r,g) containing ``target``, or None.

    Candidates default to every grid point within reach of the target.
    """
    grid = window.grid
    pts = grid.points
    tpts = target.points
    if candidates is None:
        lo, hi = tpts.min(axis=0), tpts.max(axis=0)
        reach = r * window.radius ** grid.group.degrees * (1 + 1e-12) + np.asarray(grid.spacing)
        # the Heisenberg centre is sheared, so only degree-one coordinates prefilter
        lin = grid.group.degrees == 1
        near = np.all(((pts >= hi - reach) & (pts <= lo + reach))[:, lin], axis=-1)
        candidates = pts[near]
    G = grid.group
    for g in candidates:
        q = pull_back_points(ScaledElement(r, tuple(g)), tpts, G)
        if np.all(window.contains(q)):
            return np.asarray(g)
    return None


def self_covering_check(window: WindowSpec, r: float, samples: int | None = None,
                        seed: int = 0):
    """Check the r-self-covering property of the window.

    With ``samples=None`` every lattice offset g2 (with g1 = e, by left
    invariance) whose unit window meets F_e is examined; otherwise ``samples``
    random intersecting pairs are drawn. Returns ``(ok, witnesses)`` where each
    witness is ``(g1, g2, g)`` and ``g`` is None for a failed pair.
    """
    grid = window.grid
    G = grid.group
    e = G.identity
    if samples is None:
        # translates F_(1,g2) meeting F_e: g2 in F_e . F_e^{-1}, enumerated on the lattice
        reach = 2 * window.radius ** G.degrees * 2
        pts = grid.points
        cand = pts[np.all(np.abs(pts) <= reach, axis=-1)]
        pairs = [(e, g2) for g2 in cand]
    else:
        rng = np.random.default_rng(seed)
        # g1 must sit far enough inside for the union and its covers to fit on the grid
        interior = grid.points[grid.interior((r + 2) * window.radius)]
        if len(interior) == 0:
            raise ValueError(f"grid too small to sample pairs for r={r}")
        pairs = []
        while len(pairs) < samples:
            g1 = interior[rng.integers(len(interior))]
            off = rng.uniform(-2, 2, size=G.dim) * window.radius ** G.degrees
            g2 = G.compose(g1, off)
            u = grid.lattice_coords(g2)
            g2 = -np.asarray(grid.extent) + np.rint(u) * np.asarray(grid.spacing)
            pairs.append((g1, g2))
    witnesses = []
    ok = True
    for g1, g2 in pairs:
        F1 = window.image_mask(ScaledElement(1.0, tuple(g1)))
        F2 = window.image_mask(ScaledElement(1.0, tuple(g2)))
        if (F1 & F2).is_empty():
            continue
        g = find_cover_center(window, F1 | F2, r)
        witnesses.append((np.asarray(g1), np.asarray(g2), g))
        ok &= g is not None
    return ok, witnesses

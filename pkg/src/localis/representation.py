"""The isometric action of the scaled group on sampled functions and the
induced actions on operator matrices.

``pi(t, g) f (x) = t^(-k/p) f(tau_{1/t}(g^{-1} x))`` with ``k`` the homogeneous
dimension. In exact mode (dyadic ``t <= 1``, ``g`` on the lattice) the
pulled-back point of every grid point is again a grid point, so the matrix of
``pi(t, g)`` is a 0/1 selection scaled by ``t^(-k/p)`` and all group identities
hold to round-off. Scale factors are kept apart from the selection structure
so that products like ``pi(s) P pi(s)^{-1}`` come out with exact 0/1 entries.

For ``t > 1`` the pull-back contracts and lands between lattice sites; such
rows are *unresolved* and set to zero when explicitly allowed. The resulting
matrix is still the exact restriction of ``pi(t, g)`` to resolved rows, and
``pi(s) pi(s^{-1}) = I`` holds exactly on the interior.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .function_space import GridSpec, SampledFunction
from .group_core import ScaledElement, pull_back_points, scaled_inverse

EXACT = "exact"
INTERPOLATED = "interpolated"


@dataclass(frozen=True)
class RepParams:
    grid: GridSpec
    p: float = 2.0
    mode: str = EXACT

    def __post_init__(self):
        if self.mode not in (EXACT, INTERPOLATED):
            raise ValueError(f"unknown representation mode {self.mode!r}")
        if self.p < 1:
            raise ValueError(f"exponent p must be >= 1, got {self.p}")

    @property
    def k_over_p(self) -> float:
        return self.grid.group.homogeneous_dim / self.p


def dyadic_exponent(t: float) -> int | None:
    """j with t == 2**j exactly, or None."""
    m, e = math.frexp(t)
    return e - 1 if m == 0.5 else None


def scale_factor(params: RepParams, t: float) -> float:
    return t ** (-params.k_over_p)


def check_aligned(grid: GridSpec, s: ScaledElement, allow_expansion: bool = False):
    j = dyadic_exponent(s.t)
    if j is None:
        raise ValueError(f"scale t={s.t} is not dyadic; use interpolated mode")
    if j > 0 and not allow_expansion:
        raise ValueError(f"scale t={s.t} > 1 is not exact on a fixed grid")
    if len(s.g) != grid.dim:
        raise ValueError(f"group element has {len(s.g)} coordinates, grid has {grid.dim}")
    if not grid.on_lattice(np.array(s.g)):
        raise ValueError(f"group element {s.g} is not on the grid lattice")


def pullback_index(grid: GridSpec, s: ScaledElement, allow_unresolved: bool = False):
    """Grid index of tau_{1/t}(g^{-1} x) for every grid point x.

    Returns (index, resolved): index is -1 for points outside the extent or
    unresolved; resolved flags points whose pull-back is a lattice point.
    """
    q = pull_back_points(s, grid.points, grid.group)
    resolved = grid.on_lattice(q)
    if not allow_unresolved and not resolved.all():
        raise ValueError(
            f"pull-back of ({s.t}, {s.g}) leaves the lattice at {int((~resolved).sum())} points;"
            " the grid is not closed under this group action"
        )
    idx = grid.index_of(q)
    return idx, resolved


def selection_matrix(grid: GridSpec, s: ScaledElement, allow_unresolved: bool = False):
    """0/1 sparse matrix of f -> f(tau_{1/t}(g^{-1} x))."""
    check_aligned(grid, s, allow_expansion=allow_unresolved)
    idx, _ = pullback_index(grid, s, allow_unresolved)
    rows = np.flatnonzero(idx >= 0)
    return sp.csr_matrix((np.ones(rows.size), (rows, idx[rows])), shape=(grid.size, grid.size))


def interpolation_matrix(grid: GridSpec, points) -> sp.csr_matrix:
    """Multilinear interpolation of grid samples at arbitrary points (zero outside)."""
    u = grid.lattice_coords(points)
    base = np.floor(u)
    frac = u - base
    shape = np.asarray(grid.shape)
    rows, cols, vals = [], [], []
    n = u.shape[0]
    for corner in itertools.product((0, 1), repeat=grid.dim):
        c = np.asarray(corner)
        w = np.prod(np.where(c == 1, frac, 1.0 - frac), axis=-1)
        j = base + c
        ok = (w != 0) & np.all((j >= 0) & (j < shape), axis=-1)
        if not ok.any():
            continue
        jj = j[ok].astype(np.int64)
        rows.append(np.flatnonzero(ok))
        cols.append(np.ravel_multi_index(tuple(jj.T), grid.shape))
        vals.append(w[ok])
    if not rows:
        return sp.csr_matrix((n, grid.size))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, grid.size),
    )


def act_matrix(params: RepParams, s: ScaledElement, allow_unresolved: bool = False):
    """Sparse N x N matrix of pi(t, g) in the grid basis."""
    grid = params.grid
    if params.mode == INTERPOLATED:
        q = pull_back_points(s, grid.points, grid.group)
        return (scale_factor(params, s.t) * interpolation_matrix(grid, q)).tocsr()
    return (scale_factor(params, s.t) * selection_matrix(grid, s, allow_unresolved)).tocsr()


def act(params: RepParams, s: ScaledElement, f: SampledFunction) -> SampledFunction:
    grid = params.grid
    if f.grid != grid:
        raise ValueError("function lives on a different grid")
    if params.mode == INTERPOLATED:
        return f.with_values(act_matrix(params, s) @ f.values)
    check_aligned(grid, s)
    idx, _ = pullback_index(grid, s)
    out = np.zeros_like(f.values, dtype=np.result_type(f.values, float))
    ok = idx >= 0
    out[ok] = scale_factor(params, s.t) * f.values[idx[ok]]
    return f.with_values(out)


def _check_operator(grid: GridSpec, A):
    if A.shape != (grid.size, grid.size):
        raise ValueError(f"operator of shape {A.shape} does not act on a grid of {grid.size} points")


def _sandwich(left_sel, A, right_sel, factor):
    out = left_sel @ A @ right_sel
    if sp.issparse(out):
        return (factor * out).tocsr()
    return factor * np.asarray(out)


def double_act(params: RepParams, left: ScaledElement, right: ScaledElement, A):
    """A -> pi(left)^{-1} A pi(right).

    The left factor pi(left^{-1}) has scale 1/t >= 1, so its unresolved rows
    are zero; the entries that survive are exact.
    """
    grid = params.grid
    _check_operator(grid, A)
    G = grid.group
    linv = scaled_inverse(left, G)
    if params.mode == INTERPOLATED:
        return act_matrix(params, linv) @ A @ act_matrix(params, right)
    factor = (left.t / right.t) ** params.k_over_p
    return _sandwich(selection_matrix(grid, linv, allow_unresolved=True), A,
                     selection_matrix(grid, right), factor)


def operator_action(params: RepParams, left: ScaledElement, right: ScaledElement, A):
    """A -> pi(left) A pi(right)^{-1}, the action of G x G on operators that is a
    homomorphism; double_act(l, r, A) == operator_action(l^{-1}, r^{-1}, A)."""
    grid = params.grid
    _check_operator(grid, A)
    G = grid.group
    rinv = scaled_inverse(right, G)
    if params.mode == INTERPOLATED:
        return act_matrix(params, left) @ A @ act_matrix(params, rinv)
    factor = (right.t / left.t) ** params.k_over_p
    return _sandwich(selection_matrix(grid, left), A,
                     selection_matrix(grid, rinv, allow_unresolved=True), factor)


def conjugate(params: RepParams, s: ScaledElement, A):
    """pi(s) A pi(s)^{-1}."""
    return operator_action(params, s, s, A)

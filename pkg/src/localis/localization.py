"""Simonenko presymbols and symbols of operator matrices.

The presymbol of ``A`` at ``(l; r)`` is ``P_e pi(l)^{-1} A pi(r) P_e`` stored as a
``w x w`` block over the window points ``xi`` of ``F_e``. Entry ``[xi, eta]``
equals ``(t_l/t_r)^(k/p) A[l.xi, r.eta]`` where ``l.xi = g_l tau_{t_l}(xi)``.
For ``t < 1`` only the window points with ``l.xi`` on the grid are resolved;
the other rows and columns are zero, exactly as in the product of the
representation matrices.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .formats import read_matrix, write_matrix
from .function_space import GridSpec, RegionMask
from .group_core import ScaledElement, act_on_points
from .operator_lab import WindowSpec, enorm_proxy, find_cover_center
from .representation import RepParams, act_matrix, check_aligned


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("LOCALIS_THREADS", "1")))
    except ValueError:
        return 1


def window_targets(window: WindowSpec, s: ScaledElement) -> np.ndarray:
    """Grid index of s.xi for each window point xi; -1 if unresolved or truncated."""
    grid = window.grid
    return grid.index_of(act_on_points(s, window.points, grid.group))


def resolved(window: WindowSpec, s: ScaledElement) -> np.ndarray:
    return window_targets(window, s) >= 0


def _gather(A, rows, cols) -> np.ndarray:
    if sp.issparse(A):
        return A.tocsr()[rows][:, cols].toarray()
    return np.asarray(A)[np.ix_(rows, cols)]


def presymbol(A, left: ScaledElement, right: ScaledElement, window: WindowSpec,
              p: float = 2.0) -> np.ndarray:
    grid = window.grid
    if A.shape != (grid.size, grid.size):
        raise ValueError(f"operator of shape {A.shape} does not match the grid")
    check_aligned(grid, left, allow_expansion=True)
    check_aligned(grid, right, allow_expansion=True)
    ri = window_targets(window, left)
    ci = window_targets(window, right)
    rok, cok = ri >= 0, ci >= 0
    w = len(ri)
    out = np.zeros((w, w), dtype=np.result_type(A.dtype, float))
    factor = (left.t / right.t) ** (grid.group.homogeneous_dim / p)
    out[np.ix_(rok, cok)] = factor * _gather(A, ri[rok], ci[cok])
    return out


def symbol(A, s: ScaledElement, window: WindowSpec, p: float = 2.0) -> np.ndarray:
    return presymbol(A, s, s, window, p)


def alt_presymbol(A, left: ScaledElement, right: ScaledElement, window: WindowSpec):
    """P_(t,g) A P_(t',g') as a full N x N matrix."""
    pl = window.image_mask(left).member.astype(float)
    pr = window.image_mask(right).member.astype(float)
    if sp.issparse(A):
        return (sp.diags(pl) @ A @ sp.diags(pr)).toarray()
    return pl[:, None] * np.asarray(A) * pr[None, :]


def embed_block(block, window: WindowSpec, left: ScaledElement, right: ScaledElement | None = None,
                p: float = 2.0) -> np.ndarray:
    """Inverse of the window restriction: pi(l) iota B iota^T pi(r)^{-1} as N x N.

    Applied to a symbol this gives back P_(t,g) A P_(t,g).
    """
    right = left if right is None else right
    grid = window.grid
    ri = window_targets(window, left)
    ci = window_targets(window, right)
    rok, cok = ri >= 0, ci >= 0
    out = np.zeros((grid.size, grid.size), dtype=np.result_type(block.dtype, float))
    factor = (right.t / left.t) ** (grid.group.homogeneous_dim / p)
    out[np.ix_(ri[rok], ci[cok])] = factor * block[np.ix_(rok, cok)]
    return out


# ---------------------------------------------------------------------------
# symbol fields


@dataclass
class SymbolField:
    window: WindowSpec
    t_levels: list
    lattice: np.ndarray
    blocks: dict = field(default_factory=dict)
    p: float = 2.0

    def block(self, i_t: int, i_g: int) -> np.ndarray:
        return self.blocks[(i_t, i_g)]

    def element(self, i_t: int, i_g: int) -> ScaledElement:
        return ScaledElement(self.t_levels[i_t], tuple(self.lattice[i_g]))

    def manifest(self) -> dict:
        grid = self.window.grid
        return {
            "grid": grid.to_dict(),
            "window": {"shape": "box", "radius": self.window.radius},
            "t_levels": [float(t) for t in self.t_levels],
            "lattice": [[float(c) for c in g] for g in self.lattice],
            "p": self.p,
            "block_size": int(len(self.window.indices)),
            "blocks": {f"t{i}_g{j}.locm": [i, j] for (i, j) in sorted(self.blocks)},
        }

    def save(self, directory) -> Path:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        for (i, j) in sorted(self.blocks):
            write_matrix(d / f"t{i}_g{j}.locm", self.blocks[(i, j)])
        (d / "field.json").write_text(json.dumps(self.manifest(), indent=2, sort_keys=True))
        return d

    @classmethod
    def load(cls, directory) -> "SymbolField":
        from .function_space import make_grid
        from .group_core import Group

        d = Path(directory)
        man = json.loads((d / "field.json").read_text())
        g = man["grid"]
        grid = make_grid(Group.from_dict(g["group"]), g["h"], g["R"])
        window = WindowSpec(grid, man["window"]["radius"])
        blocks = {tuple(ij): read_matrix(d / name) for name, ij in man["blocks"].items()}
        return cls(window, man["t_levels"], np.asarray(man["lattice"], float), blocks, man["p"])


def symbol_field(A, window: WindowSpec, t_levels: Sequence[float], lattice,
                 p: float = 2.0) -> SymbolField:
    lattice = np.atleast_2d(np.asarray(lattice, dtype=float))
    if lattice.shape[1] != window.grid.dim:
        lattice = lattice.reshape(-1, window.grid.dim)
    keys = [(i, j) for i in range(len(t_levels)) for j in range(len(lattice))]

    def one(key):
        i, j = key
        return symbol(A, ScaledElement(t_levels[i], tuple(lattice[j])), window, p)

    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            values = list(ex.map(one, keys))
    else:
        values = [one(k) for k in keys]
    return SymbolField(window, list(t_levels), lattice, dict(zip(keys, values)), p)


# ---------------------------------------------------------------------------
# local equivalence


@dataclass
class EquivalenceReport:
    point: list
    t_levels: list
    decay: list
    verdict: bool
    tolerance: float
    rank: int

    def to_dict(self) -> dict:
        return {
            "point": [float(c) for c in self.point],
            "t_levels": [float(t) for t in self.t_levels],
            "decay": [float(v) for v in self.decay],
            "verdict": bool(self.verdict),
            "tolerance": float(self.tolerance),
            "rank": int(self.rank),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def decay_is_monotone(decay: Sequence[float], slack: float = 0.1) -> bool:
    return all(b <= (1 + slack) * a + 1e-14 for a, b in zip(decay, decay[1:]))


def local_equiv(A, B, g, window: WindowSpec, t_levels: Sequence[float], rank: int = 0,
                tol: float = 1e-2, p: float = 2.0) -> EquivalenceReport:
    D = A - B
    g = tuple(np.atleast_1d(np.asarray(g, dtype=float)))
    decay = [enorm_proxy(symbol(D, ScaledElement(t, g), window, p), rank) for t in t_levels]
    verdict = decay[-1] < tol and decay_is_monotone(decay)
    return EquivalenceReport(list(g), list(t_levels), decay, verdict, tol, rank)


# ---------------------------------------------------------------------------
# invariance


def _commutator_norm(C, interior, probes) -> float:
    C = C.toarray() if sp.issparse(C) else np.asarray(C)
    C = C[np.ix_(interior, interior)] if probes is None else C[interior]
    if probes is None:
        return float(np.linalg.norm(C, 2)) if C.size else 0.0
    P = np.atleast_2d(np.asarray(probes)).T  # N x n_probes
    num = np.linalg.norm(C @ P, axis=0)
    den = np.linalg.norm(P, axis=0)
    return float(np.max(num / den))


def invariance_scores(A, grid: GridSpec, t_samples: Sequence[float], g_samples, margin: float = 2.0,
                      probes=None, p: float = 2.0) -> tuple[float, float]:
    """(homogeneity, shift-invariance) defects normalised by ||A||.

    The commutators pi(t,e)A - A pi(t,e) and pi(1,g)A - A pi(1,g) are measured
    on the grid points at distance ``margin`` from the boundary, either in
    operator norm or, when ``probes`` (rows of sample values) are given, as
    the largest relative defect on those functions.
    """
    A = np.asarray(A)
    normA = float(np.linalg.norm(A, 2))
    if normA == 0:
        return 0.0, 0.0
    params = RepParams(grid, p)
    e = tuple(grid.group.identity)
    interior = grid.interior(margin)
    homog = 0.0
    for t in t_samples:
        P = act_matrix(params, ScaledElement(t, e))
        homog = max(homog, _commutator_norm(P @ A - A @ P, interior, probes))
    shift = 0.0
    for g in np.atleast_2d(np.asarray(g_samples, float)).reshape(-1, grid.dim):
        P = act_matrix(params, ScaledElement(1.0, tuple(g)))
        shift = max(shift, _commutator_norm(P @ A - A @ P, interior, probes))
    return homog / normA, shift / normA


# ---------------------------------------------------------------------------
# inclusion-exclusion


@dataclass(frozen=True)
class IETerm:
    """sign * prod_{k in members} P_{u_k} * (P_target^perp if complement)."""

    sign: int
    members: tuple
    complement: bool
    mask: np.ndarray

    @property
    def anchor(self) -> int:
        return self.members[0]


def inclusion_exclusion_decomposition(target: RegionMask, cover: Sequence[RegionMask]) -> list[IETerm]:
    """Signed projection products whose sum is exactly P_target.

    Uses P_F = P_U - P_U P_F^perp with U the union of the cover and
    P_U = sum over non-empty S of (-1)^(|S|+1) prod_{k in S} P_{u_k}. Products
    with empty support are dropped, so every term carries at least one P_{u_k}.
    """
    if not cover:
        raise ValueError("empty cover")
    union = np.zeros(target.grid.size, bool)
    for u in cover:
        if u.grid != target.grid:
            raise ValueError("cover sets live on a different grid")
        union |= u.member
    missing = target.member & ~union
    if missing.any():
        raise ValueError(f"cover misses {int(missing.sum())} point(s) of the target")
    terms = []

    def walk(start, members, inter):
        for k in range(start, len(cover)):
            nxt = inter & cover[k].member
            if not nxt.any():
                continue
            mem = members + (k,)
            sign = 1 if len(mem) % 2 == 1 else -1
            terms.append(IETerm(sign, mem, False, nxt))
            rest = nxt & ~target.member
            if rest.any():
                terms.append(IETerm(-sign, mem, True, rest))
            walk(k + 1, mem, nxt)

    walk(0, (), np.ones(target.grid.size, bool))
    return terms


def reconstruct_projection(terms: Sequence[IETerm], grid: GridSpec) -> np.ndarray:
    d = np.zeros(grid.size)
    for term in terms:
        d += term.sign * term.mask
    return np.diag(d)


def greedy_cover(window: WindowSpec, region: RegionMask, t: float) -> list[np.ndarray]:
    """Centres h_k in ``region`` whose windows F_(t,h_k) cover it."""
    covered = np.zeros(window.grid.size, bool)
    centers = []
    for idx in region.indices:
        if covered[idx]:
            continue
        h = window.grid.points[idx]
        covered |= window.image_mask(ScaledElement(t, tuple(h))).member
        centers.append(h)
    return centers


@dataclass
class ReductionTerm:
    center: np.ndarray
    pair: tuple
    left_coef: np.ndarray
    right_coef: np.ndarray


@dataclass
class PresymbolReduction:
    """Presymbol at (l; r) written as sum_m B_m S_A(t', h_m) C_m."""

    window: WindowSpec
    left: ScaledElement
    right: ScaledElement
    t_symbol: float
    cover_centers: list
    terms: list
    p: float = 2.0

    def assemble(self, symbol_at: Callable[[ScaledElement], np.ndarray]) -> np.ndarray:
        w = len(self.window.indices)
        out = np.zeros((w, w))
        cache = {}
        for term in self.terms:
            key = tuple(term.center)
            if key not in cache:
                cache[key] = symbol_at(ScaledElement(self.t_symbol, key))
            out = out + term.left_coef @ cache[key] @ term.right_coef
        return out

    def assemble_for(self, A) -> np.ndarray:
        return self.assemble(lambda s: symbol(A, s, self.window, self.p))


def reduce_presymbol(window: WindowSpec, left: ScaledElement, right: ScaledElement,
                     t_symbol: float, r: float = 2.0, p: float = 2.0) -> PresymbolReduction:
    """Express the presymbol at (l; r) through symbols at the single scale t_symbol.

    The windows F_l and F_r are covered by windows of scale t_symbol / r; both
    projections are expanded by inclusion-exclusion; products
    P_{u_k} A P_{u_l} of disjoint cover sets are dropped (they are compact for
    operators of local type) and each remaining one is rewritten through a
    window F_(t_symbol, h_m) containing u_k and u_l. The coefficients are the
    presymbols of the diagonal remainders and do not depend on A.
    """
    grid = window.grid
    F1 = window.image_mask(left)
    F2 = window.image_mask(right)
    t_cover = t_symbol / r
    centers = greedy_cover(window, F1 | F2, t_cover)
    cover = [window.image_mask(ScaledElement(t_cover, tuple(h))) for h in centers]

    def coefficients(F):
        local = [k for k, u in enumerate(cover) if (u & F).count]
        sub = [cover[k] for k in local]
        out = {}
        for term in inclusion_exclusion_decomposition(F, sub):
            k = local[term.anchor]
            out.setdefault(k, np.zeros(grid.size))
            out[k] += term.sign * term.mask
        return {k: v for k, v in out.items() if np.any(v)}

    Lk = coefficients(F1)
    Rl = coefficients(F2)
    union_pts = (F1 | F2).points
    terms = []
    for k, lv in sorted(Lk.items()):
        for l, rv in sorted(Rl.items()):
            pair_mask = cover[k] | cover[l]
            if (cover[k] & cover[l]).is_empty():
                continue
            h = find_cover_center(window, pair_mask, t_symbol, candidates=union_pts)
            if h is None:
                h = find_cover_center(window, pair_mask, t_symbol)
            if h is None:
                raise ValueError(f"no window of scale {t_symbol} covers cover sets {k} and {l}")
            sm = ScaledElement(t_symbol, tuple(h))
            B = presymbol(sp.diags(lv).tocsr(), left, sm, window, p)
            C = presymbol(sp.diags(rv).tocsr(), sm, right, window, p)
            terms.append(ReductionTerm(np.asarray(h), (k, l), B, C))
    return PresymbolReduction(window, left, right, t_symbol, centers, terms, p)

"""Reconstruction of operators from local data: envelopes over partitions and
the inverse covariant transform under the Hardy-type pairing."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .formats import read_matrix, write_matrix
from .function_space import GridSpec, PairingKind, RegionMask, haar_level_weights, make_grid
from .group_core import Group, ScaledElement
from .localization import SymbolField, embed_block
from .operator_lab import WindowSpec, enorm_proxy
from .representation import RepParams, conjugate


@dataclass
class Partition:
    cells: list
    anchors: np.ndarray

    def __post_init__(self):
        self.anchors = np.atleast_2d(np.asarray(self.anchors, dtype=float))
        if len(self.cells) != len(self.anchors):
            raise ValueError("each cell needs exactly one anchor")
        if not self.cells:
            return
        grid = self.cells[0].grid
        seen = np.zeros(grid.size, bool)
        for cell, x in zip(self.cells, self.anchors):
            if np.any(seen & cell.member):
                raise ValueError("partition cells overlap")
            seen |= cell.member
            j = grid.index_of(x)
            if j < 0 or not cell.member[j]:
                raise ValueError(f"anchor {x} is not a grid point of its cell")

    @property
    def domain(self) -> RegionMask:
        out = RegionMask.empty(self.cells[0].grid)
        for c in self.cells:
            out = out | c
        return out


def dyadic_partition(grid: GridSpec, lo, hi, depth: int) -> Partition:
    """Split the box [lo, hi) into 2^depth equal cells per axis; anchors are the
    cell centres snapped to the grid (ties round up)."""
    lo = np.broadcast_to(np.asarray(lo, float), (grid.dim,))
    hi = np.broadcast_to(np.asarray(hi, float), (grid.dim,))
    n = 2 ** depth
    width = (hi - lo) / n
    pts = grid.points
    inside = np.all((pts >= lo - 1e-12) & (pts < hi - 1e-12), axis=-1)
    cell_idx = np.floor((pts - lo) / width + 1e-12).astype(int)
    flat = np.where(inside, np.ravel_multi_index(tuple(np.clip(cell_idx, 0, n - 1).T), (n,) * grid.dim), -1)
    cells, anchors = [], []
    for c in range(n ** grid.dim):
        member = flat == c
        if not member.any():
            continue
        multi = np.array(np.unravel_index(c, (n,) * grid.dim))
        center = lo + (multi + 0.5) * width
        u = np.floor(grid.lattice_coords(center) + 0.5)
        snapped = -np.asarray(grid.extent) + u * np.asarray(grid.spacing)
        j = grid.index_of(snapped)
        if j < 0 or not member[j]:
            cand = pts[member]
            snapped = cand[np.argmin(np.linalg.norm(cand - center, axis=-1))]
        cells.append(RegionMask(grid, member))
        anchors.append(snapped)
    return Partition(cells, np.array(anchors))


def envelope_sum(P: Partition, locals_: Sequence) -> np.ndarray:
    """sum_j P_{u_j} A_j P_{u_j}."""
    if len(locals_) != len(P.cells):
        raise ValueError(f"{len(P.cells)} cells but {len(locals_)} local operators")
    grid = P.cells[0].grid
    out = np.zeros((grid.size, grid.size), dtype=np.result_type(*[np.asarray(a).dtype for a in locals_], float))
    for cell, A in zip(P.cells, locals_):
        ix = np.ix_(cell.indices, cell.indices)
        out[ix] += np.asarray(A)[ix]
    return out


def envelope_refine(A_target, local_rule: Callable[[np.ndarray], np.ndarray], grid: GridSpec,
                    lo, hi, depths: Sequence[int], rank: int = 0) -> list[dict]:
    """Convergence table of envelopes over dyadic partitions of the box [lo, hi).

    Errors are measured against the target compressed to the box.
    """
    rows = []
    for d in depths:
        P = dyadic_partition(grid, lo, hi, d)
        env = envelope_sum(P, [local_rule(x) for x in P.anchors])
        dom = P.domain.indices
        diff = (env - np.asarray(A_target))[np.ix_(dom, dom)]
        rows.append({
            "depth": int(d),
            "norm": float(np.linalg.norm(diff, 2)),
            "proxy": enorm_proxy(diff, rank),
        })
    return rows


# ---------------------------------------------------------------------------
# operator fields


@dataclass
class OperatorField:
    """Full-size operators A(t, g) over dyadic levels and a lattice."""

    grid: GridSpec
    t_levels: list
    lattice: np.ndarray
    values: dict = field(default_factory=dict)

    def element(self, i_t: int, i_g: int) -> ScaledElement:
        return ScaledElement(self.t_levels[i_t], tuple(self.lattice[i_g]))

    @classmethod
    def constant(cls, grid, t_levels, lattice, A) -> "OperatorField":
        lattice = np.asarray(lattice, float).reshape(-1, grid.dim)
        vals = {(i, j): A for i in range(len(t_levels)) for j in range(len(lattice))}
        return cls(grid, list(t_levels), lattice, vals)

    @classmethod
    def from_rule(cls, grid, t_levels, lattice, rule: Callable[[ScaledElement], np.ndarray]):
        lattice = np.asarray(lattice, float).reshape(-1, grid.dim)
        vals = {}
        for i, t in enumerate(t_levels):
            for j, g in enumerate(lattice):
                vals[(i, j)] = rule(ScaledElement(t, tuple(g)))
        return cls(grid, list(t_levels), lattice, vals)

    @classmethod
    def from_symbol_field(cls, sf: SymbolField) -> "OperatorField":
        """Re-embed each window block at its image window F_(t,g)."""
        vals = {}
        for (i, j), block in sf.blocks.items():
            vals[(i, j)] = embed_block(block, sf.window, sf.element(i, j), p=sf.p)
        return cls(sf.window.grid, list(sf.t_levels), np.asarray(sf.lattice), vals)

    def shifted(self, params: RepParams, a) -> "OperatorField":
        """(t, g) -> pi(1,a) A(t, a^{-1} g) pi(1,a)^{-1}; lattice points whose
        pre-image is not on the lattice get the zero operator."""
        G = self.grid.group
        u = ScaledElement(1.0, tuple(np.atleast_1d(a)))
        pre = G.compose(G.inverse(u.coords), self.lattice)
        lookup = {tuple(np.round(g, 12)): j for j, g in enumerate(self.lattice)}
        vals = {}
        for (i, j) in self.values:
            src = lookup.get(tuple(np.round(pre[j], 12)))
            if src is None or (i, src) not in self.values:
                vals[(i, j)] = np.zeros((self.grid.size, self.grid.size))
            else:
                vals[(i, j)] = np.asarray(conjugate(params, u, self.values[(i, src)]))
        return OperatorField(self.grid, list(self.t_levels), self.lattice.copy(), vals)

    def save(self, directory) -> Path:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        names = {}
        for (i, j) in sorted(self.values):
            name = f"t{i}_g{j}.locm"
            write_matrix(d / name, self.values[(i, j)])
            names[name] = [i, j]
        man = {
            "grid": self.grid.to_dict(),
            "t_levels": [float(t) for t in self.t_levels],
            "lattice": [[float(c) for c in g] for g in self.lattice],
            "blocks": names,
        }
        (d / "field.json").write_text(json.dumps(man, indent=2, sort_keys=True))
        return d

    @classmethod
    def load(cls, directory) -> "OperatorField":
        d = Path(directory)
        man = json.loads((d / "field.json").read_text())
        g = man["grid"]
        grid = make_grid(Group.from_dict(g["group"]), g["h"], g["R"])
        vals = {tuple(ij): read_matrix(d / name) for name, ij in man["blocks"].items()}
        return cls(grid, man["t_levels"], np.asarray(man["lattice"], float), vals)


def coverage(window: WindowSpec, t: float, lattice) -> tuple[np.ndarray, list]:
    """Per-point count of windows F_(t,g) over the lattice, and the window masks."""
    masks = [window.image_mask(ScaledElement(t, tuple(g))) for g in lattice]
    count = np.zeros(window.grid.size)
    for m in masks:
        count += m.member
    return count, masks


def _tiling_weights(window, t, lattice):
    count, masks = coverage(window, t, lattice)
    covered = count > 0
    grid = window.grid
    pts = grid.points
    lo, hi = pts[covered].min(axis=0), pts[covered].max(axis=0)
    hull = np.all((pts >= lo) & (pts <= hi), axis=-1)
    gaps = hull & ~covered
    if gaps.any():
        raise ValueError(
            f"windows at t={t} do not tile their hull: {int(gaps.sum())} uncovered grid point(s),"
            f" first at {pts[gaps][0].tolist()}"
        )
    weight = np.where(covered, 1.0 / np.maximum(count, 1), 0.0)
    return weight, masks, covered


def level_reconstruction(field_: OperatorField, window: WindowSpec, i_t: int) -> np.ndarray:
    """sum_g P_(t,g) W^{1/2} A(t,g) W^{1/2} P_(t,g) with W = 1/overlap count."""
    t = field_.t_levels[i_t]
    weight, masks, _ = _tiling_weights(window, t, field_.lattice)
    root = np.sqrt(weight)
    N = field_.grid.size
    out = np.zeros((N, N))
    for j, m in enumerate(masks):  # fixed lattice order keeps the sum bit-stable
        A = field_.values.get((i_t, j))
        if A is None:
            continue
        idx = m.indices
        ix = np.ix_(idx, idx)
        out[ix] += root[idx, None] * np.asarray(A)[ix] * root[None, idx]
    return out


def covered_domain(field_: OperatorField, window: WindowSpec, i_t: int = -1) -> RegionMask:
    t = field_.t_levels[i_t]
    _, _, covered = _tiling_weights(window, t, field_.lattice)
    return RegionMask(window.grid, covered)


def inverse_covariant(field_: OperatorField, window: WindowSpec,
                      kind: PairingKind | str = PairingKind.HARDY,
                      richardson: bool = False) -> np.ndarray:
    """Operator synthesised from a field of local representatives.

    Hardy: the overlap-weighted window sum at the finest level (optionally
    extrapolated linearly in t from the last two levels). Haar: the level
    sums averaged with the weights of dt/t.
    """
    kind = PairingKind(kind)
    t = np.asarray(field_.t_levels, float)
    if kind is PairingKind.HARDY:
        if t.size < 2:
            raise ValueError("the Hardy-type reconstruction needs at least two t-levels")
        last = level_reconstruction(field_, window, t.size - 1)
        if not richardson:
            return last
        prev = level_reconstruction(field_, window, t.size - 2)
        t0, t1 = t[-2], t[-1]
        return last + (last - prev) * t1 / (t0 - t1)
    # window volumes scale like t^k, so dt/t^(k+1) times t^k leaves dt/t
    w = haar_level_weights(t, 0)
    w = w / w.sum()
    out = np.zeros((field_.grid.size,) * 2)
    for i in range(t.size):
        out += w[i] * level_reconstruction(field_, window, i)
    return out

"""Invariant suites behind ``localis verify``.

Every property returns a measured residual and the threshold it must stay
under; all randomness comes from fixed seeds so reports are reproducible.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .function_space import (PairingKind, RegionMask, SampledFunction, left_shift_family,
                             lp_norm, make_grid, pairing, project_region)
from .group_core import (ScaledElement, euclidean, heisenberg, scaled_compose,
                         scaled_inverse)
from .localization import local_equiv, presymbol, reduce_presymbol, symbol, symbol_field
from .operator_lab import (WindowSpec, box_norm, enorm_proxy, finite_rank, group_convolution,
                           hilbert_transform, multiplication_operator, projection_matrix,
                           transform_mask)
from .representation import RepParams, act, act_matrix, conjugate, operator_action
from .synthesis import (OperatorField, covered_domain, dyadic_partition, envelope_sum,
                        inverse_covariant)

SUITES = ("group", "representation", "localization", "synthesis")
SEED = 20240607


@dataclass
class PropertyResult:
    suite: str
    property: str
    residual: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.threshold)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = self.passed
        return d


_REGISTRY: dict[str, list] = {s: [] for s in SUITES}


def _prop(suite: str, name: str, threshold: float):
    def deco(fn):
        _REGISTRY[suite].append((name, threshold, fn))
        return fn
    return deco


def _groups():
    return [euclidean(1), euclidean(2), heisenberg(1), heisenberg(2)]


def _euclid_setup():
    grid = make_grid(euclidean(1), 0.0625, 8)
    return grid, WindowSpec(grid, 1.0), RepParams(grid)


def _bump(grid, rng, radius=3.0):
    """Random function supported in the box of the given radius."""
    vals = rng.standard_normal(grid.size)
    inside = np.all(np.abs(grid.points) <= radius, axis=-1)
    return SampledFunction(grid, np.where(inside, vals, 0.0))


# ---------------------------------------------------------------------------
# group


@_prop("group", "associativity", 1e-12)
def _assoc():
    rng = np.random.default_rng(SEED)
    res = 0.0
    for G in _groups():
        a, b, c = (rng.uniform(-2, 2, (1000, G.dim)) for _ in range(3))
        res = max(res, np.abs(G.compose(G.compose(a, b), c) - G.compose(a, G.compose(b, c))).max())
    return res


@_prop("group", "dilation automorphism family", 1e-12)
def _dilation():
    rng = np.random.default_rng(SEED + 1)
    res = 0.0
    for G in _groups():
        a, b = (rng.uniform(-2, 2, (1000, G.dim)) for _ in range(2))
        t, s = (rng.uniform(0.25, 2.0, 1000) for _ in range(2))
        res = max(res,
                  np.abs(G.dilate(t, G.compose(a, b)) - G.compose(G.dilate(t, a), G.dilate(t, b))).max(),
                  np.abs(G.dilate(t, G.dilate(s, a)) - G.dilate(t * s, a)).max())
    return res


@_prop("group", "semidirect product axioms", 1e-12)
def _semidirect():
    rng = np.random.default_rng(SEED + 2)
    res = 0.0
    for G in _groups():
        unit = ScaledElement.unit(G)
        for _ in range(250):
            p, q, r = (ScaledElement(float(rng.uniform(0.25, 2.0)), tuple(rng.uniform(-2, 2, G.dim)))
                       for _ in range(3))
            lhs = scaled_compose(scaled_compose(p, q, G), r, G)
            rhs = scaled_compose(p, scaled_compose(q, r, G), G)
            res = max(res, np.abs(lhs.coords - rhs.coords).max())
            for x in (scaled_compose(unit, p, G), scaled_compose(p, unit, G)):
                res = max(res, np.abs(x.coords - p.coords).max())
            inv = scaled_inverse(p, G)
            for x in (scaled_compose(p, inv, G), scaled_compose(inv, p, G)):
                res = max(res, np.abs(x.coords - unit.coords).max())
    return res


@_prop("group", "ax+b specialisation", 1e-12)
def _axb():
    rng = np.random.default_rng(SEED + 3)
    G = euclidean(1)
    res = 0.0
    for _ in range(1000):
        a, a2 = rng.uniform(0.25, 2.0, 2)
        b, b2 = rng.uniform(-2, 2, 2)
        x = scaled_compose(ScaledElement(a, (b,)), ScaledElement(a2, (b2,)), G)
        res = max(res, abs(x.t - a * a2), abs(x.g[0] - (a * b2 + b)))
    return res


# ---------------------------------------------------------------------------
# representation (including the function-space invariants)


def _aligned_pairs(rng, n):
    """Pairs of scaled elements whose product is again aligned on the h=1/16 grid."""
    ts = [1.0, 0.5, 0.25, 0.125]
    out = []
    for _ in range(n):
        t1, t2 = rng.choice(ts, 2)
        g1 = rng.integers(-8, 9) * 0.0625
        g2 = rng.integers(-2, 3) * 1.0  # t1 * g2 stays on the lattice
        out.append((ScaledElement(float(t1), (g1,)), ScaledElement(float(t2), (g2,))))
    return out


@_prop("representation", "homomorphism", 1e-12)
def _homomorphism():
    grid, _, params = _euclid_setup()
    rng = np.random.default_rng(SEED + 10)
    res = 0.0
    for s1, s2 in _aligned_pairs(rng, 40):
        f = _bump(grid, rng)
        lhs = act(params, s1, act(params, s2, f)).values
        rhs = act(params, scaled_compose(s1, s2, grid.group), f).values
        res = max(res, np.abs(lhs - rhs).max())
    return res


def coarse_step_function(grid, rng, t_min: float = 0.125, radius: float = 3.0) -> SampledFunction:
    """Random function constant on the cells of the lattice tau_{1/t_min}(grid).

    Point sampling of pi(t, g) f for t < 1 reads f on a sublattice; the
    discrete norm is preserved exactly when f is resolved at that coarser
    spacing, so these are the functions on which isometry is exact.
    """
    G = grid.group
    step = np.asarray(grid.spacing) / t_min ** G.degrees
    cells = np.floor(grid.points / step + 1e-9).astype(np.int64)
    _, inverse = np.unique(cells, axis=0, return_inverse=True)
    vals = rng.standard_normal(inverse.max() + 1)[inverse.ravel()]
    lo = -radius ** G.degrees
    inside = np.all((grid.points >= lo) & (grid.points < radius ** G.degrees), axis=-1)
    return SampledFunction(grid, np.where(inside, vals, 0.0))


@_prop("representation", "isometry", 1e-12)
def _isometry():
    grid, _, params = _euclid_setup()
    rng = np.random.default_rng(SEED + 11)
    res = 0.0
    for s, _ in _aligned_pairs(rng, 40):
        f = coarse_step_function(grid, rng)
        res = max(res, abs(lp_norm(act(params, s, f)) - lp_norm(f)) / lp_norm(f))
    return res


@_prop("representation", "projection covariance", 0.0)
def _proj_cov():
    grid, W, params = _euclid_setup()
    rng = np.random.default_rng(SEED + 12)
    P = projection_matrix(W.mask)
    res = 0.0
    for s, _ in _aligned_pairs(rng, 30):
        lhs = conjugate(params, s, P)
        rhs = projection_matrix(transform_mask(s, W.mask))
        res = max(res, float(np.abs(lhs - rhs).max()))
    return res


@_prop("representation", "presymbol intertwining", 1e-10)
def _intertwining():
    return presymbol_covariance_residual(n=10, seed=SEED + 13)


def presymbol_covariance_residual(n: int = 20, seed: int = 0, grid=None, window=None) -> float:
    """max |presymbol(rho(u)A; l, r) - presymbol(A; u_l^-1 l, u_r^-1 r)| on resolved entries.

    rho(u)A = pi(u_l) A pi(u_r)^-1. Entries are compared where both sides are
    resolved; the left side may lose rows that leave the extent.
    """
    if grid is None:
        grid = make_grid(euclidean(1), 0.0625, 8)
        window = WindowSpec(grid, 1.0)
    params = RepParams(grid)
    G = grid.group
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((grid.size, grid.size))
    res = 0.0
    coarse = _coarse_lattice(grid, 1.0)
    near = coarse[box_norm(G, coarse) <= 1]
    mid = coarse[box_norm(G, coarse) <= 2]
    compared = 0
    for _ in range(n):
        ul, ur = (ScaledElement(float(rng.choice([1.0, 0.5])), tuple(near[rng.integers(len(near))]))
                  for _ in range(2))
        l, r = (ScaledElement(float(rng.choice([1.0, 0.5, 0.25])), tuple(mid[rng.integers(len(mid))]))
                for _ in range(2))
        lhs = presymbol(operator_action(params, ul, ur, A), l, r, window)
        l2 = scaled_compose(scaled_inverse(ul, G), l, G)
        r2 = scaled_compose(scaled_inverse(ur, G), r, G)
        rhs = presymbol(A, l2, r2, window)
        both = (lhs != 0) | (rhs != 0)
        mask = _resolved_block(window, l, r) & _resolved_block(window, l2, r2) & _inside_block(params, window, ul, ur, l, r)
        sel = mask & both
        compared += int(sel.sum())
        res = max(res, float(np.abs((lhs - rhs)[sel]).max(initial=0.0)))
    if compared == 0:
        return np.inf  # nothing was tested
    return res


def _coarse_lattice(grid, step: float) -> np.ndarray:
    """Points of a lattice with the given step in degree-one coordinates (and
    step^2 in the centre) lying in the middle half of the grid."""
    G = grid.group
    axes = []
    for d, R in zip(G.degrees, grid.extent):
        st = step ** d
        n = int(np.floor(R / 2 / st))
        axes.append(np.arange(-n, n + 1) * st)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _resolved_block(window, l, r) -> np.ndarray:
    from .localization import resolved
    return resolved(window, l)[:, None] & resolved(window, r)[None, :]


def _inside_block(params, window, ul, ur, l, r) -> np.ndarray:
    """Entries whose intermediate points stay on the grid for the left side."""
    from .localization import window_targets
    grid = window.grid
    G = grid.group
    ri = window_targets(window, l)
    ci = window_targets(window, r)
    rows = np.zeros(len(ri), bool)
    cols = np.zeros(len(ci), bool)
    pts = grid.points
    ok = ri >= 0
    from .group_core import pull_back_points
    rows[ok] = grid.index_of(pull_back_points(ul, pts[ri[ok]], G), require_lattice=False) >= 0
    ok = ci >= 0
    cols[ok] = grid.index_of(pull_back_points(ur, pts[ci[ok]], G), require_lattice=False) >= 0
    return rows[:, None] & cols[None, :]


@_prop("representation", "region projection idempotent and contractive", 1e-12)
def _project():
    grid, _, _ = _euclid_setup()
    rng = np.random.default_rng(SEED + 14)
    res = 0.0
    for _ in range(50):
        f = SampledFunction(grid, rng.standard_normal(grid.size), p=float(rng.uniform(1, 4)))
        F = RegionMask(grid, rng.random(grid.size) < 0.5)
        Pf = project_region(F, f)
        res = max(res, np.abs(project_region(F, Pf).values - Pf.values).max(),
                  max(0.0, lp_norm(Pf) - lp_norm(f)))
    return res


@_prop("representation", "mask products", 0.0)
def _mask_products():
    grid, _, _ = _euclid_setup()
    rng = np.random.default_rng(SEED + 15)
    res = 0.0
    for _ in range(50):
        F1 = RegionMask(grid, rng.random(grid.size) < 0.5)
        F2 = RegionMask(grid, rng.random(grid.size) < 0.5)
        res = max(res, np.abs(projection_matrix(F1) @ projection_matrix(F2)
                              - projection_matrix(F1 & F2)).max())
    return float(res)


@_prop("representation", "Hardy pairing left invariance", 1e-12)
def _pairing_inv():
    grid, _, _ = _euclid_setup()
    rng = np.random.default_rng(SEED + 16)
    t = [0.5, 0.25, 0.125]
    res = 0.0
    for _ in range(20):
        inside = np.abs(grid.points[:, 0]) <= 4
        a = rng.standard_normal((3, grid.size)) * inside
        b = rng.standard_normal((3, grid.size)) * inside
        g = np.array([rng.integers(-32, 33) * 0.0625])
        v0 = pairing(PairingKind.HARDY, a, b, t, grid)
        v1 = pairing(PairingKind.HARDY, left_shift_family(a, grid, g), left_shift_family(b, grid, g), t, grid)
        res = max(res, abs(v1 - v0))
    return res


# ---------------------------------------------------------------------------
# localization (including the operator-lab invariants)


@_prop("localization", "proxy monotone in rank and equal to the norm at rank 0", 1e-12)
def _proxy_monotone():
    rng = np.random.default_rng(SEED + 20)
    res = 0.0
    for _ in range(20):
        A = rng.standard_normal((40, 30))
        vals = [enorm_proxy(A, r) for r in range(30)]
        res = max(res, abs(vals[0] - np.linalg.norm(A, 2)),
                  max(0.0, max(b - a for a, b in zip(vals, vals[1:]))))
    return res


@_prop("localization", "finite-rank perturbations vanish under the proxy", 1e-10)
def _proxy_compact():
    grid = make_grid(euclidean(1), 0.25, 4)
    rng = np.random.default_rng(SEED + 21)
    res = 0.0
    for _ in range(20):
        A = rng.standard_normal((grid.size, grid.size))
        k = int(rng.integers(1, 4))
        cols = [SampledFunction(grid, rng.standard_normal(grid.size)) for _ in range(k)]
        rows = [SampledFunction(grid, rng.standard_normal(grid.size)) for _ in range(k)]
        K = finite_rank(cols, rows)
        for r in range(3):
            res = max(res, enorm_proxy(A + K, r + k) - enorm_proxy(A, r))
    return max(res, 0.0)


@_prop("localization", "convolution commutes with shifts", 1e-10)
def _conv_shift():
    grid = make_grid(euclidean(1), 0.0625, 8)
    params = RepParams(grid)
    kernel = SampledFunction.from_callable(grid, lambda x: np.exp(-4 * x[:, 0] ** 2))
    K = group_convolution(kernel)
    rng = np.random.default_rng(SEED + 22)
    res = 0.0
    for _ in range(10):
        f = _bump(grid, rng, radius=2.0)
        s = ScaledElement(1.0, (rng.integers(-16, 17) * 0.0625,))
        lhs = act(params, s, f.with_values(K @ f.values)).values
        rhs = K @ act(params, s, f).values
        inner = np.abs(grid.points[:, 0]) <= 3
        res = max(res, np.abs(lhs - rhs)[inner].max())
    return res


HILBERT_DILATION_CONSTANT = 4.0


@_prop("localization", "Hilbert transform nearly commutes with dilations", HILBERT_DILATION_CONSTANT * 0.0625)
def _hilbert_dilation():
    return hilbert_dilation_defect(make_grid(euclidean(1), 0.0625, 8))


def hilbert_dilation_defect(grid, ts=(0.5, 0.25), radius: float = 1.0) -> float:
    """max over t and smooth probes f of ||1_W (pi(t,e)H - H pi(t,e)) f|| / ||f||.

    The operator-norm commutator is O(1) on a grid because pi(t,e) reads
    every (1/t)-th sample; on smooth functions the defect is O(h).
    """
    x = grid.points[:, 0]
    probes = [np.exp(-a * x ** 2) * x ** k for a in (1.0, 2.0, 4.0) for k in (0, 1)]
    params = RepParams(grid)
    H = hilbert_transform(grid)
    inner = np.abs(x) <= radius
    res = 0.0
    for t in ts:
        D = act_matrix(params, ScaledElement(t, (0.0,)))
        for f in probes:
            c = D @ (H @ f) - H @ (D @ f)
            res = max(res, float(np.linalg.norm(c[inner]) / np.linalg.norm(f)))
    return res


@_prop("localization", "presymbol covariance", 1e-10)
def _presymbol_cov():
    return presymbol_covariance_residual(n=10, seed=SEED + 23)


@_prop("localization", "constant-symbol rigidity", 1e-12)
def _rigidity():
    grid, W, _ = _euclid_setup()
    x = grid.points[:, 0]
    k1 = np.exp(-x ** 2)
    k2 = k1 + np.where(np.abs(x) > 3, np.cos(x), 0.0)  # same near 0, distinct kernel
    K1 = group_convolution(SampledFunction(grid, k1))
    K2 = group_convolution(SampledFunction(grid, k2))
    s = ScaledElement(1.0, (0.0,))
    blocks_equal = np.abs(symbol(K1, s, W) - symbol(K2, s, W)).max()
    inner = np.flatnonzero(np.abs(x) <= 4)
    i, j = np.meshgrid(inner, inner, indexing="ij")
    band = np.abs(x[i] - x[j]) <= 2 * W.radius + 1e-12
    band_diff = np.abs(K1[i, j] - K2[i, j])[band].max()
    return float(blocks_equal + band_diff)


@_prop("localization", "mixed-scale presymbol from same-scale symbols", 1e-10)
def _determination():
    grid, W, _ = _euclid_setup()
    M = multiplication_operator(SampledFunction.from_callable(grid, lambda p: np.sin(p[:, 0])))
    left = ScaledElement(0.5, (0.0,))
    right = ScaledElement(0.25, (0.25,))
    red = reduce_presymbol(W, left, right, 0.125)
    return float(np.abs(red.assemble_for(M) - presymbol(M, left, right, W)).max())


@_prop("localization", "multiplication localisation bound", 1e-12)
def _mult_local():
    grid, W, _ = _euclid_setup()
    M = multiplication_operator(SampledFunction.from_callable(grid, lambda p: np.sin(p[:, 0])))
    res = 0.0
    for g in (-2.0, -1.0, 0.0, 1.0, 2.0):
        for t in (1.0, 0.5, 0.25, 0.125):
            val = enorm_proxy(symbol(M - np.sin(g) * np.eye(grid.size), ScaledElement(t, (g,)), W), 0)
            res = max(res, val - t * 1.0 * W.radius)
    return max(res, 0.0)


# ---------------------------------------------------------------------------
# synthesis


def _tiling_lattice(grid, step_cells: int = 5, half_width: float = 6.0) -> np.ndarray:
    h = grid.spacing[0]
    n = int(np.floor(half_width / (step_cells * h)))
    return (np.arange(-n, n + 1) * step_cells * h)[:, None]


@_prop("synthesis", "reconstruction intertwines shifts", 1e-10)
def _synth_intertwining():
    grid, W, params = _euclid_setup()
    rng = np.random.default_rng(SEED + 30)
    lattice = _tiling_lattice(grid)
    A = rng.standard_normal((grid.size, grid.size))
    field_ = OperatorField.constant(grid, [0.25, 0.125], lattice, A)
    M = inverse_covariant(field_, W)
    res = 0.0
    for k in (-3, 2, 7):
        a = k * 5 * grid.spacing[0]
        lhs = inverse_covariant(field_.shifted(params, [a]), W)
        rhs = conjugate(params, ScaledElement(1.0, (a,)), M)
        inner = np.flatnonzero(np.abs(grid.points[:, 0]) <= 3)
        res = max(res, float(np.abs((lhs - rhs)[np.ix_(inner, inner)]).max()))
    return res


@_prop("synthesis", "envelope consistency", 1e-12)
def _envelope_consistency():
    grid, W, _ = _euclid_setup()
    P = dyadic_partition(grid, -4, 4, 4)
    I = np.eye(grid.size)
    env = envelope_sum(P, [np.sin(x[0]) * I for x in P.anchors])
    ts = [0.5, 0.25, 0.125, 0.0625]
    cell_radius = 0.25
    res = 0.0
    for x in P.anchors:
        if abs(x[0]) > 3:  # windows at the coarsest level must stay inside the partitioned box
            continue
        rep = local_equiv(env, np.sin(x[0]) * I, x, W, ts, tol=1e-12)
        bound = 1.0 * (np.array(ts) * W.radius + cell_radius)
        res = max(res, float(np.max(np.array(rep.decay) - bound)), 0.0 if rep.verdict else np.inf)
    return max(res, 0.0)


@_prop("synthesis", "round trip of a multiplication operator", 1e-12)
def _round_trip():
    grid, W, _ = _euclid_setup()
    M = multiplication_operator(SampledFunction.from_callable(grid, lambda p: np.sin(p[:, 0])))
    lattice = _tiling_lattice(grid)
    sf = symbol_field(M, W, [0.25, 0.125], lattice)
    field_ = OperatorField.from_symbol_field(sf)
    rec = inverse_covariant(field_, W)
    dom = covered_domain(field_, W).indices
    err = np.linalg.norm((rec - M)[np.ix_(dom, dom)], 2)
    return max(0.0, float(err) - 1.0 * 0.125 * W.radius)


# ---------------------------------------------------------------------------


def run_suite(name: str) -> list[PropertyResult]:
    if name == "all":
        names = SUITES
    elif name in SUITES:
        names = (name,)
    else:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    out = []
    for suite in names:
        for prop, threshold, fn in _REGISTRY[suite]:
            out.append(PropertyResult(suite, prop, float(fn()), threshold))
    return out


def properties(name: str) -> list[tuple[str, str]]:
    names = SUITES if name == "all" else (name,)
    return [(s, p) for s in names for p, _, _ in _REGISTRY[s]]


def registry() -> dict[str, list[tuple[str, float, Callable]]]:
    return {k: list(v) for k, v in _REGISTRY.items()}

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from localis.function_space import (PairingKind, RegionMask, ResourceLimitError, SampledFunction,
                                    left_shift_family, lp_norm, make_grid, pairing, project_region)
from localis.group_core import euclidean, heisenberg


def test_make_grid_examples():
    assert make_grid(euclidean(1), 0.0625, 8).size == 256
    g = make_grid(euclidean(1), 0.5, 1)
    assert g.points[:, 0].tolist() == [-1.0, -0.5, 0.0, 0.5]
    assert make_grid(heisenberg(1), 0.5, 2).size == 8 ** 3


def test_make_grid_errors():
    with pytest.raises(ValueError):
        make_grid(euclidean(1), 0.3, 1)
    with pytest.raises(ResourceLimitError):
        make_grid(euclidean(2), 0.001, 8, cap=10_000)
    with pytest.raises(ValueError):
        make_grid(euclidean(1), -1, 1)


def test_grid_index_roundtrip(hgrid_small):
    g = hgrid_small
    idx = g.index_of(g.points)
    assert np.array_equal(idx, np.arange(g.size))
    assert g.index_of(np.array([0.0625, 0.0, 0.0])) == -1  # off lattice
    assert g.index_of(np.array([1.0, 0.0, 0.0])) == -1  # outside [-R, R)


def test_lp_norm_examples():
    g = make_grid(euclidean(1), 0.25, 2)
    x = g.points[:, 0]
    ind = SampledFunction(g, ((x >= 0) & (x < 1)).astype(float))
    assert lp_norm(ind) == pytest.approx(1.0)
    assert lp_norm(SampledFunction(g, np.zeros(g.size))) == 0.0
    assert lp_norm(SampledFunction(g, np.full(g.size, -3.0), p=1)) == pytest.approx(3.0 * 4)


def test_project_region_examples():
    g = make_grid(euclidean(1), 0.25, 2)
    one = SampledFunction(g, np.ones(g.size))
    F = RegionMask.box(g, 0, 1)
    assert np.array_equal(project_region(F, one).values, F.member.astype(float))
    assert np.array_equal(project_region(RegionMask.full(g), one).values, one.values)
    assert not project_region(RegionMask.empty(g), one).values.any()
    other = make_grid(euclidean(1), 0.5, 2)
    with pytest.raises(ValueError):
        project_region(RegionMask.full(other), one)


def test_sampled_function_validation(egrid):
    with pytest.raises(ValueError):
        SampledFunction(egrid, np.zeros(3))
    with pytest.raises(ValueError):
        SampledFunction(egrid, np.zeros(egrid.size), p=0.5)


@settings(max_examples=40)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1, 6))
def test_projection_idempotent_and_contractive(seed, p):
    g = make_grid(euclidean(1), 0.25, 4)
    rng = np.random.default_rng(seed)
    f = SampledFunction(g, rng.standard_normal(g.size), p)
    F = RegionMask(g, rng.random(g.size) < 0.5)
    Pf = project_region(F, f)
    assert np.array_equal(project_region(F, Pf).values, Pf.values)
    assert lp_norm(Pf) <= lp_norm(f) + 1e-12


@settings(max_examples=40)
@given(st.integers(0, 2 ** 32 - 1))
def test_mask_algebra(seed):
    g = make_grid(euclidean(1), 0.25, 4)
    rng = np.random.default_rng(seed)
    A = RegionMask(g, rng.random(g.size) < 0.5)
    B = RegionMask(g, rng.random(g.size) < 0.5)
    pa, pb = np.diag(A.member * 1.0), np.diag(B.member * 1.0)
    assert np.array_equal(pa @ pb, np.diag((A & B).member * 1.0))
    assert np.array_equal((A | B).member, ~(~A & ~B).member)
    assert (A - B).issubset(A)


def test_hardy_pairing_examples(egrid):
    x = egrid.points[:, 0]
    ind = ((x >= 0) & (x < 1)).astype(float)
    fam = np.tile(ind, (3, 1))
    assert pairing("hardy", fam, fam, [0.5, 0.25, 0.125], egrid) == pytest.approx(1.0)
    other = np.tile(((x >= 2) & (x < 3)).astype(float), (3, 1))
    assert pairing(PairingKind.HARDY, fam, other, [0.5, 0.25, 0.125], egrid) == 0.0


def test_haar_pairing_axb_oracle(egrid):
    # indicator of a in [1, 2], b in [0, 1]; closed form: int_1^2 a^-2 da = 1/2
    t = np.linspace(3.0, 0.5, 401)
    b = egrid.points[:, 0]
    rows = ((t >= 1 - 1e-12) & (t <= 2 + 1e-12))[:, None] & ((b >= 0) & (b < 1))[None, :]
    val = pairing("haar", rows * 1.0, rows * 1.0, t, egrid)
    assert val == pytest.approx(0.5, rel=0.02)


def test_pairing_errors(egrid):
    f = np.zeros((2, egrid.size))
    with pytest.raises(ValueError):
        pairing("hardy", f[:0], f[:0], [], egrid)
    with pytest.raises(ValueError):
        pairing("hardy", f, f, [0.25, 0.5], egrid)
    with pytest.raises(ValueError):
        pairing("hardy", f, f, [0.5, 0.25, 0.125], egrid)


def test_hardy_richardson_linear_in_t(egrid):
    # per-level value linear in t: extrapolation recovers the t -> 0 value
    base = np.ones(egrid.size) / np.sqrt(egrid.size * egrid.cell_volume)
    t = [0.5, 0.25]
    fam1 = np.stack([base * (1 + ti) for ti in t])
    fam2 = np.stack([base for _ in t])
    assert pairing("hardy", fam1, fam2, t, egrid, richardson=True) == pytest.approx(1.0)


@settings(max_examples=25)
@given(st.integers(0, 2 ** 32 - 1), st.integers(-32, 32))
def test_hardy_pairing_left_invariance(seed, k):
    g = make_grid(euclidean(1), 0.0625, 8)
    rng = np.random.default_rng(seed)
    inside = np.abs(g.points[:, 0]) <= 4
    a = rng.standard_normal((3, g.size)) * inside
    b = rng.standard_normal((3, g.size)) * inside
    shift = np.array([k * 0.0625])
    t = [0.5, 0.25, 0.125]
    v0 = pairing("hardy", a, b, t, g)
    v1 = pairing("hardy", left_shift_family(a, g, shift), left_shift_family(b, g, shift), t, g)
    assert abs(v0 - v1) <= 1e-12


def test_hardy_pairing_left_invariance_heisenberg(hgrid_small):
    g = hgrid_small
    rng = np.random.default_rng(7)
    inside = np.all(np.abs(g.points) <= [0.25, 1.0, 1.0], axis=-1)
    a = rng.standard_normal((2, g.size)) * inside
    b = rng.standard_normal((2, g.size)) * inside
    shift = np.array([0.0, 0.5, -0.5])
    t = [0.5, 0.25]
    v0 = pairing("hardy", a, b, t, g)
    v1 = pairing("hardy", left_shift_family(a, g, shift), left_shift_family(b, g, shift), t, g)
    assert abs(v0 - v1) <= 1e-12

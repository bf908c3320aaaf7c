import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from localis.checks import coarse_step_function
from localis.function_space import SampledFunction, lp_norm
from localis.group_core import ScaledElement, scaled_compose, scaled_inverse
from localis.operator_lab import projection_matrix, shift_operator, transform_mask
from localis.representation import (INTERPOLATED, RepParams, act, act_matrix, conjugate,
                                    double_act, operator_action)

T_LEVELS = [1.0, 0.5, 0.25, 0.125]


def direct_act(grid, s, f_callable, p=2.0):
    """Pointwise evaluation of t^(-k/p) f(tau_{1/t}(g^{-1} x))."""
    from localis.group_core import pull_back_points
    q = pull_back_points(s, grid.points, grid.group)
    return s.t ** (-grid.group.homogeneous_dim / p) * f_callable(q)


def test_act_examples(egrid, eparams):
    x = egrid.points[:, 0]
    f = SampledFunction(egrid, np.exp(-x ** 2))
    shifted = act(eparams, ScaledElement(1.0, (1.0,)), f)
    assert np.allclose(shifted.values[x > -7], np.exp(-(x[x > -7] - 1) ** 2))
    assert np.array_equal(act(eparams, ScaledElement(1.0, (0.0,)), f).values, f.values)
    ind = SampledFunction(egrid, ((x >= 0) & (x < 1)).astype(float))
    out = act(eparams, ScaledElement(0.25, (0.0,)), ind)
    oracle = direct_act(egrid, ScaledElement(0.25, (0.0,)),
                        lambda q: ((q[:, 0] >= 0) & (q[:, 0] < 1)).astype(float))
    assert np.allclose(out.values, oracle)
    assert np.allclose(out.values, 2.0 * ((x >= 0) & (x < 0.25)))


def test_act_matrix_examples(egrid, eparams):
    assert np.array_equal(act_matrix(eparams, ScaledElement(1.0, (0.0,))).toarray(), np.eye(egrid.size))
    S = act_matrix(eparams, ScaledElement(1.0, (0.5,))).toarray()
    assert set(np.unique(S)) <= {0.0, 1.0}
    D = act_matrix(eparams, ScaledElement(0.5, (0.0,))).toarray()
    # oracle: apply act to every basis vector
    cols = np.stack([act(eparams, ScaledElement(0.5, (0.0,)), SampledFunction(egrid, e)).values
                     for e in np.eye(egrid.size)], axis=1)
    assert np.array_equal(D, cols)
    interior = np.abs(egrid.points[:, 0]) < 4
    assert np.all((D[interior] != 0).sum(axis=1) == 1)
    assert np.allclose(D[interior].max(axis=1), np.sqrt(2))


def test_alignment_errors(egrid, eparams):
    f = SampledFunction(egrid, np.ones(egrid.size))
    for s in (ScaledElement(0.3, (0.0,)), ScaledElement(2.0, (0.0,)), ScaledElement(1.0, (0.01,))):
        with pytest.raises(ValueError):
            act(eparams, s, f)
    with pytest.raises(ValueError):
        act(eparams, ScaledElement(1.0, (0.0, 0.0)), f)


def test_interpolated_mode(egrid):
    params = RepParams(egrid, mode=INTERPOLATED)
    x = egrid.points[:, 0]
    f = SampledFunction(egrid, np.exp(-x ** 2))
    out = act(params, ScaledElement(1.5, (0.3,)), f)
    oracle = 1.5 ** -0.5 * np.exp(-((x - 0.3) / 1.5) ** 2)
    assert np.abs(out.values - oracle)[np.abs(x) < 6].max() < 1e-2


def test_double_act_examples(egrid, eparams, rng):
    A = rng.standard_normal((egrid.size, egrid.size))
    e = ScaledElement(1.0, (0.0,))
    assert np.array_equal(np.asarray(double_act(eparams, e, e, A)), A)
    inner = np.abs(egrid.points[:, 0]) < 3
    s = ScaledElement(1.0, (1.0,))
    I = np.asarray(double_act(eparams, s, s, np.eye(egrid.size)))
    assert np.array_equal(I[np.ix_(inner, inner)], np.eye(inner.sum()))
    # at t = 1/2 the left factor has scale 2: rows x with t x + g off the lattice are unresolved
    s = ScaledElement(0.5, (1.0,))
    I = np.asarray(double_act(eparams, s, s, np.eye(egrid.size)))
    x = egrid.points[:, 0]
    resolved = np.isclose(np.mod((0.5 * x + 1.0) / 0.0625, 1), 0) & inner
    assert np.array_equal(np.diag(I)[inner], resolved[inner].astype(float))
    assert np.count_nonzero(I[np.ix_(inner, inner)]) == resolved.sum()
    a = np.sin(egrid.points[:, 0])
    b = ScaledElement(1.0, (0.5,))
    out = np.asarray(double_act(eparams, b, b, np.diag(a)))
    # oracle: conjugation by the explicit shift permutation
    S = shift_operator(egrid, [0.5])
    oracle = S.T @ np.diag(a) @ S
    assert np.allclose(out[np.ix_(inner, inner)], oracle[np.ix_(inner, inner)])
    # pi(b)^{-1} M_a pi(b) multiplies by a(b x) = a(x + 0.5) under our left action
    assert np.allclose(np.diag(out)[inner], np.sin(egrid.points[inner, 0] + 0.5))


def test_double_act_grid_mismatch(eparams):
    with pytest.raises(ValueError):
        double_act(eparams, ScaledElement(1.0, (0.0,)), ScaledElement(1.0, (0.0,)), np.eye(3))


aligned = st.tuples(st.sampled_from(T_LEVELS), st.integers(-8, 8), st.sampled_from(T_LEVELS),
                    st.integers(-2, 2))


@settings(max_examples=60, deadline=None)
@given(aligned, st.integers(0, 2 ** 32 - 1))
def test_homomorphism(case, seed, ):
    from localis.function_space import make_grid
    from localis.group_core import euclidean
    grid = make_grid(euclidean(1), 0.0625, 8)
    params = RepParams(grid)
    t1, k1, t2, k2 = case
    s1, s2 = ScaledElement(t1, (k1 * 0.0625,)), ScaledElement(t2, (float(k2),))
    rng = np.random.default_rng(seed)
    f = SampledFunction(grid, rng.standard_normal(grid.size) * (np.abs(grid.points[:, 0]) <= 3))
    lhs = act(params, s1, act(params, s2, f)).values
    rhs = act(params, scaled_compose(s1, s2, grid.group), f).values
    assert np.abs(lhs - rhs).max() <= 1e-12


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(T_LEVELS), st.integers(-16, 16), st.integers(0, 2 ** 32 - 1))
def test_isometry_on_resolved_functions(t, k, seed):
    from localis.function_space import make_grid
    from localis.group_core import euclidean
    grid = make_grid(euclidean(1), 0.0625, 8)
    params = RepParams(grid)
    f = coarse_step_function(grid, np.random.default_rng(seed))
    out = act(params, ScaledElement(t, (k * 0.0625,)), f)
    assert abs(lp_norm(out) - lp_norm(f)) <= 1e-12 * lp_norm(f)


def test_isometry_needs_resolved_functions(egrid, eparams, rng):
    # white-noise samples are aliased by the sublattice read of pi(1/2, e)
    f = SampledFunction(egrid, rng.standard_normal(egrid.size) * (np.abs(egrid.points[:, 0]) <= 3))
    out = act(eparams, ScaledElement(0.5, (0.0,)), f)
    assert abs(lp_norm(out) - lp_norm(f)) > 1e-3


@pytest.mark.parametrize("t", T_LEVELS)
@pytest.mark.parametrize("k", [-24, 0, 7, 40])
def test_projection_covariance(egrid, eparams, ewindow, t, k):
    s = ScaledElement(t, (k * 0.0625,))
    P = projection_matrix(ewindow.mask)
    lhs = conjugate(eparams, s, P)
    rhs = projection_matrix(transform_mask(s, ewindow.mask))
    assert np.array_equal(lhs, rhs)
    # the anti-representation form realises the inverse element
    inv = scaled_inverse(s, egrid.group)
    if inv.t <= 1:
        assert np.array_equal(np.asarray(double_act(eparams, inv, inv, P)), rhs)


def test_operator_action_is_a_homomorphism(egrid, eparams, rng):
    A = rng.standard_normal((egrid.size, egrid.size))
    G = egrid.group
    a, b = ScaledElement(0.5, (0.25,)), ScaledElement(0.5, (1.0,))
    c, d = ScaledElement(1.0, (-0.5,)), ScaledElement(0.25, (2.0,))
    lhs = operator_action(eparams, a, c, operator_action(eparams, b, d, A))
    rhs = operator_action(eparams, scaled_compose(a, b, G), scaled_compose(c, d, G), A)
    inner = np.abs(egrid.points[:, 0]) <= 2
    assert np.allclose(np.asarray(lhs)[np.ix_(inner, inner)], np.asarray(rhs)[np.ix_(inner, inner)],
                       atol=1e-12)


def test_heisenberg_projection_covariance(hgrid_small):
    from localis.operator_lab import WindowSpec
    params = RepParams(hgrid_small)
    W = WindowSpec(hgrid_small, 1.0)
    P = projection_matrix(W.mask)
    for s in (ScaledElement(0.5, (0.0, 0.0, 0.0)), ScaledElement(1.0, (0.5, 0.5, -0.5))):
        assert np.array_equal(np.asarray(conjugate(params, s, P)),
                              projection_matrix(transform_mask(s, W.mask)))

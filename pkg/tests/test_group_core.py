import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from localis.group_core import (Group, ScaledElement, act_on_points, compose, dilate, euclidean,
                                heisenberg, homogeneous_dimension, inverse, pull_back_points,
                                scaled_compose, scaled_inverse, semidirect_compose, semidirect_inverse)

coord = st.floats(-5, 5, allow_nan=False)
scale = st.floats(0.1, 5.0)
groups = st.sampled_from([euclidean(1), euclidean(3), heisenberg(1), heisenberg(2)])


def elem(G):
    return st.lists(coord, min_size=G.dim, max_size=G.dim).map(np.array)


@st.composite
def group_and_elems(draw, count):
    G = draw(groups)
    return (G, *[draw(elem(G)) for _ in range(count)])


@st.composite
def group_and_scaled(draw, count):
    G = draw(groups)
    return (G, *[ScaledElement(draw(scale), tuple(draw(elem(G)))) for _ in range(count)])


def heis_oracle(a, b):
    s, x, y = a
    s2, x2, y2 = b
    return np.array([s + s2 + 0.5 * (x * y2 - x2 * y), x + x2, y + y2])


def test_compose_examples():
    assert compose([2.0], [3.0], euclidean(1)) == pytest.approx([5.0])
    H = heisenberg(1)
    assert compose([0, 1, 0], [0, 0, 1], H) == pytest.approx([0.5, 1, 1])
    assert compose([0, 0, 1], [0, 1, 0], H) == pytest.approx([-0.5, 1, 1])


def test_inverse_examples():
    assert inverse([3.0], euclidean(1)) == pytest.approx([-3.0])
    H = heisenberg(1)
    a = np.array([1.0, 2.0, 3.0])
    assert inverse(a, H) == pytest.approx(-a)
    assert compose(a, inverse(a, H), H) == pytest.approx([0, 0, 0])
    assert inverse(H.identity, H) == pytest.approx(H.identity)


def test_dilate_examples():
    H = heisenberg(1)
    assert dilate(2, [1, 1, 1], H) == pytest.approx([4, 2, 2])
    assert dilate(1, [1.5, -2, 3], H) == pytest.approx([1.5, -2, 3])
    assert dilate(0.5, [4.0], euclidean(1)) == pytest.approx([2.0])


@pytest.mark.parametrize("t", [0.0, -1.0])
def test_dilate_rejects_nonpositive(t):
    with pytest.raises(ValueError):
        dilate(t, [1.0], euclidean(1))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        compose([1.0, 2.0], [1.0, 2.0, 3.0], heisenberg(1))
    with pytest.raises(ValueError):
        inverse([1.0, 2.0], heisenberg(1))


def test_scaled_examples():
    G = euclidean(1)
    p = scaled_compose(ScaledElement(2, (3,)), ScaledElement(4, (5,)), G)
    assert (p.t, p.g) == (8, (13,))
    unit = ScaledElement.unit(G)
    q = ScaledElement(0.3, (1.7,))
    assert scaled_compose(unit, q, G) == q
    H = heisenberg(1)
    r = scaled_compose(ScaledElement(2, (0, 0, 0)), ScaledElement(1, (1, 0, 0)), H)
    assert r.t == 2 and r.g == pytest.approx((4, 0, 0))
    inv = scaled_inverse(ScaledElement(2, (3,)), G)
    assert inv.t == 0.5 and inv.g == pytest.approx((-1.5,))
    assert scaled_inverse(unit, G) == unit
    inv = scaled_inverse(ScaledElement(2, (4, 0, 0)), H)
    assert inv.t == 0.5 and inv.g == pytest.approx((-1, 0, 0))


def test_homogeneous_dimension():
    assert homogeneous_dimension(euclidean(1)) == 1
    assert homogeneous_dimension(euclidean(3)) == 3
    # layers of dimension 2 (degree 1) and 1 (degree 2)
    assert homogeneous_dimension(heisenberg(1)) == 1 * 2 + 2 * 1
    assert homogeneous_dimension(heisenberg(2)) == 6


def test_scaled_element_validation():
    with pytest.raises(ValueError):
        ScaledElement(0.0, (1.0,))
    with pytest.raises(ValueError):
        ScaledElement(1.0, (np.nan,))


def test_descriptor_json_roundtrip():
    for G in (euclidean(2), heisenberg(1)):
        assert Group.from_json(G.to_json()) == G
        assert json.loads(G.to_json()) == {"kind": G.kind, "n": G.n}
    with pytest.raises(ValueError):
        Group.from_dict({"kind": "heisenberg"})
    with pytest.raises(ValueError):
        Group.from_dict({"kind": "sl2", "n": 1})


@given(group_and_elems(3))
def test_associativity(data):
    G, a, b, c = data
    assert np.allclose(G.compose(G.compose(a, b), c), G.compose(a, G.compose(b, c)), atol=1e-12, rtol=0)


@given(group_and_elems(2))
def test_heisenberg_law_matches_formula(data):
    G, a, b = data
    if G.kind == "heisenberg" and G.n == 1:
        assert np.allclose(G.compose(a, b), heis_oracle(a, b), atol=1e-12)


@given(group_and_elems(2), scale, scale)
def test_dilations_are_automorphisms(data, t, s):
    G, a, b = data
    assert np.allclose(G.dilate(t, G.compose(a, b)), G.compose(G.dilate(t, a), G.dilate(t, b)), atol=1e-11)
    assert np.allclose(G.dilate(t, G.dilate(s, a)), G.dilate(t * s, a), atol=1e-11)


@given(group_and_scaled(3))
def test_semidirect_axioms(data):
    G, p, q, r = data
    lhs = scaled_compose(scaled_compose(p, q, G), r, G)
    rhs = scaled_compose(p, scaled_compose(q, r, G), G)
    assert np.allclose(lhs.coords, rhs.coords, atol=1e-10)
    unit = ScaledElement.unit(G)
    for x in (scaled_compose(p, scaled_inverse(p, G), G), scaled_compose(scaled_inverse(p, G), p, G)):
        assert np.allclose(x.coords, unit.coords, atol=1e-11)


@given(st.floats(0.1, 5), coord, st.floats(0.1, 5), coord)
def test_axb_specialisation(a, b, a2, b2):
    x = scaled_compose(ScaledElement(a, (b,)), ScaledElement(a2, (b2,)), euclidean(1))
    assert x.t == a * a2
    assert x.g[0] == pytest.approx(a * b2 + b, abs=1e-12)


@settings(max_examples=50)
@given(group_and_scaled(1), st.data())
def test_pull_back_inverts_action(data, draw):
    G, s = data
    pts = np.array([draw.draw(elem(G)) for _ in range(4)])
    back = pull_back_points(s, act_on_points(s, pts, G), G)
    assert np.allclose(back, pts, atol=1e-9)


def test_broadcasting():
    H = heisenberg(1)
    a = np.zeros((5, 3))
    b = np.ones((5, 3))
    assert H.compose(a, b).shape == (5, 3)
    assert H.dilate(np.array([1.0, 2.0, 0.5, 1.0, 1.0]), b)[1] == pytest.approx([4, 2, 2])


@settings(max_examples=50, deadline=None)
@given(groups, st.integers(0, 2 ** 32 - 1))
def test_batched_semidirect_law_matches_elementwise(G, seed):
    rng = np.random.default_rng(seed)
    t1, t2 = rng.uniform(0.1, 4, 16), rng.uniform(0.1, 4, 16)
    g1, g2 = rng.uniform(-3, 3, (16, G.dim)), rng.uniform(-3, 3, (16, G.dim))
    t, g = semidirect_compose(t1, g1, t2, g2, G)
    ti, gi = semidirect_inverse(t1, g1, G)
    for i in range(16):
        p, q = ScaledElement(t1[i], tuple(g1[i])), ScaledElement(t2[i], tuple(g2[i]))
        pq, pinv = scaled_compose(p, q, G), scaled_inverse(p, G)
        assert pq.t == pytest.approx(t[i]) and np.allclose(pq.coords, g[i], atol=1e-12)
        assert pinv.t == pytest.approx(ti[i]) and np.allclose(pinv.coords, gi[i], atol=1e-12)
    e_t, e_g = semidirect_compose(t1, g1, ti, gi, G)
    assert np.allclose(e_t, 1) and np.allclose(e_g, 0, atol=1e-10)

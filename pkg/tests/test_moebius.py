import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rlx.errors import ValidationError
from rlx.moebius import (
    IDENTITY,
    INF,
    MoebiusMap,
    apply,
    chordal,
    classify,
    cocycle,
    cocycle_at_image,
    compose,
    homogeneous,
    inverse,
    points_equal,
    transfer_density,
)
from rlx.schottky import enumerate_words, generators


G1 = MoebiusMap(1.5, 1.0, 1.25, 1.5)

finite_points = st.floats(
    min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False
)


@pytest.fixture(scope="module")
def small_words(cfg3):
    return [m for _w, m in enumerate_words(cfg3, 4)]


def test_apply_identity():
    assert apply(IDENTITY, 0.7) == 0.7


def test_apply_generator_endpoint():
    # the inner mirror endpoint maps to its reflection with unit density
    assert abs(apply(G1, -0.4) - 0.4) <= 1e-12


def test_apply_at_infinity_hits_circle_center():
    # oracle: g = inversion about |z-c|=r composed with z -> -conj(z);
    # the reflection fixes infinity and the inversion sends it to c
    c, r = 1.2, 0.8
    reflected = INF
    inverted = c  # I(inf) = c + r^2 / conj(inf - c) = c
    assert abs(apply(G1, reflected) - inverted) <= 1e-12
    assert inverted == 1.2


def test_apply_pole_maps_to_infinity():
    g = MoebiusMap(2.0, 3.0, 1.0, 2.0)
    assert apply(g, -2.0) == INF
    assert apply(g, INF) == 2.0


def test_apply_complex_point():
    z = apply(G1, 1j)
    assert z.imag > 0
    assert abs(z - (1.5j + 1.0) / (1.25j + 1.5)) <= 1e-15


def test_compose_with_inverse_is_identity():
    gi = compose(G1, inverse(G1))
    assert max(abs(gi.a - 1), abs(gi.b), abs(gi.c), abs(gi.d - 1)) <= 1e-15


def test_compose_against_direct_matrix_product():
    # oracle: plain 2x2 multiplication
    m = np.array([[1.5, 1.0], [1.25, 1.5]])
    prod = m @ m
    sq = compose(G1, G1)
    assert np.allclose(sq.entries, prod.reshape(-1), rtol=0, atol=1e-12)
    assert np.allclose(prod.reshape(-1), [3.5, 3.0, 3.75, 3.5], rtol=0, atol=1e-12)


def test_sign_representatives_compose_identically():
    minus = MoebiusMap(-1.5, -1.0, -1.25, -1.5)
    assert minus.entries == G1.entries
    assert compose(minus, G1).entries == compose(G1, G1).entries


def test_canonical_sign_first_nonzero_positive():
    rot = MoebiusMap(0.0, -1.0, 1.0, 0.0)
    assert rot.entries == (0.0, 1.0, -1.0, 0.0)


def test_rejects_nonpositive_determinant():
    with pytest.raises(ValidationError):
        MoebiusMap(1.0, 0.0, 0.0, -1.0)
    with pytest.raises(ValidationError):
        MoebiusMap(0.0, 0.0, 0.0, 0.0)


def test_renormalizes_scaled_input():
    g = MoebiusMap(2.0, 0.0, 0.0, 2.0)
    assert g.entries == (1.0, 0.0, 0.0, 1.0)


def test_cocycle_identity_map():
    for x in (-3.0, 0.0, 2.5, INF):
        assert cocycle(IDENTITY, x) == 1.0


def test_cocycle_paper_values():
    assert abs(cocycle(G1, -0.4) - 1.0) <= 1e-12
    # oracle: direct norm ratio with w(0) = (0, 1)
    direct = 1.0 / (G1.b**2 + G1.d**2)
    assert abs(cocycle(G1, 0.0) - direct) <= 1e-15
    assert abs(direct - 4.0 / 13.0) <= 1e-15


def test_cocycle_anchor_chain():
    # f(G1^2; 0) = 4/85 = f(G1; 2/3) * f(G1; 0) = (13/85)(4/13)
    sq = compose(G1, G1)
    assert abs(cocycle(sq, 0.0) - 4.0 / 85.0) <= 1e-12 * (4.0 / 85.0)
    assert abs(cocycle(G1, 2.0 / 3.0) - 13.0 / 85.0) <= 1e-15
    prod = cocycle(G1, apply(G1, 0.0)) * cocycle(G1, 0.0)
    assert abs(cocycle(sq, 0.0) - prod) <= 1e-12 * prod


def test_transfer_density_values():
    assert transfer_density(IDENTITY, 1.3) == 1.0
    assert abs(transfer_density(G1, -0.4) - 1.0) <= 1e-12
    assert abs(transfer_density(G1, 0.0) - 13.0 / 4.0) <= 1e-12


def test_reciprocity_at_the_pole():
    # t = g^{-1} . inf is the delicate case the homogeneous form covers
    g = MoebiusMap(2.0, 3.0, 1.0, 2.0)
    t = -2.0
    assert apply(g, t) == INF
    assert abs(transfer_density(g, t) * cocycle(g, t) - 1.0) <= 1e-12


@settings(max_examples=200, deadline=None, derandomize=True)
@given(st.data())
def test_reciprocity_on_group_elements(cfg3, small_words, data):
    g = data.draw(st.sampled_from(small_words))
    t = data.draw(st.one_of(finite_points, st.just(INF)))
    assert abs(transfer_density(g, t) * cocycle(g, t) - 1.0) <= 1e-12


@settings(max_examples=200, deadline=None, derandomize=True)
@given(st.data())
def test_cocycle_identity_property(cfg3, small_words, data):
    g = data.draw(st.sampled_from(small_words))
    h = data.draw(st.sampled_from(small_words))
    x = data.draw(st.one_of(finite_points, st.just(INF)))
    lhs = cocycle(compose(g, h), x)
    rhs = cocycle_at_image(g, h, x) * cocycle(h, x)
    assert abs(lhs - rhs) <= 1e-10 * lhs


@settings(max_examples=200, deadline=None, derandomize=True)
@given(st.data())
def test_action_is_associative_in_chordal_metric(cfg3, small_words, data):
    g = data.draw(st.sampled_from(small_words))
    h = data.draw(st.sampled_from(small_words))
    x = data.draw(st.one_of(finite_points, st.just(INF)))
    assert chordal(apply(compose(g, h), x), apply(g, apply(h, x))) <= 1e-10


def test_determinant_preserved_along_moderate_chains(cfg3):
    # bounded-entry chain: alternating generator and inverse compositions
    g1, g2 = generators(cfg3)
    chain = IDENTITY
    seq = [g1, g2, inverse(g1), inverse(g2)] * 5
    for step in seq:
        chain = compose(chain, step)
        assert abs(chain.det - 1.0) <= 1e-9


def test_chordal_metric():
    assert chordal(0.7, 0.7) == 0.0
    assert chordal(0.0, INF) == 2.0
    assert chordal(INF, INF) == 0.0
    assert abs(chordal(5.0, INF) - 2.0 / math.hypot(1.0, 5.0)) <= 1e-15


def test_chordal_against_stereographic_oracle():
    # oracle: embed x -> (2x, x^2 - 1)/(1 + x^2) on the unit circle
    def embed(x):
        return np.array([2 * x, x * x - 1.0]) / (1.0 + x * x)

    for x, y in ((1.0, -1.0), (0.0, 3.0), (-2.0, 0.5)):
        expected = float(np.linalg.norm(embed(x) - embed(y)))
        assert abs(chordal(x, y) - expected) <= 1e-12
    assert chordal(1.0, -1.0) == 2.0


def test_points_equal_uses_chordal_tolerance():
    assert points_equal(1e9, 1e9 + 1e-4)  # chordally tiny
    assert not points_equal(0.0, 1e-9)


def test_homogeneous_vector():
    assert homogeneous(2.0) == (2.0, 1.0)
    assert homogeneous(INF) == (1.0, 0.0)


def test_classify():
    assert classify(IDENTITY) == "identity"
    assert classify(G1) == "hyperbolic"
    # oracle: trace of (1/r)[[c, c^2-r^2],[1, c]] is 2c/r = 3 > 2
    assert abs(G1.trace - 3.0) <= 1e-12
    s, c = math.sin(math.pi / 4), math.cos(math.pi / 4)
    assert classify(MoebiusMap(c, -s, s, c)) == "elliptic"
    assert classify(MoebiusMap(1.0, 1.0, 0.0, 1.0)) == "parabolic"

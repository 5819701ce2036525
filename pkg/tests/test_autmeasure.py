import math

import numpy as np
import pytest

from rlx.autmeasure import (
    Atom,
    FundamentalMeasure,
    combine,
    discretize,
    extend,
    max_atom_difference,
    poincare_many,
    poincare_series,
    pushforward,
    restrict,
    transform,
    verify_automorphic,
)
from rlx.errors import ConvergenceError, DomainError, ValidationError
from rlx.herglotz import HerglotzData, boundary_recover_atom, evaluate
from rlx.moebius import INF, apply, chordal, cocycle, compose, inverse
from rlx.schottky import CircleDatum, SchottkyConfig, generators


def brute_force_poincare(config, x, max_len):
    """Independent oracle: recursive word enumeration and direct summation."""
    gens = [np.array([[g.a, g.b], [g.c, g.d]]) for g in generators(config)]
    letters = []
    for i, g in enumerate(gens):
        letters.append((i + 1, g))
        letters.append((-(i + 1), np.linalg.inv(g)))

    def f_value(m):
        num, den = m[0, 0] * x + m[0, 1], m[1, 0] * x + m[1, 1]
        return (x * x + 1.0) / (num * num + den * den)

    total = 0.0

    def walk(mat, last, depth):
        nonlocal total
        total += f_value(mat)
        if depth == max_len:
            return
        for sign, lm in letters:
            if sign == -last:
                continue
            walk(mat @ lm, sign, depth + 1)

    walk(np.eye(2), 0, 0)
    return total


# ---------------------------------------------------------------------------
# measures and quadrature


def test_atom_validation():
    with pytest.raises(ValidationError):
        Atom(0.0, 0.0)
    with pytest.raises(ValidationError):
        Atom(0.0, -1.0)
    with pytest.raises(ValidationError):
        Atom(float("nan"), 1.0)


def test_measure_atoms_must_locate_on_their_circle(cfg3):
    with pytest.raises(ValidationError):
        FundamentalMeasure(cfg3, ((Atom(2.5, 1.0),), (), ()))
    with pytest.raises(ValidationError):
        FundamentalMeasure(cfg3, ((Atom(1.5, 1.0),), (), ()))  # excluded region
    with pytest.raises(ValidationError):  # colliding atoms on one circle
        FundamentalMeasure(cfg3, ((Atom(0.0, 1.0), Atom(0.0, 2.0)), (), ()))


def test_discretize_constant_density(cfg3):
    m = discretize(cfg3, lambda x: 1.0, [4, 4, 4])
    atoms = m.atoms[0]
    assert [a.point for a in atoms] == pytest.approx([-0.3, -0.1, 0.1, 0.3], abs=1e-12)
    assert all(abs(a.weight - 0.2) <= 1e-12 for a in atoms)


def test_discretize_mass_invariant_under_node_doubling(cfg3):
    m1 = discretize(cfg3, lambda x: 1.0, [4, 4, 4])
    m2 = discretize(cfg3, lambda x: 1.0, [8, 8, 8])
    for n in (0, 1):  # finite circles
        assert sum(a.weight for a in m1.atoms[n]) == pytest.approx(
            sum(a.weight for a in m2.atoms[n]), abs=1e-12
        )


def test_discretize_linear_density_second_order(cfg3):
    # oracle: closed-form integral of (x + 0.5) over [-0.4, 0.4) is 0.4
    exact = 0.4
    errs = []
    for nodes in (8, 16, 32):
        m = discretize(cfg3, lambda x: x + 0.5, [nodes, 1, 1])
        errs.append(abs(sum(a.weight for a in m.atoms[0]) - exact))
    # midpoint rule on a linear density is exact; check machine-level error
    assert max(errs) <= 1e-13


def test_discretize_quadratic_density_rate(cfg3):
    exact = 2 * 0.4**3 / 3  # integral of x^2 over [-0.4, 0.4)
    errs = []
    for nodes in (8, 16, 32):
        m = discretize(cfg3, lambda x: x * x, [nodes, 1, 1])
        errs.append(abs(sum(a.weight for a in m.atoms[0]) - exact))
    assert errs[1] <= errs[0] / 3.5 and errs[2] <= errs[1] / 3.5


def test_discretize_rejects_negative_density(cfg3):
    with pytest.raises(ValidationError):
        discretize(cfg3, lambda x: -1.0, 4)


def test_discretize_wrap_circle_integrates_decaying_density(cfg2):
    # oracle: integral of 1/(1+x^2) over |x| >= 3 is pi - 2*atan(3)
    exact = math.pi - 2.0 * math.atan(3.0)
    m = discretize(cfg2, lambda x: 1.0 / (1.0 + x * x), [1, 400])
    assert sum(a.weight for a in m.atoms[1]) == pytest.approx(exact, abs=1e-4)


# ---------------------------------------------------------------------------
# extension


def test_extend_contains_transported_atom(cfg3):
    ext = extend(FundamentalMeasure.delta(cfg3, 0.0), 6)
    g1 = generators(cfg3)[0]
    target = apply(g1, 0.0)
    idx = int(np.argmin(np.abs(ext.points - target)))
    assert abs(ext.points[idx] - 2.0 / 3.0) <= 1e-12
    assert abs(ext.weights[idx] - cocycle(g1, 0.0)) <= 1e-15
    assert abs(ext.weights[idx] - 4.0 / 13.0) <= 1e-15


def test_extend_identity_block_preserves_source(cfg3):
    ext = extend(FundamentalMeasure.delta(cfg3, 0.0), 6)
    assert ext.points[0] == 0.0 and ext.weights[0] == 1.0
    assert ext.word_lengths[0] == 0


def test_extend_mass_grows_to_poincare_value(cfg3):
    measure = FundamentalMeasure.delta(cfg3, 0.0)
    masses = [extend(measure, L).total_mass for L in (4, 8, 12)]
    assert masses[0] < masses[1] < masses[2]
    assert abs(masses[2] - poincare_series(cfg3, 0.0, 12).value) <= 1e-8


def test_extend_records_words(cfg3):
    measure = FundamentalMeasure.from_pairs(cfg3, [(0.0, 1.0), (2.3, 0.5)])
    ext = extend(measure, 3)
    recs = list(ext.records())
    assert len(recs) == len(ext.points)
    assert recs[0][0] == () and recs[0][3] == 0.0
    for (word, n, base, point, weight), length in zip(recs, ext.word_lengths):
        assert len(word) == length


def test_extend_linearity_exact(cfg3):
    m1 = FundamentalMeasure.delta(cfg3, 0.1)
    m2 = FundamentalMeasure.delta(cfg3, -0.2)
    both = combine([m1, m2], [2.0, 0.5])  # powers of two: exact scaling
    ext = extend(both, 5)
    e1, e2 = extend(m1, 5), extend(m2, 5)
    merged = {}
    for pts, wts, s in ((e1.points, e1.weights, 2.0), (e2.points, e2.weights, 0.5)):
        for p, w in zip(pts, wts):
            merged[p] = merged.get(p, 0.0) + s * w
    for p, w in zip(ext.points, ext.weights):
        assert merged[float(p)] == w


def test_extend_refuses_stalling_tail():
    # nearly tangent circle pair: contraction too weak, ratios near 1
    cfg = SchottkyConfig((CircleDatum(1.0, 0.999),))
    with pytest.raises(ConvergenceError):
        extend(FundamentalMeasure.delta(cfg, 0.0), 8)


def test_extension_atoms_keep_clear_of_deep_limit_samples(cfg3):
    # shallow extension atoms stay away from the deep limit-set sample
    from rlx.schottky import limit_set_sample

    measure = FundamentalMeasure.from_pairs(cfg3, [(0.1, 1.0), (2.3, 1.0)])
    ext = extend(measure, 4)
    sample = np.array(limit_set_sample(cfg3, 12))
    for p in ext.points:
        assert np.min([chordal(p, s) for s in sample]) >= 1e-6


# ---------------------------------------------------------------------------
# Poincaré series


def test_poincare_trivial_group(cfg1):
    res = poincare_series(cfg1, 0.3, 10)
    assert res.value == 1.0 and res.tail_ratio == 0.0


def test_poincare_identity_lower_bound(cfg3):
    for x in (-2.5, 0.0, 6.0, INF):
        assert poincare_series(cfg3, x, 6).value >= 1.0


def test_poincare_matches_brute_force_oracle(cfg2, cfg3):
    for config, x, L in ((cfg2, 0.0, 14), (cfg3, 0.25, 6)):
        res = poincare_series(config, x, L)
        oracle = brute_force_poincare(config, x, L)
        assert abs(res.value - oracle) <= 1e-12 * oracle
    res = poincare_series(cfg2, 0.0, 14)
    assert 0.0 < res.tail_ratio < 0.1


def test_poincare_rejects_points_near_limit_set(cfg2):
    with pytest.raises(DomainError):
        poincare_series(cfg2, math.sqrt(3.0), 12)


def test_poincare_many_matches_single(cfg3):
    many = poincare_many(cfg3, [0.0, 2.3, INF], 8)
    for x, r in zip([0.0, 2.3, INF], many):
        single = poincare_series(cfg3, x, 8)
        assert r.value == single.value and r.per_length == single.per_length


# ---------------------------------------------------------------------------
# transport


def test_transform_identity(cfg3):
    from rlx.moebius import IDENTITY

    atoms = (Atom(0.3, 2.0),)
    assert transform(atoms, IDENTITY) == atoms


def test_transform_example(cfg3):
    # oracle: nu_{g^{-1}} places f(G1; 0) at G1·0
    g1 = generators(cfg3)[0]
    (moved,) = transform((Atom(0.0, 1.0),), inverse(g1))
    assert abs(moved.point - 2.0 / 3.0) <= 1e-12
    assert abs(moved.weight - 4.0 / 13.0) <= 1e-12


def test_transform_boundary_consistency(cfg3):
    # atom recovered from F∘g at g^{-1}·x equals the transported weight
    g = generators(cfg3)[1]
    nu = (Atom(0.3, 0.7),)
    F = HerglotzData.from_atoms([(a.point, a.weight) for a in nu])
    composed = lambda lam: evaluate(F, apply(g, lam))
    (moved,) = transform(nu, g)
    recovered = boundary_recover_atom(composed, moved.point)
    assert abs(recovered - moved.weight) <= 1e-8


def test_transform_composes_via_cocycle(cfg3):
    g1, g2 = generators(cfg3)
    atoms = (Atom(0.25, 1.3), Atom(-2.5, 0.4))
    once = transform(transform(atoms, g1), g2)
    direct = transform(atoms, compose(g1, g2))
    for a, b in zip(once, direct):
        assert chordal(a.point, b.point) <= 1e-10
        assert abs(a.weight - b.weight) <= 1e-10 * a.weight


def test_pushforward(cfg3):
    g1 = generators(cfg3)[0]
    atoms = (Atom(0.0, 0.7), Atom(2.3, 0.3))
    moved = pushforward(atoms, g1)
    assert moved[0].point == apply(g1, 0.0)
    assert sum(a.weight for a in moved) == sum(a.weight for a in atoms)
    twice = pushforward(pushforward(atoms, g1), g1)
    direct = pushforward(atoms, compose(g1, g1))
    for a, b in zip(twice, direct):
        assert chordal(a.point, b.point) <= 1e-10 and a.weight == b.weight


def test_restrict_roundtrip(cfg3):
    measure = FundamentalMeasure.from_pairs(
        cfg3, [(0.1, 1.0), (-0.2, 0.5), (2.3, 2.0), (INF, 1.5)]
    )
    ext = extend(measure, 8)
    back = restrict(ext)
    assert max_atom_difference(back, measure) == 0.0


def test_restrict_drops_orbit_atoms(cfg3):
    ext = extend(FundamentalMeasure.delta(cfg3, 0.0), 8)
    back = restrict(ext)
    assert sum(len(part) for part in back.atoms) == 1


def test_extend_of_restriction_approximates_original(cfg3):
    measure = FundamentalMeasure.delta(cfg3, 0.0)
    ext = extend(measure, 10)
    again = extend(restrict(ext), 10)
    deeper = extend(measure, 12)
    # truncation-limited roundtrip: within the deeper run's tail allowance
    assert abs(again.total_mass - ext.total_mass) <= 1e-12
    assert abs(deeper.total_mass - again.total_mass) <= 10 * ext.tail_mass


def test_mass_identity(cfg3):
    rng = np.random.default_rng(2)
    measure = FundamentalMeasure.from_pairs(
        cfg3, [(0.05, 0.3), (-0.31, 0.7), (2.41, 1.1), (7.5, 0.2)]
    )
    ext = extend(measure, 10)
    atoms = measure.all_atoms()
    dvals = poincare_many(cfg3, [a.point for _n, a in atoms], 10)
    dsum = sum(r.value * a.weight for r, (_n, a) in zip(dvals, atoms))
    assert abs(ext.total_mass - dsum) <= 1e-8


def test_verify_automorphic_passes_for_extension(cfg3):
    ext = extend(FundamentalMeasure.delta(cfg3, 0.0), 10)
    rng = np.random.default_rng(5)
    intervals = [tuple(sorted(rng.uniform(-0.4, 0.4, 2))) for _ in range(20)]
    intervals = [(a, b) for a, b in intervals if b - a > 1e-3]
    for g in generators(cfg3):
        report = verify_automorphic(ext, g, intervals)
        assert report.passed
        assert report.max_residual <= report.tolerance


def test_verify_automorphic_detects_perturbation(cfg3):
    ext = extend(FundamentalMeasure.delta(cfg3, 0.0), 10)
    weights = ext.weights.copy()
    weights[0] *= 1.01  # perturb the base atom weight by 1%
    import dataclasses

    broken = dataclasses.replace(ext, weights=weights)
    g = generators(cfg3)[0]
    report = verify_automorphic(broken, g, [(-0.35, 0.35)])
    assert not report.passed


def test_verify_automorphic_trivial_group(cfg1):
    from rlx.moebius import IDENTITY

    ext = extend(FundamentalMeasure.delta(cfg1, 0.0), 5)
    report = verify_automorphic(ext, IDENTITY, [(-1.0, 1.0)])
    assert report.passed and report.max_residual == 0.0


def test_verify_automorphic_rejects_bad_intervals(cfg3):
    ext = extend(FundamentalMeasure.delta(cfg3, 0.0), 4)
    g = generators(cfg3)[0]
    with pytest.raises(ValidationError):
        verify_automorphic(ext, g, [(1.0, 1.8)])  # inside an excluded disk
    with pytest.raises(ValidationError):
        verify_automorphic(ext, g, [(0.2, 2.2)])  # crosses a piece boundary


def test_extension_header_and_serialization(cfg3):
    from rlx.jsonio import extension_header_json, measure_from_json, measure_to_json

    measure = FundamentalMeasure.from_pairs(cfg3, [(0.0, 1.0), (INF, 0.5)])
    ext = extend(measure, 6)
    header = extension_header_json(ext)
    assert header["L"] == 6 and header["tail_ratio"] < 0.9
    doc = measure_to_json(measure)
    assert doc["atoms"][1]["point"] == "inf"
    back = measure_from_json(cfg3, doc)
    assert max_atom_difference(back, measure) == 0.0

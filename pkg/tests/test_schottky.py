import math

import numpy as np
import pytest

from rlx.errors import ResourceLimitError, ValidationError
from rlx.moebius import INF, chordal, cocycle
from rlx.schottky import (
    CircleDatum,
    SchottkyConfig,
    enumerate_words,
    fundamental_intervals,
    generators,
    limit_set_sample,
    locate,
    quotient_bounds,
    word_count,
    word_levels,
    word_matrix,
    word_of_matrix,
)


def test_circle_validation():
    with pytest.raises(ValidationError):
        CircleDatum(1.0, 1.0)  # touches the mirror axis
    with pytest.raises(ValidationError):
        CircleDatum(1.0, -0.5)
    with pytest.raises(ValidationError):
        SchottkyConfig((CircleDatum(2.0, 1.0), CircleDatum(2.5, 1.0)))


def test_generator_formula(cfg2, cfg3):
    g1, g2 = generators(cfg3)
    assert np.allclose(g1.entries, (1.5, 1.0, 1.25, 1.5), rtol=0, atol=1e-12)
    # oracle: substitute (c, r) = (2, 1) into (1/r)[[c, c^2-r^2],[1, c]]
    (g,) = generators(cfg2)
    assert np.allclose(g.entries, (2.0, 3.0, 1.0, 2.0), rtol=0, atol=1e-15)


def test_generator_determinant_is_algebraically_one():
    rng = np.random.default_rng(3)
    for _ in range(25):
        r = rng.uniform(0.1, 2.0)
        c = r + rng.uniform(0.05, 5.0)
        (g,) = generators(SchottkyConfig((CircleDatum(c, r),)))
        assert abs(g.det - 1.0) <= 1e-12


def test_fundamental_intervals_cfg3(cfg3):
    fi = fundamental_intervals(cfg3)
    [(p1,), (p2a, p2b), (p3,)] = fi.pieces
    assert (p1.left, p1.right) == pytest.approx((-0.4, 0.4), abs=1e-12)
    assert (p2a.left, p2a.right) == pytest.approx((-2.7, -2.0), abs=1e-12)
    assert (p2b.left, p2b.right) == pytest.approx((2.0, 2.7), abs=1e-12)
    assert (p3.left, p3.right) == pytest.approx((5.5, -5.5), abs=1e-12)
    assert p3.wraps and not p1.wraps


def test_fundamental_intervals_cfg2(cfg2):
    fi = fundamental_intervals(cfg2)
    [(p1,), (p2,)] = fi.pieces
    # oracle: endpoint arithmetic c -+ r
    assert (p1.left, p1.right) == (-1.0, 1.0)
    assert (p2.left, p2.right) == (3.0, -3.0) and p2.wraps


def test_trivial_group_covers_everything(cfg1):
    fi = fundamental_intervals(cfg1)
    for x in (-1e9, -2.0, 0.0, 17.0, INF):
        loc = fi.locate(x)
        assert loc is not None and loc[0] == 1


def test_word_count_closed_form():
    assert word_count(2, 0) == 1
    assert word_count(2, 3) == 1 + 4 + 12 + 36 == 53
    assert word_count(1, 5) == 11


def test_enumerate_words_identity_only(cfg3):
    assert [w for w, _ in enumerate_words(cfg3, 0)] == [()]


def test_enumerate_words_order_and_matrices(cfg3):
    seen = set()
    prev_key = None
    for word, mat in enumerate_words(cfg3, 3):
        assert word not in seen
        seen.add(word)
        # reduced: no adjacent cancellation
        assert all(a != -b for a, b in zip(word, word[1:]))
        key = (len(word), tuple(2 * (abs(s) - 1) + (s < 0) for s in word))
        if prev_key is not None:
            assert key > prev_key
        prev_key = key
        ref = word_matrix(cfg3, word)
        assert np.allclose(mat.entries, ref.entries, rtol=1e-12, atol=1e-12)
    assert len(seen) == 53


def test_enumerate_respects_element_cap(cfg3):
    with pytest.raises(ResourceLimitError):
        list(enumerate_words(cfg3, 10, element_cap=1000))


def test_all_words_hyperbolic(cfg3):
    for level in word_levels(cfg3, 6):
        if level.length == 0:
            continue
        traces = np.abs(level.mats[:, 0] + level.mats[:, 3])
        assert float(traces.min()) > 2.0


def test_word_determinants_multiplicative(cfg3):
    for level in word_levels(cfg3, 10):
        assert float(np.abs(level.dets - 1.0).max()) <= 1e-9


def test_limit_set_trivial_group(cfg1):
    assert limit_set_sample(cfg1, 5) == []


def test_limit_set_cfg2_converges_to_fixed_points(cfg2):
    # oracle: fixed points of [[2,3],[1,2]] solve (2x+3)/(x+2) = x, x = ±sqrt(3)
    root = math.sqrt(3.0)
    for L, tol in ((6, 1e-5), (10, 1e-11)):
        sample = limit_set_sample(cfg2, L)
        assert len(sample) == 2
        assert min(abs(p - root) for p in sample) <= tol
        assert min(abs(p + root) for p in sample) <= tol


def test_limit_set_cfg3_stabilizes(cfg3):
    def hausdorff(a, b):
        a, b = np.asarray(a), np.asarray(b)
        d = np.array([[chordal(x, y) for y in b] for x in a])
        return max(d.min(axis=1).max(), d.min(axis=0).max())

    s10 = limit_set_sample(cfg3, 10)
    s12 = limit_set_sample(cfg3, 12)
    assert hausdorff(s10, s12) <= 0.05


def test_limit_samples_outside_piece_interiors(cfg3):
    fi = fundamental_intervals(cfg3)
    for p in limit_set_sample(cfg3, 8):
        for pieces in fi.pieces:
            for piece in pieces:
                if piece.wraps:
                    assert not (p > piece.left or p < piece.right)
                else:
                    assert not (piece.left < p < piece.right)


def test_locate_examples(cfg3):
    n, _theta = locate(cfg3, 0.0)
    assert n == 1
    n, _theta = locate(cfg3, 2.5)
    assert n == 2
    assert locate(cfg3, 1.5) is None
    assert locate(cfg3, INF)[0] == 3
    # half-open convention: left endpoints in, right endpoints out
    assert locate(cfg3, -0.4) == (1, 0.0)
    assert locate(cfg3, 0.4) is None


def test_locate_point_at_roundtrip(cfg3):
    fi = fundamental_intervals(cfg3)
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(1, 4))
        theta = float(rng.uniform(0.0, 2.0 * math.pi))
        x = fi.point_at(n, theta)
        n2, theta2 = fi.locate(x)
        assert n2 == n
        assert abs(theta2 - theta) <= 1e-9 or abs(abs(theta2 - theta) - 2 * math.pi) <= 1e-9


def test_every_exterior_point_in_exactly_one_piece(cfg3):
    fi = fundamental_intervals(cfg3)
    rng = np.random.default_rng(11)
    disks = [(c.c - c.r, c.c + c.r) for c in cfg3.circles]
    pts = list(rng.uniform(-12, 12, 400)) + [INF, 0.0, -5.5]
    for x in pts:
        if x is not INF and any(
            lo <= abs(x) <= hi for lo, hi in disks
        ):
            continue  # inside or on a disk or its mirror image
        hits = sum(
            piece.contains(x) for pieces in fi.pieces for piece in pieces
        )
        assert hits == 1, x


def test_quotient_bounds_single_circle():
    cfg = SchottkyConfig((CircleDatum(1.2, 0.8),))
    lo, hi = quotient_bounds(cfg, 1)
    # oracle: entry ratios of [[1.5, 1.0],[1.25, 1.5]]
    assert lo == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert hi == pytest.approx(1.5, abs=1e-12)


def test_quotient_bounds_monotone_and_positive(cfg3):
    prev_lo, prev_hi = quotient_bounds(cfg3, 1)
    for L in (2, 4, 6, 10):
        lo, hi = quotient_bounds(cfg3, L)
        assert lo <= prev_lo and hi >= prev_hi
        prev_lo, prev_hi = lo, hi
    assert prev_lo > 0.0


def _fixed_points(g):
    """Real fixed points of a hyperbolic map (test-local helper)."""
    disc = math.sqrt(g.trace * g.trace - 4.0)
    if g.c == 0.0:
        return [g.b / (g.d - g.a), INF]
    return [((g.a - g.d) + s * disc) / (2.0 * g.c) for s in (1.0, -1.0)]


def test_fixed_points_stay_clear_of_piece_interiors(cfg3):
    fi = fundamental_intervals(cfg3)

    def dist_to_piece(x, piece):
        if piece.contains(x) and not (
            x == piece.left
        ):  # interior or right-open membership
            return 0.0
        return min(chordal(x, piece.left), chordal(x, piece.right))

    for word, mat in enumerate_words(cfg3, 6):
        if not word:
            continue
        for fp in _fixed_points(mat):
            for pieces in fi.pieces:
                for piece in pieces:
                    assert dist_to_piece(fp, piece) >= 1e-6


def test_word_of_matrix_roundtrip(cfg3):
    for word, mat in enumerate_words(cfg3, 5):
        assert word_of_matrix(cfg3, mat) == word


def test_word_of_matrix_rejects_foreign_maps(cfg3):
    from rlx.moebius import MoebiusMap

    with pytest.raises(ValidationError):
        word_of_matrix(cfg3, MoebiusMap(1.0, 0.5, 0.0, 1.0))


def test_partial_sums_of_inverse_square_entries_stabilize(cfg3):
    # per-length sums of 1/a^2 + 1/b^2 + 1/c^2 + 1/d^2 over non-identity words
    totals = []
    running = 0.0
    for level in word_levels(cfg3, 14, element_cap=20_000_000):
        if level.length:
            m = level.mats
            running += float(np.sum(1.0 / m**2))
        totals.append(running)
    assert totals[14] - totals[12] < 0.1 * totals[12]


def test_per_length_cocycle_sums_decay(cfg3):
    sums = []
    for level in word_levels(cfg3, 12):
        f = np.array([cocycle_row(row) for row in level.mats])
        sums.append(float(f.sum()))
    ratios = [sums[i + 1] / sums[i] for i in range(len(sums) - 1)]
    assert all(r <= 0.9 for r in ratios[4:])


def cocycle_row(row):
    a, b, c, d = row
    return 1.0 / (b * b + d * d)  # f(g; 0)

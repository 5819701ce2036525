"""Acceptance suite: one function per exit criterion, at pinned tolerances.

Every criterion runs at desk scale on the two reference configurations,
CFG2 (one circle at (2, 1)) and CFG3 (circles at (1.2, 0.8) and
(4.1, 1.4)), with default truncation length 12.  All randomness derives
from the suite seed plus the criterion number, so repeated runs produce
identical numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autmeasure as am
from . import finitegap as fg
from . import herglotz as hz
from . import schottky as sk
from .jsonio import canonical_dumps
from .moebius import INF, apply, chordal, cocycle, cocycle_at_image, compose

L_DEFAULT = 12


def cfg2(max_word_length: int = L_DEFAULT) -> sk.SchottkyConfig:
    return sk.SchottkyConfig((sk.CircleDatum(2.0, 1.0),), max_word_length)


def cfg3(max_word_length: int = L_DEFAULT) -> sk.SchottkyConfig:
    return sk.SchottkyConfig(
        (sk.CircleDatum(1.2, 0.8), sk.CircleDatum(4.1, 1.4)), max_word_length
    )


@dataclass
class CriterionResult:
    cid: int
    title: str
    passed: bool
    details: dict

    @property
    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  criterion {self.cid:2d}  {self.title}"


@dataclass
class SuiteContext:
    """Shared fixtures; heavyweight extensions are built once per run."""

    seed: int = 0
    _cache: dict = field(default_factory=dict)

    def rng(self, cid: int) -> np.random.Generator:
        return np.random.default_rng(self.seed * 1000 + cid)

    @property
    def c2(self) -> sk.SchottkyConfig:
        return cfg2()

    @property
    def c3(self) -> sk.SchottkyConfig:
        return cfg3()

    @property
    def ext3_delta0(self) -> am.AutomorphicAtoms:
        if "ext3_delta0" not in self._cache:
            self._cache["ext3_delta0"] = am.extend(
                am.FundamentalMeasure.delta(self.c3, 0.0), L_DEFAULT
            )
        return self._cache["ext3_delta0"]

    def random_point(self, rng, config, n=None) -> float:
        fi = sk.fundamental_intervals(config)
        if n is None:
            n = int(rng.integers(1, config.n_circles + 1))
        return fi.point_at(n, float(rng.uniform(0.0, 2.0 * math.pi)))

    def random_measure(self, rng, config, max_atoms=2) -> am.FundamentalMeasure:
        parts = []
        for n in range(1, config.n_circles + 1):
            count = int(rng.integers(1, max_atoms + 1))
            atoms = []
            for _ in range(count):
                for _try in range(50):
                    p = self.random_point(rng, config, n)
                    if all(chordal(p, a.point) > 1e-6 for a in atoms):
                        atoms.append(am.Atom(p, float(rng.uniform(0.1, 1.0))))
                        break
            parts.append(tuple(atoms))
        return am.FundamentalMeasure(config, tuple(parts))

    def balanced_member(self, rng, config, split_first=False) -> am.FundamentalMeasure:
        """Unit-mass zero-period measure from seeded normalized parts."""
        parts = []
        for n in range(1, config.n_circles + 1):
            if split_first and n == 1:
                p1 = self.random_point(rng, config, n)
                p2 = self.random_point(rng, config, n)
                while chordal(p1, p2) <= 1e-3:
                    p2 = self.random_point(rng, config, n)
                w = float(rng.uniform(0.3, 0.7))
                atoms = ((am.Atom(p1, w), am.Atom(p2, 1.0 - w)),)
            else:
                atoms = ((am.Atom(self.random_point(rng, config, n), 1.0),),)
            rows = tuple(
                atoms[0] if i == n - 1 else () for i in range(config.n_circles)
            )
            parts.append(am.FundamentalMeasure(config, rows))
        return hz.from_normalized(parts, L_DEFAULT)


def criterion_1(ctx: SuiteContext) -> CriterionResult:
    """Cocycle identity on random triples plus the exact anchor."""
    config = ctx.c3
    rng = ctx.rng(1)
    words = [m for _w, m in sk.enumerate_words(config, 6)]
    worst = 0.0
    for _ in range(10_000):
        g = words[int(rng.integers(len(words)))]
        h = words[int(rng.integers(len(words)))]
        x = ctx.random_point(rng, config)
        lhs = cocycle(compose(g, h), x)
        rhs = cocycle_at_image(g, h, x) * cocycle(h, x)
        worst = max(worst, abs(lhs - rhs) / lhs)
    g1 = sk.generators(config)[0]
    anchor = cocycle(compose(g1, g1), 0.0)
    anchor_err = abs(anchor - 4.0 / 85.0) / (4.0 / 85.0)
    passed = worst <= 1e-10 and anchor_err <= 1e-10
    return CriterionResult(
        1,
        "cocycle identity, 1e4 random triples + exact anchor 4/85",
        passed,
        {"max_relative_error": worst, "anchor_relative_error": anchor_err},
    )


def criterion_2(ctx: SuiteContext) -> CriterionResult:
    """Generator fixed-weight identity at the inner mirror endpoints."""
    worst_f, worst_x = 0.0, 0.0
    for config in (ctx.c2, ctx.c3):
        for cd, g in zip(config.circles, sk.generators(config)):
            x = -(cd.c - cd.r)
            worst_f = max(worst_f, abs(cocycle(g, x) - 1.0))
            worst_x = max(worst_x, abs(apply(g, x) - (cd.c - cd.r)))
    passed = worst_f <= 1e-12 and worst_x <= 1e-12
    return CriterionResult(
        2,
        "endpoint transport g(-(c-r)) = c-r with unit density",
        passed,
        {"max_density_error": worst_f, "max_point_error": worst_x},
    )


def criterion_3(ctx: SuiteContext) -> CriterionResult:
    """Determinant and hyperbolicity of all reduced words of length <= 10."""
    worst_det = 0.0
    min_tr = INF
    count = 0
    for level in sk.word_levels(ctx.c3, 10):
        m = level.mats
        worst_det = max(worst_det, float(np.abs(level.dets - 1.0).max()))
        if level.length > 0:
            min_tr = min(min_tr, float(np.abs(m[:, 0] + m[:, 3]).min()))
        count += m.shape[0]
    passed = worst_det <= 1e-9 and min_tr > 2.0
    return CriterionResult(
        3,
        "group hygiene: |det-1| <= 1e-9 and |trace| > 2 for words <= 10",
        passed,
        {"words": count, "max_det_error": worst_det, "min_abs_trace": min_tr},
    )


def criterion_4(ctx: SuiteContext) -> CriterionResult:
    """Geometric decay of per-length sums and stability of D(0)."""
    res = am.poincare_series(ctx.c3, 0.0, 14, element_cap=20_000_000)
    sums = res.per_length
    ratios = [sums[i + 1] / sums[i] for i in range(len(sums) - 1)]
    decay_ok = all(r <= 0.9 for r in ratios[4:])
    d12 = sum(sums[:13])
    d14 = res.value
    stable = abs(d14 - d12) <= 1e-6 * d14
    return CriterionResult(
        4,
        "series convergence: ratios <= 0.9 for l >= 4, |D14-D12| <= 1e-6 D",
        decay_ok and stable,
        {
            "ratios_from_4": ratios[4:],
            "D_12": d12,
            "D_14": d14,
            "relative_gap": abs(d14 - d12) / d14,
        },
    )


def criterion_5(ctx: SuiteContext) -> CriterionResult:
    """Automorphy residuals of extend(delta_0) on random subintervals."""
    rng = ctx.rng(5)
    ext = ctx.ext3_delta0
    intervals = []
    for _ in range(20):
        a, b = sorted(rng.uniform(-0.4, 0.4, size=2))
        while b - a < 1e-3:
            a, b = sorted(rng.uniform(-0.4, 0.4, size=2))
        intervals.append((float(a), float(b)))
    reports = [
        am.verify_automorphic(ext, g, intervals) for g in sk.generators(ctx.c3)
    ]
    passed = all(r.passed for r in reports)
    return CriterionResult(
        5,
        "automorphy of extend(delta_0) on 20 random subintervals, both generators",
        passed,
        {
            "tolerance": reports[0].tolerance,
            "max_residual": max(r.max_residual for r in reports),
        },
    )


def criterion_6(ctx: SuiteContext) -> CriterionResult:
    """Mass identity: extension mass equals the D-weighted base mass."""
    rng = ctx.rng(6)
    worst = 0.0
    for _ in range(10):
        measure = ctx.random_measure(rng, ctx.c3)
        ext = am.extend(measure, L_DEFAULT)
        atoms = measure.all_atoms()
        dvals = am.poincare_many(ctx.c3, [a.point for _n, a in atoms], L_DEFAULT)
        dsum = sum(d.value * a.weight for d, (_n, a) in zip(dvals, atoms))
        worst = max(worst, abs(ext.total_mass - dsum))
    passed = worst <= 1e-8
    return CriterionResult(
        6,
        "mass identity |mass(extend) - sum D(x_i) w_i| <= 1e-8, 10 random measures",
        passed,
        {"max_mass_gap": worst},
    )


def criterion_7(ctx: SuiteContext) -> CriterionResult:
    """Additivity of the period homomorphism on random word pairs."""
    rng = ctx.rng(7)
    config = ctx.c3
    ext = ctx.ext3_delta0
    words = [m for _w, m in sk.enumerate_words(config, 4)]
    worst = 0.0
    for _ in range(50):
        g = words[int(rng.integers(1, len(words)))]
        h = words[int(rng.integers(1, len(words)))]
        defect = abs(
            hz.period(config, ext, compose(g, h))
            - hz.period(config, ext, g)
            - hz.period(config, ext, h)
        )
        worst = max(worst, defect)
    passed = worst <= 1e-6
    return CriterionResult(
        7,
        "homomorphism |gamma(gh) - gamma(g) - gamma(h)| <= 1e-6, 50 word pairs",
        passed,
        {"max_defect": worst},
    )


def criterion_8(ctx: SuiteContext) -> CriterionResult:
    """Function-level automorphy of a balanced measure."""
    rng = ctx.rng(8)
    config = ctx.c3
    member = ctx.balanced_member(rng, config)
    ext = am.extend(member, L_DEFAULT)
    F = hz.HerglotzData.from_extension(ext)
    lams = np.array(
        [complex(rng.uniform(-1.5, 1.5), rng.uniform(0.5, 2.0)) for _ in range(20)]
    )
    worst_std = worst_re = worst_im = 0.0
    for g in sk.generators(config):
        moved = np.array([apply(g, complex(l)) for l in lams])
        diffs = hz.evaluate_many(F, moved) - hz.evaluate_many(F, lams)
        worst_std = max(worst_std, float(np.std(diffs)))
        worst_re = max(
            worst_re, abs(float(diffs.mean().real) - hz.period(config, ext, g))
        )
        worst_im = max(worst_im, abs(float(diffs.mean().imag)))
    passed = worst_std <= 1e-6 and worst_re <= 1e-6 and worst_im <= 1e-6
    return CriterionResult(
        8,
        "F(g.) - F is constant: std <= 1e-6, matches gamma, Im <= 1e-6",
        passed,
        {"max_std": worst_std, "max_re_gap": worst_re, "max_im": worst_im},
    )


def criterion_9(ctx: SuiteContext) -> CriterionResult:
    """Weight solver: positivity, normalization, residual, scale invariance."""
    rng = ctx.rng(9)
    checks = {
        "min_c": INF,
        "sum_gap": 0.0,
        "residual_ratio": 0.0,
        "rescale_gap": 0.0,
        "min_gap_ratio": INF,
    }
    count = 0
    for config in (ctx.c2, ctx.c3):
        for _ in range(10):
            measure = ctx.random_measure(rng, config)
            A = hz.period_matrix(config, measure, L_DEFAULT)
            sol = hz.solve_weights(A)
            checks["min_c"] = min(checks["min_c"], min(sol.c))
            checks["sum_gap"] = max(checks["sum_gap"], abs(sum(sol.c) - 1.0))
            norm_a = float(np.linalg.norm(A))
            checks["residual_ratio"] = max(
                checks["residual_ratio"], sol.residual / norm_a if norm_a else 0.0
            )
            sigma_max = float(np.linalg.svd(A, compute_uv=False)[0])
            checks["min_gap_ratio"] = min(
                checks["min_gap_ratio"], sol.uniqueness_gap / sigma_max
            )
            A3 = hz.period_matrix(config, measure.scaled(3.0), L_DEFAULT)
            sol3 = hz.solve_weights(A3)
            checks["rescale_gap"] = max(
                checks["rescale_gap"],
                max(abs(x - y) for x, y in zip(sol.c, sol3.c)),
            )
            count += 1
    passed = (
        checks["min_c"] > 0.0
        and checks["sum_gap"] <= 1e-12
        and checks["residual_ratio"] <= 1e-8
        and checks["min_gap_ratio"] >= 1e-10
        and checks["rescale_gap"] <= 1e-12
    )
    return CriterionResult(
        9,
        "weight solver on 20 random tuples: c > 0, sum 1, tiny residual, scale-free",
        passed,
        {"tuples": count, **checks},
    )


def criterion_10(ctx: SuiteContext) -> CriterionResult:
    """Extreme points: splitting recombines, single atoms are extreme."""
    rng = ctx.rng(10)
    config = ctx.c3
    member = ctx.balanced_member(rng, config, split_first=True)
    split = hz.split_nonextreme(member, L_DEFAULT)
    m1 = hz.membership_x(am.extend(split.first, L_DEFAULT))
    m2 = hz.membership_x(am.extend(split.second, L_DEFAULT))
    recombined = am.combine(
        [split.first, split.second], [split.mixing, 1.0 - split.mixing]
    )
    recomb_err = am.max_atom_difference(recombined, member)
    distinct = am.max_atom_difference(split.first, split.second) > 1e-6
    extreme_single = hz.is_extreme(ctx.random_measure(rng, config, max_atoms=1))
    extreme_double = hz.is_extreme(member)
    disc = am.discretize(config, lambda x: 1.0 / (1.0 + x * x), 16)
    extreme_disc = hz.is_extreme(disc)
    passed = (
        m1.ok
        and m2.ok
        and distinct
        and recomb_err <= 1e-8
        and extreme_single
        and not extreme_double
        and not extreme_disc
    )
    return CriterionResult(
        10,
        "split of a two-atom member: X members recombine within 1e-8",
        passed,
        {
            "recombination_error": recomb_err,
            "mixing": split.mixing,
            "members_in_X": m1.ok and m2.ok,
            "is_extreme_correct": extreme_single and not extreme_double and not extreme_disc,
        },
    )


def criterion_11(ctx: SuiteContext) -> CriterionResult:
    """Roundtrip measure -> normalized parts -> measure."""
    rng = ctx.rng(11)
    config = ctx.c3
    worst = 0.0
    for k in range(10):
        member = ctx.balanced_member(rng, config, split_first=(k % 2 == 0))
        parts = hz.to_normalized(member)
        back = hz.from_normalized(parts, L_DEFAULT)
        worst = max(worst, am.max_atom_difference(member, back))
    passed = worst <= 1e-8
    return CriterionResult(
        11,
        "representation roundtrip within 1e-8 atomwise, 10 members",
        passed,
        {"max_roundtrip_error": worst},
    )


def criterion_12(ctx: SuiteContext) -> CriterionResult:
    """Finite-gap function: positivity, boundary behavior, residues, Krein."""
    rng = ctx.rng(12)
    gap_sets = [
        fg.GapSet(((-1.0, 1.0),)),
        fg.GapSet(((-2.0, -1.0), (0.5, 3.0))),
        fg.GapSet(((-3.0, -2.0), (-0.5, 0.5), (1.5, 2.5))),
    ]
    min_im = INF
    max_re_u = 0.0
    for gaps in gap_sets:
        a1, bn = gaps.gaps[0][0], gaps.gaps[-1][1]
        re = np.linspace(a1 - 2.0, bn + 2.0, 100)
        im = np.linspace(0.04, 4.0, 100)
        Z = re[None, :] + 1j * im[:, None]
        for _ in range(20):
            mus = tuple(a + (b - a) * rng.random() for a, b in gaps.gaps)
            H = fg.eval_h(gaps, mus, Z)
            min_im = min(min_im, float(H.imag.min()))
            for lo, hi in _u_grid_segments(gaps):
                ts = np.linspace(lo, hi, 25)
                Hu = fg.eval_h(gaps, mus, ts + 1e-6j)
                max_re_u = max(max_re_u, float(np.abs(Hu.real).max()))
    one = fg.GapSet(((-1.0, 1.0),))
    norm_gap = abs(complex(fg.eval_h(one, (0.0,), 1e4j)) - 2j)
    res = fg.residue(one, (0.0,), 0)
    div = fg.Divisor(one, (0.0,), (1,))
    grid = [
        t
        for t in np.linspace(-3.0, 3.0, 100)
        if min(abs(t - e) for e in (-1.0, 0.0, 1.0)) > 2e-3
    ]
    dev = fg.krein_check(div, grid, 1e-6)
    edge = abs(complex(fg.eval_h(one, (1.0,), 0.99 + 1e-9j)) - 28.21347)
    passed = (
        min_im >= -1e-12
        and max_re_u <= 1e-3
        and norm_gap <= 1e-3
        and abs(res.value - 2.0) <= 1e-6
        and dev <= 1e-3
        and edge <= 1e-3
    )
    return CriterionResult(
        12,
        "finite-gap h: positivity, reflectionless trace, residue 2, Krein check",
        passed,
        {
            "min_im_on_grid": min_im,
            "max_re_on_bands": max_re_u,
            "normalization_gap": norm_gap,
            "residue": res.value,
            "krein_deviation": dev,
            "edge_value_gap": edge,
        },
    )


def _u_grid_segments(gaps: fg.GapSet):
    """Band segments clipped to the test window, clear of the gap edges."""
    edge = 0.05
    a1, bn = gaps.gaps[0][0], gaps.gaps[-1][1]
    yield a1 - 2.0, a1 - edge
    for (_, b_prev), (a_next, _) in zip(gaps.gaps, gaps.gaps[1:]):
        yield b_prev + edge, a_next - edge
    yield bn + edge, bn + 2.0


def criterion_13(ctx: SuiteContext) -> CriterionResult:
    """Linear functional attains extremes at extreme points."""
    rng = ctx.rng(13)
    config = ctx.c3
    e1 = ctx.balanced_member(rng, config)
    e2 = ctx.balanced_member(rng, config)
    d1 = hz.deriv_at_i(hz.HerglotzData.from_extension(am.extend(e1, L_DEFAULT))).real
    d2 = hz.deriv_at_i(hz.HerglotzData.from_extension(am.extend(e2, L_DEFAULT))).real
    lo, hi = min(d1, d2), max(d1, d2)
    worst = 0.0
    for theta in (0.25, 0.5, 0.75):
        combo = am.combine([e1, e2], [theta, 1.0 - theta])
        d = hz.deriv_at_i(hz.HerglotzData.from_extension(am.extend(combo, L_DEFAULT))).real
        worst = max(worst, max(lo - d, d - hi, 0.0))
    passed = worst <= 1e-8
    return CriterionResult(
        13,
        "Re F'(i) of convex combinations stays within the extreme interval",
        passed,
        {"extremes": [lo, hi], "max_overshoot": worst},
    )


def criterion_14(
    ctx: SuiteContext, first: list[CriterionResult] | None = None
) -> CriterionResult:
    """Determinism: a fresh re-run of the suite is byte-identical."""
    if first is None:
        first = [run_criterion(ctx, cid) for cid in range(1, 14)]
    fresh = SuiteContext(seed=ctx.seed)
    second = [run_criterion(fresh, cid) for cid in range(1, 14)]
    b1 = canonical_dumps([r.__dict__ for r in first])
    b2 = canonical_dumps([r.__dict__ for r in second])
    passed = b1 == b2
    return CriterionResult(
        14,
        "determinism: repeated suite runs serialize byte-identically",
        passed,
        {"bytes": len(b1), "identical": passed},
    )


_CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
    12: criterion_12,
    13: criterion_13,
    14: criterion_14,
}


def run_criterion(ctx: SuiteContext, cid: int) -> CriterionResult:
    return _CRITERIA[cid](ctx)


def run_all(seed: int = 0, criteria: list[int] | None = None) -> list[CriterionResult]:
    """Run the requested criteria (all by default) with shared fixtures.

    When criterion 14 follows a full pass over 1..13, the first pass is
    reused as its reference run instead of being recomputed.
    """
    ctx = SuiteContext(seed=seed)
    ids = criteria if criteria is not None else sorted(_CRITERIA)
    done: dict[int, CriterionResult] = {}
    results = []
    for cid in ids:
        if cid == 14 and all(c in done for c in range(1, 14)):
            res = criterion_14(ctx, [done[c] for c in range(1, 14)])
        else:
            res = run_criterion(ctx, cid)
        done[cid] = res
        results.append(res)
    return results

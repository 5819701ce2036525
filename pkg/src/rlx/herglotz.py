"""Herglotz representations, period maps, and the positive-weight solver.

A Herglotz function is stored by its representation data: the real
constant a plus a finite positive atomic measure, evaluated as

    F(λ) = a + Σ w·(1 + tλ)/(t − λ) + w_∞·λ .

For a measure carried by the automorphic extension machinery, the period
of a group element g is Re(F(g·i) − F(i)); collecting the periods of the
generators gives the linear map whose kernel the weight solver inverts.
Measures with vanishing period vector and unit mass form the convex set
whose extreme points are the one-atom-per-circle measures; the splitting
and normalization routines below realize that structure numerically.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .autmeasure import AutomorphicAtoms, FundamentalMeasure, extend
from .errors import (
    DegenerateKernelError,
    DomainError,
    NonPositiveKernelError,
    NotSplittableError,
    ValidationError,
)
from .moebius import INF, ExtendedReal, MoebiusMap, canon_point, chordal
from .schottky import SchottkyConfig, generators, word_of_matrix

#: relative singular-value threshold for a one-dimensional kernel
KERNEL_GAP_TOL = 1e-10

#: default boundary-approach heights for atom recovery
DEFAULT_Y_SEQUENCE = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)

_EVAL_CHUNK = 262_144


@dataclass(frozen=True, eq=False)
class HerglotzData:
    """Constant plus atomic measure; atoms at ∞ contribute w·λ."""

    a: float
    points: np.ndarray
    weights: np.ndarray
    weight_at_inf: float = 0.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1)
        wts = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if pts.shape != wts.shape:
            raise ValidationError("points and weights must have equal length")
        if np.any(~np.isfinite(pts)):
            raise ValidationError("finite-atom positions must be finite; use weight_at_inf")
        if np.any(wts <= 0.0) or np.any(~np.isfinite(wts)):
            raise ValidationError("atom weights must be positive and finite")
        if self.weight_at_inf < 0.0 or not math.isfinite(self.weight_at_inf):
            raise ValidationError("weight at infinity must be nonnegative and finite")
        if not math.isfinite(self.a):
            raise ValidationError("constant term must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    @classmethod
    def from_atoms(
        cls, atoms: Sequence[tuple[ExtendedReal, float]], a: float = 0.0
    ) -> "HerglotzData":
        pts, wts, w_inf = [], [], 0.0
        for point, weight in atoms:
            point = canon_point(point)
            if math.isinf(point):
                w_inf += weight
            else:
                pts.append(point)
                wts.append(weight)
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if chordal(pts[i], pts[j]) <= 1e-12:
                    raise ValidationError(f"atom positions collide at {pts[i]!r}")
        return cls(a, np.array(pts), np.array(wts), w_inf)

    @classmethod
    def from_extension(cls, extension: AutomorphicAtoms, a: float = 0.0) -> "HerglotzData":
        """Measure data of a truncated automorphic extension (already merged)."""
        finite = np.isfinite(extension.points)
        w_inf = float(extension.weights[~finite].sum())
        return cls(a, extension.points[finite], extension.weights[finite], w_inf)

    @property
    def mass(self) -> float:
        return float(self.weights.sum()) + self.weight_at_inf


def evaluate(F: HerglotzData, lam: complex) -> complex:
    """F(λ) for a single upper-half-plane point."""
    return complex(evaluate_many(F, np.array([lam], dtype=np.complex128))[0])


def evaluate_many(F: HerglotzData, lams: np.ndarray) -> np.ndarray:
    """F at an array of points with Im λ > 0; atom sums are chunked.

    The summation order is fixed by the stored atom order, so results are
    bit-stable.
    """
    lams = np.asarray(lams, dtype=np.complex128)
    if np.any(lams.imag <= 0.0):
        raise DomainError("Herglotz evaluation requires Im(lambda) > 0")
    out = np.full(lams.shape, complex(F.a), dtype=np.complex128)
    out += F.weight_at_inf * lams
    t, w = F.points, F.weights
    for lo in range(0, len(t), _EVAL_CHUNK):
        tc = t[lo : lo + _EVAL_CHUNK, None]
        wc = w[lo : lo + _EVAL_CHUNK]
        kernel = (1.0 + tc * lams[None, :]) / (tc - lams[None, :])
        out += wc @ kernel
    return out


def deriv_at_i(F: HerglotzData) -> complex:
    """F'(i) = Σ w·(1+t²)/(t−i)² + w_∞; real-linear in the measure."""
    t, w = F.points, F.weights
    total = complex(F.weight_at_inf)
    for lo in range(0, len(t), _EVAL_CHUNK):
        tc = t[lo : lo + _EVAL_CHUNK]
        wc = w[lo : lo + _EVAL_CHUNK]
        total += complex(np.sum(wc * (1.0 + tc * tc) / (tc - 1j) ** 2))
    return total


def boundary_recover_atom(
    F: HerglotzData | Callable[[complex], complex],
    t: ExtendedReal,
    y_sequence: Sequence[float] = DEFAULT_Y_SEQUENCE,
) -> float:
    """Point mass ν({t}) from the pole-type boundary asymptotics of F.

    Extrapolates −iy·F(t+iy) (or −iy·F(i/y) for t = ∞) with Richardson
    steps on the decreasing heights and divides the finite-point limit by
    1+t²; returns 0 where there is no atom.  Raises ConvergenceError when
    successive extrapolants disagree by more than 1e-6.
    """
    from .errors import ConvergenceError

    ys = [float(y) for y in y_sequence]
    if len(ys) < 3 or any(y2 >= y1 for y1, y2 in zip(ys, ys[1:])) or ys[-1] <= 0.0:
        raise ValidationError("y_sequence must be at least 3 strictly decreasing positive heights")
    t = canon_point(t)
    fn = F if callable(F) else (lambda lam: evaluate(F, lam))
    if math.isinf(t):
        raw = [-1j * y * fn(1j / y) for y in ys]
    else:
        raw = [-1j * y * fn(t + 1j * y) for y in ys]
    extrap = [
        (y1 * e2 - y2 * e1) / (y1 - y2)
        for (y1, e1), (y2, e2) in zip(zip(ys, raw), zip(ys[1:], raw[1:]))
    ]
    if abs(extrap[-1] - extrap[-2]) > 1e-6:
        raise ConvergenceError(
            f"boundary extrapolation at t={t!r} did not settle: "
            f"{extrap[-2]!r} vs {extrap[-1]!r}"
        )
    limit = extrap[-1].real
    if math.isinf(t):
        return limit
    return limit / (1.0 + t * t)


# ---------------------------------------------------------------------------
# periods
#
# The Herglotz kernel transforms under the group action as
#     k(t, g·λ) = f(g⁻¹; t) · k(g⁻¹·t, λ) + α(g, t)
# with a real constant (in λ)
#     α(g, t) = [(ac+bd)(t²−1) + (c²+d²−a²−b²)·t] / ‖g⁻¹ w(t)‖² ,
# so for an automorphic measure the period Re(F(g·λ) − F(λ)) equals the
# integral of α(g, ·) against the measure.  Evaluating that integral is
# truncation-stable (α is bounded on the limit set), unlike evaluating F
# at g·i, which sits deep in a horoball for long words.  A general word's
# period is the sum of its letters' generator periods: the homomorphism
# is determined by its values on the generators.


def _alpha_integral(extension: AutomorphicAtoms, g: MoebiusMap) -> float:
    a, b, c, d = g.entries
    t = extension.points
    w = extension.weights
    fin = np.isfinite(t)
    tf, wf = t[fin], w[fin]
    num = (a * c + b * d) * (tf * tf - 1.0) + (c * c + d * d - a * a - b * b) * tf
    den = (d * tf - b) ** 2 + (c * tf - a) ** 2
    total = float(np.sum(wf * (num / den)))
    w_inf = float(np.sum(w[~fin]))
    if w_inf:
        total += w_inf * (a * c + b * d) / (c * c + d * d)
    return total


def generator_periods(config: SchottkyConfig, extension: AutomorphicAtoms) -> np.ndarray:
    """Periods of the generators, cached on the extension object."""
    cached = getattr(extension, "_generator_periods", None)
    if cached is not None:
        return cached
    vals = np.array([_alpha_integral(extension, g) for g in generators(config)])
    object.__setattr__(extension, "_generator_periods", vals)
    return vals


def period(config: SchottkyConfig, extension: AutomorphicAtoms, g: MoebiusMap) -> float:
    """Period Re(Fg(i) − F(i)) of a group element against the extension.

    Computed as the sum of the element's letters' generator periods, each
    a stabilized α-integral against the atoms; for automorphic measures
    this equals the base-point difference, and it stays accurate for long
    words where the base-point formula loses the truncation tail.
    """
    word = word_of_matrix(config, g)
    base = generator_periods(config, extension)
    return float(sum(base[abs(s) - 1] if s > 0 else -base[abs(s) - 1] for s in word))


def period_raw(config: SchottkyConfig, extension: AutomorphicAtoms, g: MoebiusMap) -> float:
    """Literal base-point difference Re(F(g·i) − F(i)); diagnostic only."""
    F = HerglotzData.from_extension(extension)
    vals = evaluate_many(F, np.array([g(1j), 1j], dtype=np.complex128))
    return float((vals[0] - vals[1]).real)


def period_map(config: SchottkyConfig, extension: AutomorphicAtoms) -> np.ndarray:
    """Vector of generator periods; empty for the trivial configuration."""
    if config.n_generators == 0:
        return np.zeros(0)
    return generator_periods(config, extension).copy()


def _worker_count() -> int:
    raw = os.environ.get("RLX_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"RLX_THREADS must be an integer, got {raw!r}")
    return max(1, n)


def period_matrix(
    config: SchottkyConfig,
    measure: FundamentalMeasure,
    max_len: int | None = None,
    element_cap: int | None = None,
) -> np.ndarray:
    """(N−1)×N matrix of generator periods of the per-circle extensions.

    Column n holds the period vector of the extension of the measure's
    part on S_n alone; every circle must carry positive mass.  Columns
    are independent and may be computed by worker threads (RLX_THREADS);
    assembly by column index keeps the result identical either way.
    """
    return _period_matrix_with_masses(config, measure, max_len, element_cap)[0]


def _period_matrix_with_masses(
    config: SchottkyConfig,
    measure: FundamentalMeasure,
    max_len: int | None = None,
    element_cap: int | None = None,
) -> tuple[np.ndarray, list[float]]:
    masses = measure.circle_masses()
    for n, m in enumerate(masses, start=1):
        if m <= 0.0:
            raise ValidationError(f"circle {n} carries no mass")
    N = config.n_circles
    A = np.zeros((N - 1, N))
    ext_masses = [0.0] * N

    def column(n: int) -> tuple[np.ndarray, float]:
        ext = extend(measure.restricted_to(n), max_len, element_cap)
        return period_map(config, ext), ext.total_mass

    workers = _worker_count()
    if workers == 1 or N == 1:
        results = [column(n) for n in range(1, N + 1)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(column, range(1, N + 1)))
    for n, (col, em) in enumerate(results, start=1):
        A[:, n - 1] = col
        ext_masses[n - 1] = em
    return A, ext_masses


@dataclass(frozen=True)
class WeightSolution:
    """Positive kernel vector of a period matrix, normalized to sum 1."""

    c: tuple[float, ...]
    residual: float
    uniqueness_gap: float

    def __post_init__(self):
        if abs(sum(self.c) - 1.0) > 1e-12:
            raise ValidationError("weights must sum to 1")
        if any(w <= 0.0 for w in self.c):
            raise ValidationError("weights must be strictly positive")


def solve_weights(A: np.ndarray) -> WeightSolution:
    """Unique positive kernel direction of an (N−1)×N period matrix.

    Rank-revealing SVD; fails with DegenerateKernelError when the
    numerical kernel is not one-dimensional and NonPositiveKernelError
    when the kernel direction is not strictly positive (zero-mass or
    inconsistent input).
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1] - 1:
        raise ValidationError(f"period matrix must be (N-1) x N, got {A.shape}")
    N = A.shape[1]
    if N == 1:
        return WeightSolution((1.0,), 0.0, INF)
    _, S, Vh = np.linalg.svd(A, full_matrices=True)
    sigma_max = float(S[0])
    gap = float(S[-1])
    if sigma_max <= 0.0 or gap <= KERNEL_GAP_TOL * sigma_max:
        raise DegenerateKernelError(
            f"numerical kernel is not one-dimensional: sigma_min={gap!r}, "
            f"sigma_max={sigma_max!r}"
        )
    v = Vh[-1]
    if v[np.argmax(np.abs(v))] < 0.0:
        v = -v
    if float(v.min()) < -KERNEL_GAP_TOL * float(np.abs(v).max()):
        raise NonPositiveKernelError(
            f"kernel vector has mixed signs: {v.tolist()!r}"
        )
    c = np.abs(v) / np.abs(v).sum()
    if float(c.min()) <= 1e-8:
        raise NonPositiveKernelError(
            f"kernel vector is not strictly positive: {c.tolist()!r}"
        )
    residual = float(np.linalg.norm(A @ c))
    return WeightSolution(tuple(float(x) for x in c), residual, gap)


# ---------------------------------------------------------------------------
# the normalized solution set X and its extreme points


@dataclass(frozen=True)
class XMembership:
    ok: bool
    mass: float
    mass_residual: float
    period_residual: float
    tolerance: float


def membership_x(extension: AutomorphicAtoms) -> XMembership:
    """Check unit mass and vanishing period vector, up to truncation noise."""
    config = extension.config
    mass = extension.total_mass
    mass_res = abs(mass - 1.0)
    gam = period_map(config, extension)
    gam_res = float(np.abs(gam).max()) if gam.size else 0.0
    tol = max(1e-6, 10.0 * extension.tail_mass)
    ok = mass_res <= 1e-8 and gam_res <= tol
    return XMembership(ok, mass, mass_res, gam_res, tol)


def is_extreme(measure: FundamentalMeasure) -> bool:
    """True iff every circle carries exactly one atom."""
    counts = [len(part) for part in measure.atoms]
    if any(c == 0 for c in counts):
        raise ValidationError("measure must carry positive mass on every circle")
    return all(c == 1 for c in counts)


def balance(
    measure: FundamentalMeasure,
    max_len: int | None = None,
    element_cap: int | None = None,
) -> FundamentalMeasure:
    """Rescale per circle so the period vector vanishes and the extension
    has unit mass (the measure-side normalization of the solution set).

    The kernel component c_n is the factor for the raw part on S_n; the
    final global scale reuses the per-circle extension masses already
    computed for the period matrix (extension mass is linear in the
    measure over the same word set).
    """
    config = measure.config
    A, ext_masses = _period_matrix_with_masses(config, measure, max_len, element_cap)
    sol = solve_weights(A)
    total = sum(c * m for c, m in zip(sol.c, ext_masses))
    return measure.scaled([c / total for c in sol.c])


def to_normalized(measure: FundamentalMeasure) -> tuple[FundamentalMeasure, ...]:
    """Per-circle probability measures: each restriction divided by its mass."""
    masses = measure.circle_masses()
    out = []
    for n, m in enumerate(masses, start=1):
        if m <= 0.0:
            raise ValidationError(f"circle {n} carries no mass")
        factors = [1.0 / m if i == n - 1 else 1.0 for i in range(len(masses))]
        out.append(measure.restricted_to(n).scaled(factors))
    return tuple(out)


def from_normalized(
    parts: Sequence[FundamentalMeasure],
    max_len: int | None = None,
    element_cap: int | None = None,
) -> FundamentalMeasure:
    """Reassemble the unique unit-mass, zero-period measure from its
    normalized restrictions (inverse of to_normalized on the solution set)."""
    if not parts:
        raise ValidationError("need one normalized measure per circle")
    config = parts[0].config
    if len(parts) != config.n_circles:
        raise ValidationError(
            f"need {config.n_circles} normalized measures, got {len(parts)}"
        )
    pieces = []
    for n, part in enumerate(parts, start=1):
        if part.config != config:
            raise ValidationError("normalized parts live on different configurations")
        masses = part.circle_masses()
        if abs(masses[n - 1] - 1.0) > 1e-9:
            raise ValidationError(f"part {n} is not a probability measure on its circle")
        if any(m != 0.0 for i, m in enumerate(masses) if i != n - 1):
            raise ValidationError(f"part {n} carries mass off circle {n}")
        pieces.append(part.atoms[n - 1])
    merged = FundamentalMeasure(config, tuple(pieces))
    return balance(merged, max_len, element_cap)


@dataclass(frozen=True)
class SplitResult:
    """Convex split ν = θ·first + (1−θ)·second into distinct members."""

    first: FundamentalMeasure
    second: FundamentalMeasure
    mixing: float


def split_nonextreme(
    measure: FundamentalMeasure,
    max_len: int | None = None,
    element_cap: int | None = None,
) -> SplitResult:
    """Write a non-extreme unit-mass zero-period measure as a convex
    combination of two distinct members.

    Splits the first multi-atom circle restriction into its first atom
    and the rest, rebalances each part's companion circles, and returns
    the pre-normalization masses as the mixing weight.
    """
    if is_extreme(measure):
        raise NotSplittableError("measure is extreme: one atom per circle")
    config = measure.config
    ext = extend(measure, max_len, element_cap)
    mem = membership_x(ext)
    if mem.mass_residual > 1e-6 or mem.period_residual > max(1e-4, mem.tolerance):
        raise ValidationError(
            "split requires a unit-mass measure with vanishing period vector; "
            f"got mass {mem.mass!r}, period residual {mem.period_residual!r}"
        )
    n_split = next(
        n for n, part in enumerate(measure.atoms, start=1) if len(part) > 1
    )
    part = measure.atoms[n_split - 1]
    halves = [(part[0],), tuple(part[1:])]
    members: list[FundamentalMeasure] = []
    masses: list[float] = []
    for half in halves:
        atoms = tuple(
            half if i == n_split - 1 else p for i, p in enumerate(measure.atoms)
        )
        candidate = FundamentalMeasure(config, atoms)
        A, ext_masses = _period_matrix_with_masses(config, candidate, max_len, element_cap)
        sol = solve_weights(A)
        # kernel components scale the raw parts; pin the split circle at 1
        factors = [sol.c[i] / sol.c[n_split - 1] for i in range(config.n_circles)]
        rebalanced = candidate.scaled(factors)
        m = sum(f * em for f, em in zip(factors, ext_masses))
        members.append(rebalanced.scaled(1.0 / m))
        masses.append(m)
    return SplitResult(members[0], members[1], masses[0])


def affine_action(F: HerglotzData, cscale: float, offset: float) -> HerglotzData:
    """Translation/dilation action F ↦ cscale·F + offset on the data."""
    if not (math.isfinite(cscale) and cscale > 0.0):
        raise ValidationError("cscale must be positive and finite")
    if not math.isfinite(offset):
        raise ValidationError("offset must be finite")
    return HerglotzData(
        cscale * F.a + offset,
        F.points.copy(),
        F.weights * cscale,
        F.weight_at_inf * cscale,
    )

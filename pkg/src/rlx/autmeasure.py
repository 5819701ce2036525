"""Atomic measures on the glued circles and their automorphic extensions.

A measure on the fundamental set is a list of atoms per circle S_n.  Its
automorphic extension pushes every atom (x, w) to (g·x, f(g;x)·w) over all
reduced words g up to a truncation length L; the identity block reproduces
the source, and the per-length mass sums certify geometric decay of the
tail.  The Poincaré series D(x) = Σ_g f(g;x) is the total mass
amplification of this construction.

Summation order is fixed (by word, then base atom), so repeated runs of
any operation produce bit-identical numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, ValidationError
from .moebius import (
    INF,
    ExtendedReal,
    MoebiusMap,
    canon_point,
    chordal,
    cocycle,
    inverse,
)
from .schottky import (
    FundamentalIntervals,
    GroupWord,
    SchottkyConfig,
    apply_array,
    cocycle_array,
    codes_to_word,
    fundamental_intervals,
    homogeneous_array,
    word_levels,
    _level_letter_rows,
)

#: chordal distance under which numerically colliding atoms merge
MERGE_TOL = 1e-12

#: per-length mass ratio at which a truncation is refused
TAIL_REFUSE = 0.9

#: exclusion radius around limit-set samples for Poincaré evaluation
LIMIT_EXCLUSION = 1e-6


@dataclass(frozen=True)
class Atom:
    """Point mass: location on R∞ (finite or INF) and positive weight."""

    point: ExtendedReal
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "point", canon_point(self.point))
        w = float(self.weight)
        if not (math.isfinite(w) and w > 0.0):
            raise ValidationError(f"atom weight must be positive and finite, got {w!r}")
        object.__setattr__(self, "weight", w)


@dataclass(frozen=True)
class FundamentalMeasure:
    """Finite atomic measure on the fundamental set, split by circle.

    atoms[n-1] lists the atoms on S_n; every atom must locate to its
    circle and atoms on one circle must be chordally distinct.
    """

    config: SchottkyConfig
    atoms: tuple[tuple[Atom, ...], ...]

    def __post_init__(self):
        atoms = tuple(tuple(part) for part in self.atoms)
        if len(atoms) != self.config.n_circles:
            raise ValidationError(
                f"expected {self.config.n_circles} circle parts, got {len(atoms)}"
            )
        fi = fundamental_intervals(self.config)
        for n, part in enumerate(atoms, start=1):
            for atom in part:
                loc = fi.locate(atom.point)
                if loc is None or loc[0] != n:
                    raise ValidationError(
                        f"atom at {atom.point!r} does not lie on circle {n}"
                    )
            for i in range(len(part)):
                for j in range(i + 1, len(part)):
                    if chordal(part[i].point, part[j].point) <= MERGE_TOL:
                        raise ValidationError(
                            f"atoms on circle {n} collide at {part[i].point!r}"
                        )
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_pairs(
        cls, config: SchottkyConfig, pairs: Sequence[tuple[ExtendedReal, float]]
    ) -> "FundamentalMeasure":
        """Build from (point, weight) pairs, assigning circles via locate."""
        fi = fundamental_intervals(config)
        parts: list[list[Atom]] = [[] for _ in range(config.n_circles)]
        for point, weight in pairs:
            loc = fi.locate(point)
            if loc is None:
                raise ValidationError(f"point {point!r} is not in the fundamental set")
            parts[loc[0] - 1].append(Atom(point, weight))
        return cls(config, tuple(tuple(p) for p in parts))

    @classmethod
    def delta(cls, config: SchottkyConfig, point: ExtendedReal, weight: float = 1.0):
        return cls.from_pairs(config, [(point, weight)])

    def circle_masses(self) -> tuple[float, ...]:
        return tuple(sum(a.weight for a in part) for part in self.atoms)

    @property
    def mass_on_f(self) -> float:
        """Total mass carried on the fundamental set itself."""
        return float(sum(self.circle_masses()))

    def all_atoms(self) -> list[tuple[int, Atom]]:
        """Flattened (circle index, atom) list in circle-then-list order."""
        return [(n, a) for n, part in enumerate(self.atoms, start=1) for a in part]

    def scaled(self, factors) -> "FundamentalMeasure":
        """Rescale by a scalar or one positive factor per circle."""
        if np.isscalar(factors):
            factors = [float(factors)] * self.config.n_circles
        if len(factors) != self.config.n_circles:
            raise ValidationError("need one scale factor per circle")
        parts = []
        for part, s in zip(self.atoms, factors):
            s = float(s)
            if part and s <= 0.0:
                raise ValidationError("scale factors must be positive")
            parts.append(tuple(Atom(a.point, a.weight * s) for a in part))
        return FundamentalMeasure(self.config, tuple(parts))

    def restricted_to(self, n: int) -> "FundamentalMeasure":
        """Same measure with every circle except S_n emptied."""
        parts = tuple(
            part if i == n - 1 else () for i, part in enumerate(self.atoms)
        )
        return FundamentalMeasure(self.config, parts)


def combine(
    measures: Sequence[FundamentalMeasure], coefficients: Sequence[float]
) -> FundamentalMeasure:
    """Pointwise linear combination; coinciding atoms add their weights."""
    if not measures:
        raise ValidationError("need at least one measure")
    config = measures[0].config
    parts: list[tuple[Atom, ...]] = []
    for n in range(1, config.n_circles + 1):
        merged: list[Atom] = []
        for m, coef in zip(measures, coefficients):
            if m.config != config:
                raise ValidationError("measures live on different configurations")
            for atom in m.atoms[n - 1]:
                w = atom.weight * float(coef)
                for i, old in enumerate(merged):
                    if chordal(old.point, atom.point) <= MERGE_TOL:
                        merged[i] = Atom(old.point, old.weight + w)
                        break
                else:
                    merged.append(Atom(atom.point, w))
        parts.append(tuple(merged))
    return FundamentalMeasure(config, tuple(parts))


def max_atom_difference(m1: FundamentalMeasure, m2: FundamentalMeasure) -> float:
    """Largest weight mismatch over matched atoms; unmatched count in full."""
    worst = 0.0
    for part1, part2 in zip(m1.atoms, m2.atoms):
        used = [False] * len(part2)
        for a in part1:
            for j, b in enumerate(part2):
                if not used[j] and chordal(a.point, b.point) <= 1e-9:
                    used[j] = True
                    worst = max(worst, abs(a.weight - b.weight))
                    break
            else:
                worst = max(worst, a.weight)
        for j, b in enumerate(part2):
            if not used[j]:
                worst = max(worst, b.weight)
    return worst


# ---------------------------------------------------------------------------
# quadrature entry point for densities


def discretize(
    config: SchottkyConfig,
    density: Callable[[float], float] | Sequence[Callable[[float], float]],
    nodes: int | Sequence[int],
) -> FundamentalMeasure:
    """Midpoint-rule atoms for a density, per circle.

    The density is a function of the point x (one callable for all circles
    or one per circle); finite pieces are subdivided uniformly in x and
    weighted by density·Δx, the wrap piece uniformly in the compactified
    angle with the substitution Jacobian (1+x²)/2.  Raises on negative
    density samples.
    """
    N = config.n_circles
    densities = list(density) if isinstance(density, (list, tuple)) else [density] * N
    counts = list(nodes) if isinstance(nodes, (list, tuple)) else [int(nodes)] * N
    if len(densities) != N or len(counts) != N:
        raise ValidationError("need one density and node count per circle")
    fi = fundamental_intervals(config)
    parts: list[tuple[Atom, ...]] = []
    for n in range(1, N + 1):
        pieces = fi.pieces[n - 1]
        total_span = fi.circle_span(n)
        count = counts[n - 1]
        if count < 1:
            raise ValidationError("node count must be >= 1")
        dens = densities[n - 1]
        atoms: list[Atom] = []
        remaining = count
        for idx, piece in enumerate(pieces):
            if idx == len(pieces) - 1:
                m = remaining
            else:
                m = max(1, round(count * piece.span / total_span))
                m = min(m, remaining - (len(pieces) - 1 - idx))
            remaining -= m
            step = piece.span / m
            for i in range(m):
                x = piece.point_at((i + 0.5) * step)
                val = float(dens(x))
                if val < 0.0:
                    raise ValidationError(f"density is negative at {x!r}: {val!r}")
                if piece.wraps:
                    # d x = (1 + x^2)/2 d psi on the wrap piece
                    weight = val * (1.0 + x * x) / 2.0 * step
                else:
                    weight = val * step
                if weight > 0.0:
                    atoms.append(Atom(x, weight))
        parts.append(tuple(atoms))
    return FundamentalMeasure(config, tuple(parts))


# ---------------------------------------------------------------------------
# automorphic extension


@dataclass(frozen=True, eq=False)
class AutomorphicAtoms:
    """Truncated automorphic extension of a fundamental measure.

    Parallel arrays over the emitted atoms, ordered by (word, base atom)
    with numerically colliding points merged into the earliest record.
    per_length_mass[ℓ] is the total weight contributed by words of length
    ℓ; tail_ratio is the deepest ratio of consecutive sums and tail_mass
    the implied geometric remainder.
    """

    config: SchottkyConfig
    source: FundamentalMeasure
    max_word_length: int
    points: np.ndarray  # (M,) float64, INF allowed
    weights: np.ndarray  # (M,) float64 > 0
    word_lengths: np.ndarray  # (M,) int16
    base_circle: np.ndarray  # (M,) int16, 1-based
    base_index: np.ndarray  # (M,) int32 into source.all_atoms()
    raw_index: np.ndarray  # (M,) int64 position in the unmerged stream
    per_length_mass: tuple[float, ...]
    tail_ratio: float
    tail_mass: float

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def records(self) -> Iterator[tuple[GroupWord, int, Atom, ExtendedReal, float]]:
        """(word, circle, base atom, point, weight) per merged record.

        Words are regenerated from the deterministic enumeration, so the
        stream is cheap in memory even for deep truncations.
        """
        base = self.source.all_atoms()
        n_base = len(base)
        wanted = np.asarray(self.raw_index)
        order = np.argsort(wanted, kind="stable")
        sorted_raw = wanted[order]
        pos = 0
        offset = 0
        out: list[tuple[GroupWord, int, Atom, ExtendedReal, float] | None]
        out = [None] * len(wanted)
        for level, codes in _level_letter_rows(self.config, self.max_word_length):
            m = level.mats.shape[0]
            hi = offset + m * n_base
            while pos < len(sorted_raw) and sorted_raw[pos] < hi:
                raw = int(sorted_raw[pos])
                widx, bidx = divmod(raw - offset, n_base)
                rec = int(order[pos])
                n, atom = base[bidx]
                out[rec] = (
                    codes_to_word(codes[widx]),
                    n,
                    atom,
                    float(self.points[rec]) if math.isfinite(self.points[rec]) else INF,
                    float(self.weights[rec]),
                )
                pos += 1
            offset = hi
            if pos == len(sorted_raw):
                break
        yield from out  # type: ignore[misc]


def _tail_stats(per_length: list[float]) -> tuple[float, float]:
    ratios = [
        per_length[i] / per_length[i - 1] if per_length[i - 1] > 0.0 else 0.0
        for i in range(1, len(per_length))
    ]
    if not ratios:
        return 0.0, 0.0
    q = ratios[-1]
    if len(ratios) >= 2 and min(ratios[-1], ratios[-2]) >= TAIL_REFUSE:
        raise ConvergenceError(
            f"per-length mass ratios {ratios[-2]:.3f}, {ratios[-1]:.3f} at the deepest "
            f"lengths exceed {TAIL_REFUSE}; truncation is not converging"
        )
    tail = per_length[-1] * q / (1.0 - q) if q < 1.0 else INF
    return q, tail


def _merge_collisions(
    points: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Group ids and representative (earliest) raw index per merged atom."""
    order = np.argsort(points, kind="stable")
    sorted_pts = points[order]
    finite = np.isfinite(sorted_pts)
    gaps = np.ones(len(sorted_pts), dtype=bool)
    if len(sorted_pts) > 1:
        a, b = sorted_pts[:-1], sorted_pts[1:]
        both_fin = finite[:-1] & finite[1:]
        af = np.where(both_fin, a, 0.0)
        bf = np.where(both_fin, b, 0.0)
        ha = np.hypot(1.0, af)
        hb = np.hypot(1.0, bf)
        dist = np.where(
            both_fin,
            2.0 * np.abs((af / ha) / hb - (bf / hb) / ha),
            np.where(np.isinf(a) == np.isinf(b), 0.0, 2.0),
        )
        gaps[1:] = dist > MERGE_TOL
    group_sorted = np.cumsum(gaps) - 1
    groups = np.empty(len(points), dtype=np.int64)
    groups[order] = group_sorted
    n_groups = int(group_sorted[-1]) + 1 if len(points) else 0
    reps = np.full(n_groups, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(reps, groups, np.arange(len(points), dtype=np.int64))
    return groups, reps


def extend(
    measure: FundamentalMeasure,
    max_len: int | None = None,
    element_cap: int | None = None,
) -> AutomorphicAtoms:
    """Automorphic extension of a fundamental measure, truncated at max_len.

    Every reduced word g with |g| ≤ max_len contributes the atom
    (g·x, f(g;x)·w) for each base atom (x, w).  Refuses when the measured
    per-length decay stalls above the refusal threshold.
    """
    config = measure.config
    L = config.max_word_length if max_len is None else int(max_len)
    base = measure.all_atoms()
    base_pts = np.array([a.point for _, a in base], dtype=np.float64)
    base_wts = np.array([a.weight for _, a in base], dtype=np.float64)
    base_ns = np.array([n for n, _ in base], dtype=np.int16)
    n_base = len(base)
    if n_base == 0:
        raise ValidationError("cannot extend a measure with no atoms")
    u0, u1 = homogeneous_array(base_pts)

    pts_parts: list[np.ndarray] = []
    wts_parts: list[np.ndarray] = []
    len_parts: list[np.ndarray] = []
    per_length: list[float] = []
    for level in word_levels(config, L, element_cap):
        a = level.mats[:, 0][:, None]
        b = level.mats[:, 1][:, None]
        c = level.mats[:, 2][:, None]
        d = level.mats[:, 3][:, None]
        v0 = a * u0[None, :] + b * u1[None, :]
        v1 = c * u0[None, :] + d * u1[None, :]
        f = (u0 * u0 + u1 * u1)[None, :] / (v0 * v0 + v1 * v1)
        with np.errstate(divide="ignore", invalid="ignore"):
            pts = v0 / v1
        pts = np.where(np.isfinite(pts), pts, INF)
        w = f * base_wts[None, :]
        pts_parts.append(pts.reshape(-1))
        wts_parts.append(w.reshape(-1))
        len_parts.append(np.full(w.size, level.length, dtype=np.int16))
        per_length.append(float(w.sum()))

    q, tail = _tail_stats(per_length)
    points = np.concatenate(pts_parts)
    weights = np.concatenate(wts_parts)
    lengths = np.concatenate(len_parts)
    raw = np.arange(len(points), dtype=np.int64)
    base_idx = (raw % n_base).astype(np.int32)

    groups, reps = _merge_collisions(points, weights)
    if len(reps) != len(points):
        acc = np.zeros(len(reps), dtype=np.float64)
        np.add.at(acc, groups, weights)
        # groups are keyed by sorted point; restore (word, base) order
        order = np.argsort(reps, kind="stable")
        reps = reps[order]
        points = points[reps]
        weights = acc[order]
        lengths = lengths[reps]
        base_idx = base_idx[reps]
        raw = reps
    return AutomorphicAtoms(
        config=config,
        source=measure,
        max_word_length=L,
        points=points,
        weights=weights,
        word_lengths=lengths,
        base_circle=base_ns[base_idx],
        base_index=base_idx,
        raw_index=raw,
        per_length_mass=tuple(per_length),
        tail_ratio=q,
        tail_mass=tail,
    )


@dataclass(frozen=True)
class PoincareResult:
    """Value and per-length breakdown of the truncated Poincaré series."""

    point: ExtendedReal
    max_word_length: int
    value: float
    per_length: tuple[float, ...]
    tail_ratio: float
    tail_mass: float


def poincare_series(
    config: SchottkyConfig,
    x: ExtendedReal,
    max_len: int | None = None,
    element_cap: int | None = None,
) -> PoincareResult:
    """D(x) = Σ_{|g| ≤ L} f(g; x) with per-length sums.

    Always ≥ 1 (identity term).  Raises DomainError when x sits within
    the exclusion radius of the depth-L limit-set sample, where the full
    series diverges.
    """
    return poincare_many(config, [x], max_len, element_cap)[0]


def poincare_many(
    config: SchottkyConfig,
    xs: Sequence[ExtendedReal],
    max_len: int | None = None,
    element_cap: int | None = None,
) -> list[PoincareResult]:
    """Poincaré series at several points in one sweep over the word tree."""
    pts = np.array([canon_point(x) for x in xs], dtype=np.float64)
    L = config.max_word_length if max_len is None else int(max_len)
    u0, u1 = homogeneous_array(pts)
    sums: list[np.ndarray] = []
    last_level = None
    for level in word_levels(config, L, element_cap):
        v0 = level.mats[:, 0][:, None] * u0[None, :] + level.mats[:, 1][:, None] * u1[None, :]
        v1 = level.mats[:, 2][:, None] * u0[None, :] + level.mats[:, 3][:, None] * u1[None, :]
        f = (u0 * u0 + u1 * u1)[None, :] / (v0 * v0 + v1 * v1)
        sums.append(f.sum(axis=0))
        last_level = level
    if config.n_generators > 0 and L >= 1 and last_level is not None:
        samples = last_level.mats[:, 1] / last_level.mats[:, 3]
        s0, s1 = homogeneous_array(samples)
        ns = np.hypot(s0, s1)
        nu = np.hypot(u0, u1)
        # chordal distance of every x to every depth-L sample
        for j, x in enumerate(pts):
            dist = 2.0 * np.abs(u0[j] * s1 - s0 * u1[j]) / (nu[j] * ns)
            if float(dist.min()) <= LIMIT_EXCLUSION:
                raise DomainError(
                    f"point {x!r} lies within {LIMIT_EXCLUSION} of a limit-set sample"
                )
    out = []
    for j, x in enumerate(pts):
        per_length = [float(s[j]) for s in sums]
        q, tail = _tail_stats(per_length)
        out.append(
            PoincareResult(
                float(x) if math.isfinite(x) else INF,
                L,
                float(sum(per_length)),
                tuple(per_length),
                q,
                tail,
            )
        )
    return out


# ---------------------------------------------------------------------------
# measure transport


def transform(atoms: Sequence[Atom], g: MoebiusMap) -> tuple[Atom, ...]:
    """Measure of F∘g: atom (x, w) moves to (g⁻¹·x, f(g⁻¹; x)·w)."""
    ginv = inverse(g)
    return tuple(
        Atom(ginv(a.point), a.weight * cocycle(ginv, a.point)) for a in atoms
    )


def pushforward(atoms: Sequence[Atom], g: MoebiusMap) -> tuple[Atom, ...]:
    """Image measure: atom (x, w) moves to (g·x, w), mass preserved."""
    return tuple(Atom(g(a.point), a.weight) for a in atoms)


def restrict(extension: AutomorphicAtoms) -> FundamentalMeasure:
    """Keep exactly the atoms located inside the fundamental set.

    Inverts extend: for extensions, only the identity block lands in the
    fundamental set, so the source measure is recovered.
    """
    fi = fundamental_intervals(extension.config)
    ns = fi.locate_many(extension.points)
    parts: list[list[Atom]] = [[] for _ in range(extension.config.n_circles)]
    for idx in np.nonzero(ns)[0]:
        point = float(extension.points[idx])
        parts[int(ns[idx]) - 1].append(
            Atom(INF if math.isinf(point) else point, float(extension.weights[idx]))
        )
    return FundamentalMeasure(extension.config, tuple(tuple(p) for p in parts))


@dataclass(frozen=True)
class IntervalResidual:
    interval: tuple[float, float]
    extension_mass: float  # ν(g·A) from the truncated atoms
    transported_mass: float  # ∫_A f(g;x) dν(x)
    residual: float
    passed: bool


@dataclass(frozen=True)
class AutomorphyReport:
    map_entries: tuple[float, float, float, float]
    tolerance: float
    residuals: tuple[IntervalResidual, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.residuals)

    @property
    def max_residual(self) -> float:
        return max((r.residual for r in self.residuals), default=0.0)


def verify_automorphic(
    extension: AutomorphicAtoms,
    g: MoebiusMap,
    test_intervals: Sequence[tuple[float, float]],
) -> AutomorphyReport:
    """Compare ν(g·A) against ∫_A f(g;x) dν for fundamental subintervals.

    Intervals are half-open [left, right) and must sit inside fundamental
    pieces.  Pass tolerance is max(1e-6, 10·tail mass).
    """
    fi = fundamental_intervals(extension.config)
    tol = max(1e-6, 10.0 * extension.tail_mass)
    pulled = apply_array(inverse(g), extension.points)
    f_vals = cocycle_array(g, extension.points)
    out = []
    for left, right in test_intervals:
        if not (left < right) or not math.isfinite(left) or not math.isfinite(right):
            raise ValidationError(f"bad test interval [{left!r}, {right!r})")
        loc = fi.locate(left)
        if loc is None:
            raise ValidationError(
                f"test interval [{left!r}, {right!r}) is not inside a fundamental piece"
            )
        piece = next(
            p for p in fi.pieces[loc[0] - 1] if p.contains(left)
        )
        if not (piece.contains(right) or (not piece.wraps and right == piece.right)):
            raise ValidationError(
                f"test interval [{left!r}, {right!r}) crosses a piece boundary"
            )
        in_gA = (pulled >= left) & (pulled < right)
        in_A = (extension.points >= left) & (extension.points < right)
        lhs = float(extension.weights[in_gA].sum())
        rhs = float((f_vals[in_A] * extension.weights[in_A]).sum())
        res = abs(lhs - rhs)
        out.append(
            IntervalResidual((left, right), lhs, rhs, res, res <= tol)
        )
    return AutomorphyReport(g.entries, tol, tuple(out))

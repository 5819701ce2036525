"""Finite-gap data: gap sets, divisors, and the explicit two-sided function

    h(z) = 2i · Π_n  s_n(z) / (μ_n − z),
    s_n(z) = exp( (Log(a_n − z) + Log(b_n − z)) / 2 ),

evaluated with per-factor principal logarithms strictly inside the upper
half plane.  This is the unique branch that keeps h Herglotz with
h(iy) → 2i; boundary values are always taken as limits z + iε from above,
since the two one-sided limits across a gap are conjugate.

The Krein function ξ = (1/π)·Im Log h equals 1/2 off the gaps and jumps
at the pole position μ_n inside each gap; the divisor sign σ_n records
which half-line function receives the pole's point mass.  The divisor
coordinates sweep a torus: each gap doubled (two copies glued at the
endpoints) contributes one angle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, PoleProximityWarning, ValidationError

#: minimum clearance of krein_check grid points from band edges and poles
EDGE_EXCLUSION = 1e-3

#: default boundary heights for residue extrapolation
RESIDUE_Y_SEQUENCE = (1e-4, 1e-5, 1e-6, 1e-7, 1e-8)


@dataclass(frozen=True)
class GapSet:
    """Strictly increasing gaps [a_1, b_1] < ... < [a_N, b_N]."""

    gaps: tuple[tuple[float, float], ...]

    def __post_init__(self):
        gaps = tuple((float(a), float(b)) for a, b in self.gaps)
        if not gaps:
            raise ValidationError("need at least one gap")
        flat = [x for gap in gaps for x in gap]
        if any(not math.isfinite(x) for x in flat):
            raise ValidationError("gap endpoints must be finite")
        if any(x >= y for x, y in zip(flat, flat[1:])):
            raise ValidationError(f"gap endpoints must be strictly increasing: {flat}")
        object.__setattr__(self, "gaps", gaps)

    @property
    def n_gaps(self) -> int:
        return len(self.gaps)

    def in_band_complement(self, t: float) -> bool:
        """True when t lies outside every closed gap."""
        return all(not (a <= t <= b) for a, b in self.gaps)


@dataclass(frozen=True)
class Divisor:
    """Per gap: pole position μ_n ∈ [a_n, b_n] and side sign σ_n ∈ {±1}.

    σ_n is canonicalized to +1 when μ_n sits at a gap endpoint, where no
    point mass exists and the sign carries no information.
    """

    gaps: GapSet
    mus: tuple[float, ...]
    sigmas: tuple[int, ...]

    def __post_init__(self):
        mus = tuple(float(m) for m in self.mus)
        sigmas = tuple(int(s) for s in self.sigmas)
        if len(mus) != self.gaps.n_gaps or len(sigmas) != self.gaps.n_gaps:
            raise ValidationError("need one (mu, sigma) pair per gap")
        canon = []
        for (a, b), mu, sg in zip(self.gaps.gaps, mus, sigmas):
            if not (a <= mu <= b):
                raise ValidationError(f"mu={mu!r} outside its gap [{a}, {b}]")
            if sg not in (-1, 1):
                raise ValidationError(f"sigma must be +1 or -1, got {sg!r}")
            canon.append(1 if mu in (a, b) else sg)
        object.__setattr__(self, "mus", mus)
        object.__setattr__(self, "sigmas", tuple(canon))


def eval_h(gaps: GapSet, mus: Sequence[float], z):
    """h(z) = 2i·Π s_n(z)/(μ_n − z) for Im z > 0 (scalar or array).

    Im h ≥ 0 on the upper half plane and h(iy) → 2i as y → ∞.  Warns when
    z is numerically on top of an interior pole μ_n.
    """
    mus = tuple(float(m) for m in mus)
    if len(mus) != gaps.n_gaps:
        raise ValidationError("need one mu per gap")
    for (a, b), mu in zip(gaps.gaps, mus):
        if not (a <= mu <= b):
            raise ValidationError(f"mu={mu!r} outside its gap [{a}, {b}]")
    zz = np.asarray(z, dtype=np.complex128)
    if np.any(zz.imag <= 0.0):
        raise DomainError("eval_h requires Im z > 0; take boundary values via z + i*eps")
    out = np.full(zz.shape, 2.0j, dtype=np.complex128)
    for (a, b), mu in zip(gaps.gaps, mus):
        if a < mu < b and np.any(np.abs(zz - mu) < 1e-12):
            warnings.warn(
                f"evaluation within 1e-12 of the pole at mu={mu!r}",
                PoleProximityWarning,
                stacklevel=2,
            )
        s = np.exp(0.5 * (np.log(a - zz) + np.log(b - zz)))
        out *= s / (mu - zz)
    if np.isscalar(z) or getattr(z, "shape", None) == ():
        return complex(out)
    return out


def krein_xi(divisor: Divisor, t: float) -> float:
    """Boundary phase ξ(t): 1/2 off the gaps, 1 on (μ_n, b_n), 0 on (a_n, μ_n).

    The exceptional points {a_n, b_n, μ_n} are excluded (a null set; the
    function is only defined almost everywhere).
    """
    t = float(t)
    if math.isinf(t):
        return 0.5
    for (a, b), mu in zip(divisor.gaps.gaps, divisor.mus):
        if t in (a, b, mu):
            raise DomainError(f"xi is not defined at the exceptional point t={t!r}")
        if a < t < b:
            return 1.0 if t > mu else 0.0
    return 0.5


@dataclass(frozen=True)
class ResidueResult:
    """Pole mass of h at μ_n; zero with the edge flag at gap endpoints."""

    value: float
    inverse_sqrt_edge: bool


def residue(
    gaps: GapSet,
    mus: Sequence[float],
    n: int,
    y_sequence: Sequence[float] = RESIDUE_Y_SEQUENCE,
) -> ResidueResult:
    """lim_{y→0+} (μ_n − (μ_n + iy))·h(μ_n + iy) by Richardson extrapolation.

    Strictly positive for an interior pole; at a gap endpoint there is no
    pole, only an inverse-square-root blowup, reported by the flag.
    Raises ConvergenceError when the extrapolants disagree by more than
    1e-6 relative.
    """
    mus = tuple(float(m) for m in mus)
    if not (0 <= n < gaps.n_gaps):
        raise ValidationError(f"gap index {n} out of range")
    a, b = gaps.gaps[n]
    mu = mus[n]
    if mu in (a, b):
        return ResidueResult(0.0, True)
    ys = [float(y) for y in y_sequence]
    raw = [complex(-1j * y * eval_h(gaps, mus, mu + 1j * y)) for y in ys]
    extrap = [
        ((y1 * e2 - y2 * e1) / (y1 - y2)).real
        for (y1, e1), (y2, e2) in zip(zip(ys, raw), zip(ys[1:], raw[1:]))
    ]
    scale = max(abs(extrap[-1]), 1e-30)
    if abs(extrap[-1] - extrap[-2]) > 1e-6 * scale:
        raise ConvergenceError(
            f"residue extrapolation at mu={mu!r} did not settle: "
            f"{extrap[-2]!r} vs {extrap[-1]!r}"
        )
    return ResidueResult(extrap[-1], False)


def assign_atom(divisor: Divisor, n: int) -> str:
    """Which half-line function receives the pole mass in gap n.

    'plus' for σ_n = +1 with interior μ_n, 'minus' for σ_n = −1, 'none'
    at gap endpoints where there is no point mass.
    """
    if not (0 <= n < divisor.gaps.n_gaps):
        raise ValidationError(f"gap index {n} out of range")
    a, b = divisor.gaps.gaps[n]
    mu = divisor.mus[n]
    if mu in (a, b):
        return "none"
    return "plus" if divisor.sigmas[n] == 1 else "minus"


def krein_check(
    divisor: Divisor,
    grid: Sequence[float],
    eps: float = 1e-6,
) -> float:
    """Max deviation of (1/π)·Im Log h(t + iε) from the predicted ξ on a grid.

    Grid points must keep clear of band edges and poles by the exclusion
    radius; eps must lie in [1e-8, 1e-4].
    """
    if not (1e-8 <= eps <= 1e-4):
        raise ValidationError(f"eps must lie in [1e-8, 1e-4], got {eps!r}")
    pts = np.asarray(list(grid), dtype=np.float64)
    if pts.size == 0:
        raise ValidationError("grid must not be empty")
    exceptional = [x for gap in divisor.gaps.gaps for x in gap] + list(divisor.mus)
    for t in pts:
        if min(abs(t - e) for e in exceptional) < EDGE_EXCLUSION:
            raise ValidationError(
                f"grid point {t!r} is within {EDGE_EXCLUSION} of an exceptional point"
            )
    vals = eval_h(divisor.gaps, divisor.mus, pts + 1j * eps)
    measured = np.angle(vals) / math.pi
    predicted = np.array([krein_xi(divisor, float(t)) for t in pts])
    return float(np.max(np.abs(measured - predicted)))


def torus_coords(divisor: Divisor) -> np.ndarray:
    """Angle per gap on the doubled-gap circle.

    θ = 0 at μ = a_n; (0, π) is the σ = +1 branch with μ increasing;
    θ = π at μ = b_n; (π, 2π) the σ = −1 branch with μ decreasing.
    """
    out = np.empty(divisor.gaps.n_gaps)
    for i, ((a, b), mu, sg) in enumerate(
        zip(divisor.gaps.gaps, divisor.mus, divisor.sigmas)
    ):
        frac = (mu - a) / (b - a)
        out[i] = math.pi * frac if sg == 1 else 2.0 * math.pi - math.pi * frac
    return out % (2.0 * math.pi)


def torus_decode(gaps: GapSet, thetas: Sequence[float]) -> Divisor:
    """Inverse of torus_coords."""
    thetas = [float(t) % (2.0 * math.pi) for t in thetas]
    if len(thetas) != gaps.n_gaps:
        raise ValidationError("need one angle per gap")
    mus, sigmas = [], []
    for (a, b), th in zip(gaps.gaps, thetas):
        if th <= math.pi:
            mus.append(a + (b - a) * th / math.pi)
            sigmas.append(1)
        else:
            mus.append(a + (b - a) * (2.0 * math.pi - th) / math.pi)
            sigmas.append(-1)
    return Divisor(gaps, tuple(mus), tuple(sigmas))

"""Arithmetic in PSL(2,R) and its action on the circle R∞ = R ∪ {∞}.

Group elements are stored as unit-determinant 2x2 real matrices brought to
a canonical sign (first nonzero entry among (a, b, c) positive), so each
element of the quotient by ±1 has exactly one representation.  The point
at infinity is the float ``INF``; both signed float infinities are
identified with it.  Points are compared in the chordal metric of the
one-point compactification, which is the Euclidean metric after the
stereographic embedding of R∞ into the unit sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from .errors import ValidationError

INF = math.inf

#: chordal tolerance under which two points of R∞ count as equal
POINT_TOL = 1e-12

#: relative threshold below which a denominator counts as a pole
_POLE_TOL = 1e-14

ExtendedReal = float  # finite value, or INF for the point at infinity


def is_point_at_inf(x: ExtendedReal) -> bool:
    return math.isinf(x)


def canon_point(x: ExtendedReal) -> float:
    """Collapse both signed infinities onto the single point INF."""
    x = float(x)
    if math.isnan(x):
        raise ValidationError("NaN is not a point of R-infinity")
    return INF if math.isinf(x) else x


def homogeneous(x: ExtendedReal) -> tuple[float, float]:
    """Projective coordinates w(x): (x, 1) for finite x, (1, 0) at infinity."""
    if math.isinf(x):
        return (1.0, 0.0)
    return (float(x), 1.0)


def _unit_homogeneous(x: ExtendedReal) -> tuple[float, float]:
    # same ray as homogeneous(x), rescaled so no later square overflows
    if math.isinf(x):
        return (1.0, 0.0)
    m = max(abs(x), 1.0)
    return (x / m, 1.0 / m)


def chordal(x: ExtendedReal, y: ExtendedReal) -> float:
    """Chordal distance 2|x−y| / sqrt((1+x²)(1+y²)), with 2/sqrt(1+x²) to ∞."""
    x, y = canon_point(x), canon_point(y)
    if math.isinf(x) and math.isinf(y):
        return 0.0
    if math.isinf(x):
        return 2.0 / math.hypot(1.0, y)
    if math.isinf(y):
        return 2.0 / math.hypot(1.0, x)
    hx, hy = math.hypot(1.0, x), math.hypot(1.0, y)
    # cross form stays finite for arbitrarily large finite inputs
    return 2.0 * abs((x / hx) * (1.0 / hy) - (y / hy) * (1.0 / hx))


def points_equal(x: ExtendedReal, y: ExtendedReal, tol: float = POINT_TOL) -> bool:
    return chordal(x, y) <= tol


@dataclass(frozen=True)
class MoebiusMap:
    """Element of PSL(2,R): unit determinant, canonical sign.

    Positive-determinant input is renormalized to det 1 whenever the
    determinant is numerically measurable.  For large entries the value
    ad − bc cancels catastrophically (the error of the difference grows
    like eps·|ad|, far beyond the distance of the true determinant from
    1), so such matrices are accepted as unit-determinant products and
    only brought to canonical sign; the group enumerator tracks word
    determinants multiplicatively instead.
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        a, b, c, d = (float(self.a), float(self.b), float(self.c), float(self.d))
        if not all(map(math.isfinite, (a, b, c, d))):
            raise ValidationError("matrix entries must be finite")
        det = a * d - b * c
        # ad - bc is measurable only in the well-conditioned regime; for
        # larger entries (long words, possibly born from cancelling
        # products) the value carries more noise than the true deviation
        # from 1, and rescaling by it would corrupt the entries
        if abs(a * d) + abs(b * c) <= 1e6:
            if det <= 0.0:
                raise ValidationError(f"determinant must be positive, got {det!r}")
            if det != 1.0:
                s = 1.0 / math.sqrt(det)
                a, b, c, d = a * s, b * s, c * s, d * s
        for lead in (a, b, c):
            if lead != 0.0:
                if lead < 0.0:
                    a, b, c, d = -a, -b, -c, -d
                break
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @classmethod
    def _product_form(cls, a: float, b: float, c: float, d: float) -> "MoebiusMap":
        # sign canonicalization only: products of unit-determinant maps
        # keep det 1 multiplicatively, and rescaling by a *measured*
        # determinant would inject its measurement noise into the entries
        for lead in (a, b, c):
            if lead != 0.0:
                if lead < 0.0:
                    a, b, c, d = -a, -b, -c, -d
                break
        self = object.__new__(cls)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        return self

    @property
    def entries(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> float:
        return self.a + self.d

    def __call__(self, x):
        return apply(self, x)


IDENTITY = MoebiusMap(1.0, 0.0, 0.0, 1.0)


_SPLIT = 134217729.0  # 2^27 + 1, Dekker splitting constant


def _two_product(x: float, y: float) -> tuple[float, float]:
    # x*y = p + e exactly (Dekker); valid away from overflow thresholds
    p = x * y
    cx = _SPLIT * x
    hx = cx - (cx - x)
    lx = x - hx
    cy = _SPLIT * y
    hy = cy - (cy - y)
    ly = y - hy
    e = ((hx * hy - p) + hx * ly + lx * hy) + lx * ly
    return p, e


def _dot2(x1: float, y1: float, x2: float, y2: float) -> float:
    """x1·y1 + x2·y2, compensated: full precision even under cancellation."""
    p1, e1 = _two_product(x1, y1)
    p2, e2 = _two_product(x2, y2)
    s = p1 + p2
    z = s - p1
    err = (p1 - (s - z)) + (p2 - z)
    return s + (err + e1 + e2)


def compose(g: MoebiusMap, h: MoebiusMap) -> MoebiusMap:
    """Matrix product g·h in canonical sign, exactly multiplicative.

    Entries are accumulated with compensated products: when g and h are
    long near-inverse words the plain sums cancel catastrophically, and
    the compensation keeps every entry accurate to machine precision.
    The determinant is not rescaled (it is det(g)·det(h) by construction),
    which keeps the cocycle exactly multiplicative along compositions.
    """
    return MoebiusMap._product_form(
        _dot2(g.a, h.a, g.b, h.c),
        _dot2(g.a, h.b, g.b, h.d),
        _dot2(g.c, h.a, g.d, h.c),
        _dot2(g.c, h.b, g.d, h.d),
    )


def inverse(g: MoebiusMap) -> MoebiusMap:
    """Adjugate inverse; exact for unit-determinant input."""
    return MoebiusMap._product_form(g.d, -g.b, -g.c, g.a)


def apply(g: MoebiusMap, x):
    """Linear fractional action (a·x + b) / (c·x + d).

    Accepts a point of R∞ (float or INF) or a complex number; upper
    half-plane points stay in the upper half plane.  Total on R∞: the
    pole of g maps to INF, and INF maps to a/c (INF when c = 0).
    """
    if isinstance(x, complex):
        return (g.a * x + g.b) / (g.c * x + g.d)
    x = canon_point(x)
    if math.isinf(x):
        return INF if g.c == 0.0 else g.a / g.c
    # compensated sums: near the pole c·x + d cancels and the plain form
    # loses the digits that decide where the huge image actually lands
    den = _dot2(g.c, x, g.d, 1.0)
    scale = max(abs(g.a), abs(g.b), abs(g.c), abs(g.d)) * max(abs(x), 1.0)
    if abs(den) <= _POLE_TOL * scale:
        return INF
    return canon_point(_dot2(g.a, x, g.b, 1.0) / den)


def cocycle(g: MoebiusMap, x: ExtendedReal) -> float:
    """Density f(g; x) = ||w(x)||² / ||g·w(x)||² of the measure transport.

    Equals (x²+1) / ((ax+b)² + (cx+d)²) for finite x and 1/(a²+c²) at
    infinity.  Strictly positive for every x since g·w never vanishes.
    Components are accumulated with compensation: near g⁻¹·∞ both rows of
    g·w cancel simultaneously and the plain sums would lose the digits
    that make up the entire norm.
    """
    u0, u1 = _unit_homogeneous(canon_point(x))
    num = u0 * u0 + u1 * u1
    v0 = _dot2(g.a, u0, g.b, u1)
    v1 = _dot2(g.c, u0, g.d, u1)
    return num / (v0 * v0 + v1 * v1)


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    v = s - a
    return s, (a - (s - v)) + (b - v)


def _dot2_dd(x1: float, y1: float, x2: float, y2: float) -> tuple[float, float]:
    # x1·y1 + x2·y2 as an unevaluated double-double sum
    p1, e1 = _two_product(x1, y1)
    p2, e2 = _two_product(x2, y2)
    s, e = _two_sum(p1, p2)
    return _two_sum(s, e + (e1 + e2))


def _affine_dd(a: float, yh: float, yl: float, b: float) -> tuple[float, float]:
    # a·y + b with y in double-double
    p, e = _two_product(a, yh)
    s, e2 = _two_sum(p, b)
    return _two_sum(s, e2 + e + a * yl)


def _square_dd(h: float, low: float) -> tuple[float, float]:
    p, e = _two_product(h, h)
    return p, e + 2.0 * h * low


def cocycle_at_image(g: MoebiusMap, h: MoebiusMap, x: ExtendedReal) -> float:
    """f(g; h·x) with the intermediate h·x carried in double-double.

    Rounding h·x to a single double loses exactly the digits that the
    cocycle amplifies when h·x falls near g⁻¹·∞, so the composed value
    f(g; h·x) evaluated through the public single-double operations is
    only conditioning-accurate.  This path keeps the identity
    f(gh; x) = f(g; h·x)·f(h; x) at machine precision.
    """
    u0, u1 = homogeneous(canon_point(x))
    nh, nl = _dot2_dd(h.a, u0, h.b, u1)
    dh, dl = _dot2_dd(h.c, u0, h.d, u1)
    if dh == 0.0:
        return cocycle(g, INF)
    # double-double quotient y = n / d
    q1 = nh / dh
    p, e = _two_product(q1, dh)
    rh, re = _two_sum(nh, -p)
    q2 = (rh + (re + nl - e - q1 * dl)) / dh
    yh, yl = _two_sum(q1, q2)
    v0h, v0l = _affine_dd(g.a, yh, yl, g.b)
    v1h, v1l = _affine_dd(g.c, yh, yl, g.d)
    n2h, n2e = _square_dd(yh, yl)
    sh, se = _two_sum(n2h, 1.0)
    num = sh + (se + n2e)
    d0h, d0e = _square_dd(v0h, v0l)
    d1h, d1e = _square_dd(v1h, v1l)
    th, te = _two_sum(d0h, d1h)
    den = th + (te + d0e + d1e)
    return num / den


def transfer_density(g: MoebiusMap, t: ExtendedReal) -> float:
    """Density h(g; t) = ||w(g·t)||² / ||g⁻¹·w(g·t)||².

    Reciprocal of cocycle: h(g;t)·f(g;t) = 1, including at t = g⁻¹·∞.
    """
    return cocycle(inverse(g), apply(g, t))


MapClass = Literal["identity", "elliptic", "parabolic", "hyperbolic"]

#: tolerance separating parabolic from elliptic/hyperbolic traces
_TRACE_TOL = 1e-9


def classify(g: MoebiusMap) -> MapClass:
    """Conjugacy class by |trace|: <2 elliptic, =2 parabolic, >2 hyperbolic."""
    if max(abs(g.a - 1.0), abs(g.b), abs(g.c), abs(g.d - 1.0)) <= 1e-12:
        return "identity"
    t = abs(g.trace)
    if abs(t - 2.0) <= _TRACE_TOL:
        return "parabolic"
    return "elliptic" if t < 2.0 else "hyperbolic"

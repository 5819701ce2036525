"""Symmetric circle groups on the real line and their fundamental intervals.

A configuration is an ordered list of disjoint circles |z − c_j| = r_j with
0 < r_j < c_j on the positive axis (their mirror images sit on the negative
axis).  Each circle induces the hyperbolic map "reflect about the imaginary
axis, then invert about the circle", with unit matrix

    (1/r) [[c, c² − r²], [1, c]].

These maps freely generate a discrete group.  The part of R∞ not covered by
the open disks and their mirrors splits into intervals I_1 .. I_N (N =
number of circles + 1): I_1 sits between the innermost mirror pair, I_N
wraps through ∞, the others have two mirror pieces each.  Each I_n carries
a circle coordinate θ ∈ [0, 2π) obtained by gluing its pieces end to end;
finite pieces are parametrized by arc length in x, the wrap piece by the
compactified angle 2·atan(x).

The reduced-word enumerator works on numpy arrays level by level (all
words of one length at a time) so that Poincaré-type sums over millions of
group elements stay cheap.  Letters are coded 0..2k−1 with code 2j for
generator j and 2j+1 for its inverse; a word is reduced iff no letter is
followed by its code XOR 1.  Enumeration order is by length, then
lexicographic in letter codes, and is byte-stable across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import ResourceLimitError, ValidationError
from .moebius import INF, ExtendedReal, MoebiusMap, canon_point, chordal

GroupWord = tuple[int, ...]  # signed 1-based generator indices, reduced

DEFAULT_ELEMENT_CAP = 5_000_000

# levels are memoized only below this word count (memory guard)
_CACHE_WORD_LIMIT = 2_500_000


@dataclass(frozen=True)
class CircleDatum:
    """One circle |z − c| = r, required to stay right of the imaginary axis."""

    c: float
    r: float

    def __post_init__(self):
        if not (math.isfinite(self.c) and math.isfinite(self.r)):
            raise ValidationError("circle data must be finite")
        if self.r <= 0.0:
            raise ValidationError(f"circle radius must be positive, got {self.r}")
        if self.c - self.r <= 0.0:
            raise ValidationError(
                f"circle (c={self.c}, r={self.r}) touches the mirror axis: need c - r > 0"
            )


@dataclass(frozen=True)
class SchottkyConfig:
    """Ordered circle data plus enumeration limits.

    N = len(circles) + 1 intervals/glued circles; the empty configuration
    (trivial group) is allowed and exercises the identity-only paths.
    """

    circles: tuple[CircleDatum, ...] = ()
    max_word_length: int = 12
    element_cap: int = DEFAULT_ELEMENT_CAP

    def __post_init__(self):
        circles = tuple(
            c if isinstance(c, CircleDatum) else CircleDatum(*c) for c in self.circles
        )
        object.__setattr__(self, "circles", circles)
        for prev, nxt in zip(circles, circles[1:]):
            if prev.c + prev.r >= nxt.c - nxt.r:
                raise ValidationError(
                    f"circles (c={prev.c}, r={prev.r}) and (c={nxt.c}, r={nxt.r}) "
                    "are not strictly disjoint"
                )
        if self.max_word_length < 0:
            raise ValidationError("max_word_length must be >= 0")
        if self.element_cap < 1:
            raise ValidationError("element_cap must be >= 1")

    @property
    def n_generators(self) -> int:
        return len(self.circles)

    @property
    def n_circles(self) -> int:
        """Number of fundamental intervals / glued circles S_n."""
        return len(self.circles) + 1


@lru_cache(maxsize=64)
def generators(config: SchottkyConfig) -> tuple[MoebiusMap, ...]:
    """Hyperbolic generator for each circle: (1/r)[[c, c²−r²],[1, c]]."""
    return tuple(
        MoebiusMap(cd.c / cd.r, (cd.c * cd.c - cd.r * cd.r) / cd.r, 1.0 / cd.r, cd.c / cd.r)
        for cd in config.circles
    )


# ---------------------------------------------------------------------------
# fundamental intervals and circle coordinates


def _psi(x: float) -> float:
    """Compactified angle: 2·atan(x) on R, π at infinity; increasing in x."""
    return math.pi if math.isinf(x) else 2.0 * math.atan(x)


@dataclass(frozen=True)
class IntervalPiece:
    """Half-open piece [left, right); a wrap piece runs through ∞."""

    left: float
    right: float
    wraps: bool = False

    def contains(self, x: ExtendedReal) -> bool:
        x = canon_point(x)
        if not self.wraps:
            return self.left <= x < self.right
        if math.isinf(x):
            return True
        if self.left == self.right:  # full circle (trivial group)
            return True
        return x >= self.left or x < self.right

    @property
    def span(self) -> float:
        """Length in the coordinate used to parametrize this piece."""
        if not self.wraps:
            return self.right - self.left
        if self.left == self.right:
            return 2.0 * math.pi
        return (_psi(self.right) - _psi(self.left)) % (2.0 * math.pi)

    def coordinate(self, x: ExtendedReal) -> float:
        """Offset of x within the piece, in the piece's own parametrization."""
        x = canon_point(x)
        if not self.wraps:
            return x - self.left
        if self.left == self.right:
            return (_psi(x) - _psi(self.left)) % (2.0 * math.pi)
        return (_psi(x) - _psi(self.left)) % (2.0 * math.pi)

    def point_at(self, s: float) -> ExtendedReal:
        """Inverse of coordinate(); s must lie in [0, span)."""
        if not self.wraps:
            return self.left + s
        psi = _psi(self.left) + s
        if psi > math.pi:
            psi -= 2.0 * math.pi
        if abs(psi - math.pi) < 1e-15:
            return INF
        return math.tan(psi / 2.0)


@dataclass(frozen=True)
class FundamentalIntervals:
    """Pieces of the I_n plus the glued circle coordinate on each S_n."""

    config: SchottkyConfig
    pieces: tuple[tuple[IntervalPiece, ...], ...]
    spans: tuple[tuple[float, ...], ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "spans", tuple(tuple(p.span for p in ps) for ps in self.pieces)
        )

    def circle_span(self, n: int) -> float:
        """Total parametrized length of S_n (1-based n)."""
        return sum(self.spans[n - 1])

    def locate(self, x: ExtendedReal) -> tuple[int, float] | None:
        """Circle index n (1-based) and angle θ ∈ [0, 2π) of x, or None."""
        x = canon_point(x)
        for n, ps in enumerate(self.pieces, start=1):
            offset = 0.0
            total = self.circle_span(n)
            for piece in ps:
                if piece.contains(x):
                    theta = 2.0 * math.pi * (offset + piece.coordinate(x)) / total
                    return n, theta % (2.0 * math.pi)
                offset += piece.span
        return None

    def point_at(self, n: int, theta: float) -> ExtendedReal:
        """Point of S_n at angle θ; inverse of locate on [0, 2π)."""
        theta = theta % (2.0 * math.pi)
        s = theta / (2.0 * math.pi) * self.circle_span(n)
        for piece in self.pieces[n - 1]:
            if s < piece.span or piece is self.pieces[n - 1][-1]:
                return piece.point_at(min(s, piece.span * (1.0 - 1e-16)))
            s -= piece.span
        raise AssertionError("unreachable")

    def locate_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorized circle index per point (1-based), 0 where outside."""
        ns = np.zeros(points.shape, dtype=np.int16)
        for n, ps in enumerate(self.pieces, start=1):
            mask = np.zeros(points.shape, dtype=bool)
            for piece in ps:
                if piece.wraps:
                    if piece.left == piece.right:
                        mask |= True
                    else:
                        mask |= np.isinf(points) | (points >= piece.left) | (points < piece.right)
                else:
                    mask |= (points >= piece.left) & (points < piece.right)
            ns[(ns == 0) & mask] = n
        return ns


@lru_cache(maxsize=64)
def fundamental_intervals(config: SchottkyConfig) -> FundamentalIntervals:
    """Build I_1 .. I_N from the circle endpoints c ± r.

    I_1 = [−(c₁−r₁), c₁−r₁); middle I_n have a mirror pair of pieces
    joined at the ends that map to the left gap edge; I_N wraps through ∞
    from c_{N−1}+r_{N−1} to −(c_{N−1}+r_{N−1}).  The trivial configuration
    yields the single full circle.
    """
    circles = config.circles
    if not circles:
        return FundamentalIntervals(config, ((IntervalPiece(0.0, 0.0, wraps=True),),))
    pieces: list[tuple[IntervalPiece, ...]] = []
    first = circles[0]
    pieces.append((IntervalPiece(-(first.c - first.r), first.c - first.r),))
    for prev, nxt in zip(circles, circles[1:]):
        lo, hi = prev.c + prev.r, nxt.c - nxt.r
        pieces.append((IntervalPiece(-hi, -lo), IntervalPiece(lo, hi)))
    last = circles[-1]
    pieces.append((IntervalPiece(last.c + last.r, -(last.c + last.r), wraps=True),))
    return FundamentalIntervals(config, tuple(pieces))


def locate(config: SchottkyConfig, x: ExtendedReal) -> tuple[int, float] | None:
    """Circle index and angle of x in the fundamental set, or None."""
    return fundamental_intervals(config).locate(x)


# ---------------------------------------------------------------------------
# reduced-word enumeration


def word_count(n_generators: int, max_len: int) -> int:
    """Number of reduced words of length ≤ max_len (identity included)."""
    k = n_generators
    if k == 0 or max_len == 0:
        return 1
    if k == 1:
        return 1 + 2 * max_len
    total = 1
    level = 2 * k
    for _ in range(max_len):
        total += level
        level *= 2 * k - 1
    return total


def word_to_codes(word: GroupWord) -> tuple[int, ...]:
    return tuple(2 * (abs(s) - 1) + (0 if s > 0 else 1) for s in word)


def codes_to_word(codes: Sequence[int]) -> GroupWord:
    return tuple(int(c // 2 + 1) * (1 if c % 2 == 0 else -1) for c in codes)


def reduce_word(letters: Sequence[int]) -> GroupWord:
    """Free reduction: cancel adjacent inverse pairs."""
    out: list[int] = []
    for s in letters:
        if out and out[-1] == -s:
            out.pop()
        else:
            out.append(s)
    return tuple(out)


def word_inverse(word: GroupWord) -> GroupWord:
    return tuple(-s for s in reversed(word))


def word_matrix(config: SchottkyConfig, word: GroupWord) -> MoebiusMap:
    """Canonical matrix of a reduced word."""
    letters = _letter_matrices(config)
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    for s in word:
        la, lb, lc, ld = letters[2 * (abs(s) - 1) + (0 if s > 0 else 1)]
        a, b, c, d = a * la + b * lc, a * lb + b * ld, c * la + d * lc, c * lb + d * ld
    return MoebiusMap(a, b, c, d)


def word_of_matrix(config: SchottkyConfig, g: MoebiusMap, max_len: int = 64) -> GroupWord:
    """Reduced word of a group element, recovered by ping-pong.

    The first letter of a reduced word is identified by which disk
    interval (around a circle or its mirror image) contains g·0; stripping
    it and repeating terminates at the identity.  Raises ValidationError
    for maps that are not in the group generated by the configuration.
    """
    from .moebius import apply, compose, inverse

    gens = generators(config)
    inv_gens = tuple(inverse(h) for h in gens)
    word: list[int] = []
    current = g
    for _ in range(max_len + 1):
        x = apply(current, 0.0)
        letter = 0
        for j, cd in enumerate(config.circles, start=1):
            if cd.c - cd.r < x < cd.c + cd.r:
                letter = j
                break
            if -(cd.c + cd.r) < x < -(cd.c - cd.r):
                letter = -j
                break
        if letter == 0:
            # only the identity leaves the base point outside every disk;
            # the stripped residue carries roundoff proportional to the
            # input scale, while genuine non-identity group elements stay
            # O(1) away from the identity
            scale = max(abs(v) for v in g.entries)
            tol = min(1e-3, max(1e-8, 1e-9 * scale))
            if max(
                abs(current.a - 1.0), abs(current.b), abs(current.c), abs(current.d - 1.0)
            ) <= tol:
                return tuple(word)
            raise ValidationError(
                f"map with entries {g.entries} is not in the configured group"
            )
        word.append(letter)
        strip = inv_gens[letter - 1] if letter > 0 else gens[-letter - 1]
        current = compose(strip, current)
    raise ValidationError(
        f"map with entries {g.entries} did not reduce to the identity "
        f"within {max_len} letters"
    )


@lru_cache(maxsize=64)
def _letter_matrices(config: SchottkyConfig) -> np.ndarray:
    """(2k, 4) array of generator and inverse-generator entries."""
    rows = []
    for g in generators(config):
        rows.append([g.a, g.b, g.c, g.d])
        rows.append([g.d, -g.b, -g.c, g.a])
    return np.array(rows, dtype=np.float64).reshape(-1, 4)


@dataclass(frozen=True, eq=False)
class WordLevel:
    """All reduced words of one length, in lexicographic letter-code order.

    dets holds each word's determinant accumulated multiplicatively along
    the letters (det of a product is the product of dets), which stays
    accurate to machine precision where the ad − bc form of the stored
    entries cancels hopelessly.
    """

    length: int
    mats: np.ndarray  # (m, 4) rows [a, b, c, d]
    last: np.ndarray  # (m,) int8 last letter code, -1 for the identity
    dets: np.ndarray  # (m,) multiplicative determinants


def _next_level(level: WordLevel, letters: np.ndarray) -> WordLevel:
    two_k = letters.shape[0]
    m = level.mats.shape[0]
    a = level.mats[:, 0][:, None]
    b = level.mats[:, 1][:, None]
    c = level.mats[:, 2][:, None]
    d = level.mats[:, 3][:, None]
    la = letters[:, 0][None, :]
    lb = letters[:, 1][None, :]
    lc = letters[:, 2][None, :]
    ld = letters[:, 3][None, :]
    prods = np.empty((m, two_k, 4), dtype=np.float64)
    prods[:, :, 0] = a * la + b * lc
    prods[:, :, 1] = a * lb + b * ld
    prods[:, :, 2] = c * la + d * lc
    prods[:, :, 3] = c * lb + d * ld
    if level.length == 0:
        keep = np.ones(m * two_k, dtype=bool)
    else:
        mask = np.ones((m, two_k), dtype=bool)
        mask[np.arange(m), level.last ^ 1] = False
        keep = mask.reshape(-1)
    mats = prods.reshape(m * two_k, 4)[keep]
    last = np.tile(np.arange(two_k, dtype=np.int8), m)[keep]
    letter_dets = letters[:, 0] * letters[:, 3] - letters[:, 1] * letters[:, 2]
    dets = (level.dets[:, None] * letter_dets[None, :]).reshape(-1)[keep]
    return WordLevel(level.length + 1, mats, last, dets)


def _check_cap(config: SchottkyConfig, max_len: int, element_cap: int | None) -> int:
    cap = config.element_cap if element_cap is None else element_cap
    total = word_count(config.n_generators, max_len)
    if total > cap:
        raise ResourceLimitError(
            f"{total} reduced words of length <= {max_len} exceed the element cap {cap}"
        )
    return cap


@lru_cache(maxsize=3)
def _cached_levels(config: SchottkyConfig, max_len: int) -> tuple[WordLevel, ...]:
    letters = _letter_matrices(config)
    levels = [WordLevel(0, np.array([[1.0, 0.0, 0.0, 1.0]]), np.array([-1], dtype=np.int8), np.array([1.0]))]
    for _ in range(max_len):
        if config.n_generators == 0:
            break
        levels.append(_next_level(levels[-1], letters))
    return tuple(levels)


def word_levels(
    config: SchottkyConfig, max_len: int, element_cap: int | None = None
) -> Iterator[WordLevel]:
    """Yield WordLevel objects for lengths 0..max_len.

    Levels are memoized per (config, max_len) when the total word count is
    small enough; larger runs stream without caching.
    """
    _check_cap(config, max_len, element_cap)
    if word_count(config.n_generators, max_len) <= _CACHE_WORD_LIMIT:
        yield from _cached_levels(config, max_len)
        return
    letters = _letter_matrices(config)
    level = WordLevel(0, np.array([[1.0, 0.0, 0.0, 1.0]]), np.array([-1], dtype=np.int8), np.array([1.0]))
    yield level
    for _ in range(max_len):
        if config.n_generators == 0:
            return
        level = _next_level(level, letters)
        yield level


def _level_letter_rows(
    config: SchottkyConfig, max_len: int
) -> Iterator[tuple[WordLevel, np.ndarray]]:
    """word_levels plus the (m, length) int8 letter matrix of each level."""
    codes = None
    two_k = 2 * config.n_generators
    for level in word_levels(config, max_len):
        if level.length == 0:
            codes = np.empty((1, 0), dtype=np.int8)
        else:
            m = codes.shape[0]
            if level.length == 1:
                keep = np.ones(m * two_k, dtype=bool)
            else:
                mask = np.ones((m, two_k), dtype=bool)
                mask[np.arange(m), codes[:, -1] ^ 1] = False
                keep = mask.reshape(-1)
            grown = np.empty((m * two_k, level.length), dtype=np.int8)
            grown[:, :-1] = np.repeat(codes, two_k, axis=0)
            grown[:, -1] = np.tile(np.arange(two_k, dtype=np.int8), m)
            codes = grown[keep]
        yield level, codes


def enumerate_words(
    config: SchottkyConfig, max_len: int, element_cap: int | None = None
) -> Iterator[tuple[GroupWord, MoebiusMap]]:
    """All reduced words of length ≤ max_len with their canonical matrices.

    Deterministic order: by length, then lexicographically in letter codes
    (generator before its inverse, lower index first).  Raises
    ResourceLimitError if the count exceeds the cap.
    """
    _check_cap(config, max_len, element_cap)
    for level, codes in _level_letter_rows(config, max_len):
        for row, mat in zip(codes, level.mats):
            yield codes_to_word(row), MoebiusMap(*mat)


def limit_set_sample(
    config: SchottkyConfig, max_len: int, element_cap: int | None = None
) -> list[float]:
    """Orbit points g·0 over all reduced words of length exactly max_len.

    Approximates the limit set from outside; empty for the trivial group.
    """
    if max_len < 1:
        raise ValidationError("limit_set_sample needs max_len >= 1")
    if config.n_generators == 0:
        return []
    _check_cap(config, max_len, element_cap)
    last_level = None
    for last_level in word_levels(config, max_len, element_cap):
        pass
    pts = last_level.mats[:, 1] / last_level.mats[:, 3]
    return [float(p) for p in pts]


def quotient_bounds(
    config: SchottkyConfig, max_len: int, element_cap: int | None = None
) -> tuple[float, float]:
    """Extremes of |a/b|, |a/c|, |b/d|, |c/d| over non-identity words ≤ max_len.

    The lower bound staying away from 0 reflects the fact that 0 and ∞ lie
    outside the limit set.
    """
    if max_len < 1:
        raise ValidationError("quotient_bounds needs max_len >= 1")
    if config.n_generators == 0:
        raise ValidationError("quotient_bounds needs at least one circle")
    lo, hi = INF, 0.0
    for level in word_levels(config, max_len, element_cap):
        if level.length == 0:
            continue
        a, b, c, d = (np.abs(level.mats[:, i]) for i in range(4))
        for ratio in (a / b, a / c, b / d, c / d):
            lo = min(lo, float(ratio.min()))
            hi = max(hi, float(ratio.max()))
    return lo, hi


# ---------------------------------------------------------------------------
# vectorized point transport used by the measure modules


def homogeneous_array(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scaled projective coordinates (u0, u1) per point; (1, 0) at ∞."""
    pts = np.asarray(points, dtype=np.float64)
    inf_mask = np.isinf(pts)
    m = np.maximum(np.abs(np.where(inf_mask, 1.0, pts)), 1.0)
    u0 = np.where(inf_mask, 1.0, pts / m)
    u1 = np.where(inf_mask, 0.0, 1.0 / m)
    return u0, u1


def apply_array(g: MoebiusMap, points: np.ndarray) -> np.ndarray:
    """g·x for an array of points of R∞; poles map to +INF."""
    u0, u1 = homogeneous_array(points)
    num = g.a * u0 + g.b * u1
    den = g.c * u0 + g.d * u1
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    out = np.where(np.isfinite(out), out, INF)
    return out


def cocycle_array(g: MoebiusMap, points: np.ndarray) -> np.ndarray:
    """Vectorized cocycle f(g; x)."""
    u0, u1 = homogeneous_array(points)
    v0 = g.a * u0 + g.b * u1
    v1 = g.c * u0 + g.d * u1
    return (u0 * u0 + u1 * u1) / (v0 * v0 + v1 * v1)

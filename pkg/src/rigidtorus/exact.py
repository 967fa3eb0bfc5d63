"""Exact and certified arithmetic on the circle T = R/Z.

Rationals are :class:`fractions.Fraction` (always in lowest terms).  Points of
the circle are represented by their unique representative in ``[0, 1)``;
arcs are left-open, right-closed: ``(start, start + length]`` taken mod 1.

Irrational angles are evaluated to fixed binary precision with an explicit
error radius (:class:`FixedReal`), so that decisions such as
``0 < k*alpha mod 1 < 1/8`` are certified rather than rounded.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

__all__ = [
    "TorusPoint",
    "Arc",
    "RationalAngle",
    "QuadraticAngle",
    "DecimalAngle",
    "AngleSpec",
    "FixedReal",
    "Decision",
    "PrecisionExhausted",
    "AngleSpecError",
    "reduce_mod1",
    "times_n",
    "circle_distance",
    "ball",
    "dilate_arc",
    "preimage_arcs",
    "parse_angle",
    "format_angle",
    "eval_angle",
    "frac_threshold_test",
    "classify_frac",
    "START_BITS",
    "PRECISION_CAP",
]

START_BITS = 64
PRECISION_CAP = 4096

RationalLike = Union[int, Fraction, str]


class PrecisionExhausted(ArithmeticError):
    """The requested precision exceeds what an angle specification carries."""


class AngleSpecError(ValueError):
    pass


def _frac(r: RationalLike) -> Fraction:
    return r if isinstance(r, Fraction) else Fraction(r)


@dataclass(frozen=True, order=True)
class TorusPoint:
    """A rational point of the circle, stored as its representative in [0, 1)."""

    value: Fraction

    def __post_init__(self):
        v = _frac(self.value)
        if not 0 <= v < 1:
            raise ValueError(f"torus point representative must lie in [0, 1), got {v}")
        object.__setattr__(self, "value", v)

    @classmethod
    def of(cls, r: RationalLike | "TorusPoint") -> "TorusPoint":
        if isinstance(r, TorusPoint):
            return r
        return reduce_mod1(_frac(r))

    def __str__(self):
        return str(self.value)


def reduce_mod1(r: RationalLike | TorusPoint) -> TorusPoint:
    if isinstance(r, TorusPoint):
        return r
    r = _frac(r)
    return TorusPoint(r - math.floor(r))


def times_n(x: TorusPoint | RationalLike, n: int) -> TorusPoint:
    """The map T_n(x) = n*x mod 1."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    x = TorusPoint.of(x)
    return reduce_mod1(n * x.value)


def circle_distance(x: TorusPoint | RationalLike, y: TorusPoint | RationalLike) -> Fraction:
    d = abs(TorusPoint.of(x).value - TorusPoint.of(y).value)
    return min(d, 1 - d)


@dataclass(frozen=True)
class Arc:
    """Half-open arc ``(start, start + length]`` on the circle.

    ``length == 1`` is the full circle.  ``start`` is kept in [0, 1); the arc
    wraps through 0 when ``start + length > 1``.
    """

    start: Fraction
    length: Fraction

    def __post_init__(self):
        s = _frac(self.start)
        s = s - math.floor(s)
        length = _frac(self.length)
        if not 0 < length <= 1:
            raise ValueError(f"arc length must lie in (0, 1], got {length}")
        object.__setattr__(self, "start", s)
        object.__setattr__(self, "length", length)

    @property
    def end(self) -> Fraction:
        """Right endpoint as a real number; may exceed 1 for wrapping arcs."""
        return self.start + self.length

    @property
    def is_full(self) -> bool:
        return self.length == 1

    def contains(self, x: TorusPoint | RationalLike) -> bool:
        d = (TorusPoint.of(x).value - self.start) % 1
        if d == 0:
            return self.is_full
        return d <= self.length

    def pieces(self) -> list[tuple[Fraction, Fraction]]:
        """Split into non-wrapping pieces ``(lo, hi]`` with ``0 <= lo < hi <= 1``.

        The circle point 0 is represented by 1 here, so every piece is a
        subset of (0, 1].
        """
        if self.is_full:
            return [(Fraction(0), Fraction(1))]
        end = self.end
        if end <= 1:
            return [(self.start, end)]
        return [(self.start, Fraction(1)), (Fraction(0), end - 1)]

    def intersects(self, other: "Arc") -> bool:
        for a, b in self.pieces():
            for c, d in other.pieces():
                if max(a, c) < min(b, d):
                    return True
        return False

    def intersection_point(self, other: "Arc") -> TorusPoint | None:
        """Some point common to both arcs (the right end of the overlap), or None."""
        for a, b in self.pieces():
            for c, d in other.pieces():
                if max(a, c) < min(b, d):
                    return reduce_mod1(min(b, d))
        return None

    def __str__(self):
        return f"({self.start}, {self.end}]"


def ball(x: TorusPoint | RationalLike, radius: RationalLike) -> Arc:
    """B_radius(x) as the arc (x - radius, x + radius], saturating at the full circle."""
    radius = _frac(radius)
    if radius <= 0:
        raise ValueError("radius must be positive")
    if 2 * radius >= 1:
        return Arc(Fraction(0), Fraction(1))
    x = TorusPoint.of(x)
    return Arc(x.value - radius, 2 * radius)


def dilate_arc(a: Arc, q: int) -> Arc:
    """Image of an arc under T_q; saturates to the full circle once q*length >= 1."""
    if q < 1:
        raise ValueError("q must be a positive integer")
    length = q * a.length
    if length >= 1:
        return Arc(Fraction(0), Fraction(1))
    return Arc(times_n(a.start, q).value, length)


def preimage_arcs(a: Arc, q: int) -> list[Arc]:
    """T_q^{-1}(a) as q disjoint arcs of length a.length / q."""
    if q < 1:
        raise ValueError("q must be a positive integer")
    if a.is_full:
        raise ValueError("preimage of the full circle is not split into arcs")
    return [Arc((a.start + j) / q, a.length / q) for j in range(q)]


# ---------------------------------------------------------------------------
# Angle specifications


@dataclass(frozen=True)
class RationalAngle:
    value: Fraction

    def __str__(self):
        return f"rational:{self.value.numerator}/{self.value.denominator}"


@dataclass(frozen=True)
class QuadraticAngle:
    """(a + b*sqrt(d)) / c with d > 1 squarefree, b != 0, c > 0, gcd(a, b, c) = 1."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        a, b, c, d = self.a, self.b, self.c, self.d
        if c == 0:
            raise AngleSpecError("quadratic angle needs c != 0")
        if b == 0:
            raise AngleSpecError("quadratic angle needs b != 0 (use rational:)")
        if d < 2:
            raise AngleSpecError("quadratic angle needs d >= 2")
        # pull square factors out of d
        s = 1
        f = 2
        while f * f <= d:
            while d % (f * f) == 0:
                d //= f * f
                s *= f
            f += 1
        if d == 1:
            raise AngleSpecError("quadratic angle needs non-square d")
        b *= s
        if c < 0:
            a, b, c = -a, -b, -c
        g = math.gcd(math.gcd(a, b), c)
        object.__setattr__(self, "a", a // g)
        object.__setattr__(self, "b", b // g)
        object.__setattr__(self, "c", c // g)
        object.__setattr__(self, "d", d)

    def __str__(self):
        return f"quadratic:({self.a}{self.b:+d}*sqrt({self.d}))/{self.c}"


@dataclass(frozen=True)
class DecimalAngle:
    """A decimal truncation of a real angle; good to +-10**-digits."""

    text: str

    def __post_init__(self):
        if not re.fullmatch(r"-?\d+\.\d+", self.text):
            raise AngleSpecError(f"decimal angle must look like 0.ddd, got {self.text!r}")

    @property
    def digits(self) -> int:
        return len(self.text.split(".")[1])

    @property
    def value(self) -> Fraction:
        return Fraction(self.text)

    def __str__(self):
        return f"decimal:{self.text}"


AngleSpec = Union[RationalAngle, QuadraticAngle, DecimalAngle]

_QUAD_RE = re.compile(
    r"\(\s*([+-]?\d+)\s*([+-])\s*(\d+)\s*\*\s*sqrt\(\s*(\d+)\s*\)\s*\)\s*/\s*([+-]?\d+)"
)


def parse_angle(text: str) -> AngleSpec:
    """Parse ``rational:p/q``, ``quadratic:(a+b*sqrt(d))/c`` or ``decimal:0.ddd``."""
    kind, sep, body = text.strip().partition(":")
    if not sep:
        raise AngleSpecError(f"angle spec {text!r} lacks a 'kind:' prefix")
    body = body.replace(" ", "")
    if kind == "rational":
        if not re.fullmatch(r"[+-]?\d+(/\d+)?", body):
            raise AngleSpecError(f"rational angle must be p/q, got {body!r}")
        try:
            return RationalAngle(Fraction(body))
        except ZeroDivisionError:
            raise AngleSpecError(f"zero denominator in {body!r}") from None
    if kind == "quadratic":
        m = _QUAD_RE.fullmatch(body)
        if not m:
            raise AngleSpecError(f"quadratic angle must be (a+b*sqrt(d))/c, got {body!r}")
        a, sign, b, d, c = m.groups()
        b = int(b) if sign == "+" else -int(b)
        return QuadraticAngle(int(a), b, int(c), int(d))
    if kind == "decimal":
        return DecimalAngle(body)
    raise AngleSpecError(f"unknown angle kind {kind!r} (rational|quadratic|decimal)")


def format_angle(spec: AngleSpec) -> str:
    return str(spec)


# ---------------------------------------------------------------------------
# Certified fixed-point reals


@dataclass(frozen=True)
class FixedReal:
    """``mantissa / 2**scale`` with ``|represented - true| <= error``."""

    mantissa: int
    scale: int
    error: Fraction

    @property
    def value(self) -> Fraction:
        return Fraction(self.mantissa, 1 << self.scale)

    @property
    def lower(self) -> Fraction:
        return self.value - self.error

    @property
    def upper(self) -> Fraction:
        return self.value + self.error

    @property
    def error_units(self) -> int:
        """Error radius in units of 2**-scale, rounded up."""
        return math.ceil(self.error * (1 << self.scale))

    def times(self, k: int) -> "FixedReal":
        return FixedReal(k * self.mantissa, self.scale, abs(k) * self.error)

    def mod1(self) -> "FixedReal":
        return FixedReal(self.mantissa % (1 << self.scale), self.scale, self.error)

    def __float__(self):
        return self.mantissa / (1 << self.scale) if self.scale < 1000 else float(self.value)


def _isqrt_floor_signed(b: int, d: int, scale: int) -> int:
    """floor-ish of b*sqrt(d)*2**scale with error < 1."""
    r = math.isqrt(b * b * d << (2 * scale))
    return r if b > 0 else -r


def eval_angle(spec: AngleSpec, bits: int) -> FixedReal:
    """Evaluate an angle to ``bits`` fractional bits with error <= 2**(1 - bits)."""
    if bits < 16:
        raise ValueError("bits must be >= 16")
    if isinstance(spec, RationalAngle):
        num = spec.value.numerator << bits
        m, rem = divmod(num, spec.value.denominator)
        return FixedReal(m, bits, Fraction(0) if rem == 0 else Fraction(1, 1 << bits))
    if isinstance(spec, QuadraticAngle):
        num = (spec.a << bits) + _isqrt_floor_signed(spec.b, spec.d, bits)
        return FixedReal(num // spec.c, bits, Fraction(2, 1 << bits))
    if isinstance(spec, DecimalAngle):
        # 2**-e >= 10**-digits, dyadic
        e = (10 ** spec.digits).bit_length() - 1
        if e < bits:
            raise PrecisionExhausted(
                f"decimal angle {spec.text} carries {spec.digits} digits, "
                f"not enough for {bits} bits"
            )
        v = spec.value
        m, rem = divmod(v.numerator << bits, v.denominator)
        err = Fraction(1, 1 << e) + (Fraction(1, 1 << bits) if rem else 0)
        return FixedReal(m, bits, err)
    raise TypeError(f"not an angle spec: {spec!r}")


class Decision(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    UNDECIDABLE = "undecidable"


def classify_frac(low: int, high: int, scale: int, lo: Fraction, hi: Fraction) -> Decision:
    """Decide whether frac(y) lies in the open interval (lo, hi), given
    ``low <= y * 2**scale <= high`` with integers ``low <= high``.

    Returns UNDECIDABLE when the enclosure straddles a boundary.
    """
    unit = 1 << scale
    if high - low >= unit:
        return Decision.UNDECIDABLE
    shift = (low // unit) * unit
    low -= shift
    high -= shift
    # compare integer u against unit*f as u*f.den vs f.num*unit
    lo_n, lo_d = lo.numerator * unit, lo.denominator
    hi_n, hi_d = hi.numerator * unit, hi.denominator
    if high < unit:
        if low * lo_d > lo_n and high * hi_d < hi_n:
            return Decision.INSIDE
        if high * lo_d <= lo_n or low * hi_d >= hi_n:
            return Decision.OUTSIDE
        return Decision.UNDECIDABLE
    # enclosure contains an integer: frac(y) in [low, unit) u [0, high - unit]
    if low * hi_d >= hi_n and (high - unit) * lo_d <= lo_n:
        return Decision.OUTSIDE
    return Decision.UNDECIDABLE


def frac_threshold_test(
    k: int,
    spec: AngleSpec,
    lo: RationalLike,
    hi: RationalLike,
    cap: int = PRECISION_CAP,
) -> Decision:
    """Certified test of ``k*alpha mod 1 in (lo, hi)`` with precision doubling."""
    lo, hi = _frac(lo), _frac(hi)
    if not 0 <= lo < hi <= 1:
        raise ValueError("need 0 <= lo < hi <= 1")
    if isinstance(spec, RationalAngle):
        f = reduce_mod1(k * spec.value).value
        return Decision.INSIDE if lo < f < hi else Decision.OUTSIDE
    bits = START_BITS
    while bits <= cap:
        try:
            r = eval_angle(spec, bits + k.bit_length()).times(k)
        except PrecisionExhausted:
            return Decision.UNDECIDABLE
        e = r.error_units
        verdict = classify_frac(r.mantissa - e, r.mantissa + e, r.scale, lo, hi)
        if verdict is not Decision.UNDECIDABLE:
            return verdict
        bits *= 2
    return Decision.UNDECIDABLE

"""Weyl sums and star discrepancy for orbits {sigma * alpha mod 1}.

Trigonometric values are enclosed with mpmath interval arithmetic, so every
reported sum carries a rigorous error radius.
"""

from __future__ import annotations

import contextlib
import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from mpmath import iv

from .exact import (
    AngleSpec,
    FixedReal,
    RationalAngle,
    TorusPoint,
    eval_angle,
    reduce_mod1,
)
from .semigroup import elements_up_to

WORKING_PREC = 128

OrbitPoint = Union[TorusPoint, FixedReal]


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    @classmethod
    def from_iv(cls, v) -> "Interval":
        a, b = v._mpi_
        return cls(_mpf_to_fraction(a), _mpf_to_fraction(b))

    @property
    def value(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def radius(self) -> Fraction:
        return (self.hi - self.lo) / 2

    def __contains__(self, r) -> bool:
        return self.lo <= Fraction(r) <= self.hi

    def __float__(self):
        return float(self.value)


def _mpf_to_fraction(raw) -> Fraction:
    """Exact value of a raw mpf tuple (sign, man, exp, bc)."""
    sign, man, exp, _ = raw
    if not man and exp:
        raise ArithmeticError("unbounded interval endpoint")
    v = Fraction(int(man)) * Fraction(2) ** exp
    return -v if sign else v


@dataclass(frozen=True)
class ComplexValue:
    re: Interval
    im: Interval

    @property
    def abs_upper(self) -> float:
        r = max(abs(self.re.lo), abs(self.re.hi))
        i = max(abs(self.im.lo), abs(self.im.hi))
        return math.hypot(float(r), float(i)) * (1 + 1e-15)


def _enclose(p) -> "iv.mpf":
    if isinstance(p, FixedReal):
        lo, hi = p.lower, p.upper
    else:
        v = p.value if isinstance(p, TorusPoint) else Fraction(p)
        lo = hi = v
    a = iv.mpf(lo.numerator) / lo.denominator
    if hi == lo:
        return a
    b = iv.mpf(hi.numerator) / hi.denominator
    return iv.mpf([a.a, b.b])


@contextlib.contextmanager
def _iv_precision(bits: int):
    saved = iv.prec
    iv.prec = bits
    try:
        yield
    finally:
        iv.prec = saved


def weyl_sum(points: Sequence[OrbitPoint], h: int = 1, prec: int = WORKING_PREC) -> ComplexValue:
    """(1/N) * sum exp(2 pi i h x_j), enclosed in rigorous intervals."""
    if not points:
        raise ValueError("need at least one point")
    if h == 0:
        raise ValueError("harmonic must be nonzero")
    with _iv_precision(prec):
        turn = 2 * iv.pi * h
        re = iv.mpf(0)
        im = iv.mpf(0)
        for p in points:
            t = turn * _enclose(p)
            re += iv.cos(t)
            im += iv.sin(t)
        n = len(points)
        return ComplexValue(Interval.from_iv(re / n), Interval.from_iv(im / n))


def orbit_points(source, alpha: AngleSpec, N: int, explicit: bool = False) -> list[OrbitPoint]:
    """{sigma * alpha mod 1 : sigma in S ∩ [1, N]}.

    ``source`` is a generator list (``explicit=False``) or an explicit set of
    integers.  Irrational angles give FixedReal points with error <= 2**-64.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    sigmas = sorted(s for s in set(source) if 1 <= s <= N) if explicit else list(elements_up_to(source, N))
    if isinstance(alpha, RationalAngle):
        return [reduce_mod1(s * alpha.value) for s in sigmas]
    bits = 66 + N.bit_length()
    a = eval_angle(alpha, bits)
    return [a.times(s).mod1() for s in sigmas]


@dataclass(frozen=True)
class DiscrepancyReport:
    N: int
    d_star: Fraction  # upper end of the certified enclosure
    radius: Fraction  # widening due to point error radii

    @property
    def normalized(self) -> float | None:
        if self.N < 2:
            return None
        return float(self.d_star) * self.N / math.log(self.N)


def _center(p) -> tuple[Fraction, Fraction]:
    if isinstance(p, FixedReal):
        return p.mod1().value, p.error
    v = p.value if isinstance(p, TorusPoint) else reduce_mod1(p).value
    return v, Fraction(0)


def star_discrepancy(points: Iterable[OrbitPoint]) -> DiscrepancyReport:
    """D*_N = max_i max(i/N - x_(i), x_(i) - (i-1)/N) over the sorted points.

    Moving each point by at most r moves D* by at most r, so point radii
    widen the result by their maximum.
    """
    centered = [_center(p) for p in points]
    if not centered:
        raise ValueError("need at least one point")
    xs = sorted(v for v, _ in centered)
    widen = max(r for _, r in centered)
    n = len(xs)
    d = max(max(Fraction(i + 1, n) - v, v - Fraction(i, n)) for i, v in enumerate(xs))
    return DiscrepancyReport(n, min(d + widen, Fraction(1)), widen)


def weyl_checkpoints(
    sigmas: Sequence[int], points: Sequence[OrbitPoint], checkpoints: Iterable[int], h: int = 1
) -> list[tuple[int, float, float]]:
    """(N, |S_N|, Re S_N) for the normalized Weyl sum over sigma <= N.

    Uncertified floating summary for plotting; certified values come from
    :func:`weyl_sum`.
    """
    pairs = sorted(zip(sigmas, points), key=lambda t: t[0])
    out = []
    re = im = 0.0
    i = 0
    for N in sorted(checkpoints):
        while i < len(pairs) and pairs[i][0] <= N:
            x = float(_center(pairs[i][1])[0])
            re += math.cos(2 * math.pi * h * x)
            im += math.sin(2 * math.pi * h * x)
            i += 1
        if i:
            out.append((N, math.hypot(re, im) / i, re / i))
    return out


def checkpoints_csv(rows: Iterable[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "abs_S", "re_S"])
    for row in rows:
        w.writerow(row)
    return buf.getvalue()

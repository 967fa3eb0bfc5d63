"""Exact-query probability measures on the circle.

Three model families are supported, each answering arc-mass queries in exact
rationals: Lebesgue measure, finite atomic measures, and digit-Bernoulli
measures (i.i.d. base-p digits, e.g. the Cantor measure).
"""

from __future__ import annotations

import bisect
import itertools
import math
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .exact import Arc, TorusPoint, preimage_arcs, reduce_mod1

__all__ = [
    "Lebesgue",
    "Atomic",
    "DigitBernoulli",
    "MeasureModel",
    "InvarianceError",
    "UnsupportedCombination",
    "MeasureSpecError",
    "cantor",
    "cdf_at",
    "arc_mass",
    "point_mass",
    "sample_point",
    "cell_address",
    "check_invariance",
    "InvarianceReport",
    "canonical_arcs",
    "analytic_entropy",
    "parse_measure",
    "format_measure",
]


class InvarianceError(ValueError):
    def __init__(self, message: str, arc: Arc | None = None, q: int | None = None):
        super().__init__(message)
        self.arc = arc
        self.q = q


class UnsupportedCombination(ValueError):
    pass


class MeasureSpecError(ValueError):
    pass


@dataclass(frozen=True)
class Lebesgue:
    def __str__(self):
        return "lebesgue"


@dataclass(frozen=True)
class Atomic:
    """Finite atomic measure; ``atoms`` is a tuple of (point, mass) sorted by point."""

    atoms: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        merged: dict[Fraction, Fraction] = {}
        for x, m in self.atoms:
            x = reduce_mod1(x).value
            m = Fraction(m)
            if m < 0:
                raise ValueError("atom masses must be nonnegative")
            if x in merged:
                raise ValueError(f"duplicate atom at {x}")
            merged[x] = m
        if sum(merged.values()) != 1:
            raise ValueError("atom masses must sum to exactly 1")
        object.__setattr__(self, "atoms", tuple(sorted(merged.items())))

    @classmethod
    def uniform(cls, points: Iterable) -> "Atomic":
        pts = [reduce_mod1(p).value for p in points]
        return cls(tuple((p, Fraction(1, len(pts))) for p in pts))

    @property
    def support(self) -> list[Fraction]:
        return [x for x, m in self.atoms if m > 0]

    def __str__(self):
        return "atomic:[" + ",".join(f"{x}={m}" for x, m in self.atoms) + "]"


@dataclass(frozen=True)
class DigitBernoulli:
    """Law of sum d_i p**-i with i.i.d. digits d_i distributed as ``probs``."""

    base: int
    probs: tuple[Fraction, ...]

    def __post_init__(self):
        probs = tuple(Fraction(q) for q in self.probs)
        if self.base < 2:
            raise ValueError("base must be >= 2")
        if len(probs) != self.base:
            raise ValueError("need one probability per digit")
        if any(q < 0 for q in probs) or sum(probs) != 1:
            raise ValueError("digit probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "probs", probs)

    @property
    def is_uniform(self) -> bool:
        return all(q == self.probs[0] for q in self.probs)

    def __str__(self):
        return f"bernoulli:base={self.base},probs=" + ",".join(str(q) for q in self.probs)


MeasureModel = Union[Lebesgue, Atomic, DigitBernoulli]


def cantor() -> DigitBernoulli:
    return DigitBernoulli(3, (Fraction(1, 2), Fraction(0), Fraction(1, 2)))


# ---------------------------------------------------------------------------
# digit expansions


def _expansion(t: Fraction, p: int) -> tuple[list[int], list[int]]:
    """Greedy base-p digits of t in [0, 1) as (prefix, period)."""
    num, den = t.numerator, t.denominator
    seen: dict[int, int] = {}
    digits: list[int] = []
    r = num
    while r not in seen:
        seen[r] = len(digits)
        d, r = divmod(r * p, den)
        digits.append(d)
    start = seen[r]
    return digits[:start], digits[start:]


def _address_prob(prefix: Sequence[int], period: Sequence[int], probs) -> Fraction:
    """Probability that the digit sequence equals prefix + period repeated."""
    per = math.prod(probs[d] for d in period)
    if per != 1:
        return Fraction(0)
    return math.prod((probs[d] for d in prefix), start=Fraction(1))


def _lex_below(prefix, period, probs) -> Fraction:
    """P(digit sequence is lexicographically below the given sequence)."""
    below = [Fraction(0)]
    for q in probs:
        below.append(below[-1] + q)

    def run(digits):
        acc, w = Fraction(0), Fraction(1)
        for d in digits:
            acc += w * below[d]
            w *= probs[d]
        return acc, w

    a, w = run(prefix)
    b, v = run(period)
    if v == 1:
        return a  # every period digit has probability 1, so below[d] == 0 along it
    return a + w * b / (1 - v)


def _digit_point_mass(mu: DigitBernoulli, t: Fraction) -> Fraction:
    """P(X = t) for the real-valued X = sum d_i p**-i, t in [0, 1]."""
    p, probs = mu.base, mu.probs
    if t == 1:
        return _address_prob([], [p - 1], probs)
    prefix, period = _expansion(t, p)
    mass = _address_prob(prefix, period, probs)
    if period == [0] and t > 0:
        # terminating expansion also has a ...(p-1)(p-1)... twin
        last = max(i for i, d in enumerate(prefix) if d)
        alt = prefix[:last] + [prefix[last] - 1]
        mass += _address_prob(alt, [p - 1], probs)
    return mass


def _digit_cdf(mu: DigitBernoulli, t: Fraction) -> Fraction:
    """P(0 < X <= t) for t in [0, 1)."""
    prefix, period = _expansion(t, mu.base)
    below_or_equal = _lex_below(prefix, period, mu.probs) + _address_prob(prefix, period, mu.probs)
    # lexicographic order agrees with real order up to the twin address of t,
    # which lies lexicographically below and is already counted
    return below_or_equal - _digit_point_mass(mu, Fraction(0))


def cdf_at(mu: MeasureModel, t) -> Fraction:
    """mu((0, t]) for t in [0, 1]."""
    t = Fraction(t)
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    if t == 0:
        return Fraction(0)
    if t == 1:
        return Fraction(1)
    if isinstance(mu, Lebesgue):
        return t
    if isinstance(mu, Atomic):
        return sum((m for x, m in mu.atoms if 0 < x <= t), Fraction(0))
    if isinstance(mu, DigitBernoulli):
        return _digit_cdf(mu, t)
    raise TypeError(f"not a measure model: {mu!r}")


def _padic_cell_index(a: Arc, p: int) -> tuple[int, int] | None:
    """(index, depth) when the arc is exactly a base-p cell (k/p^n, (k+1)/p^n]."""
    inv = a.length.denominator
    if a.length.numerator != 1:
        return None
    n, q = 0, 1
    while q < inv:
        q *= p
        n += 1
    if q != inv or n == 0:
        return None
    k = a.start * q
    if k.denominator != 1:
        return None
    return int(k), n


def _cell_mass(mu: DigitBernoulli, k: int, n: int) -> Fraction:
    p = mu.base
    digits = []
    for _ in range(n):
        k, d = divmod(k, p)
        digits.append(d)
    num = den = 1
    for d in digits:
        num *= mu.probs[d].numerator
        den *= mu.probs[d].denominator
    return Fraction(num, den)


def arc_mass(mu: MeasureModel, a: Arc) -> Fraction:
    """Exact mu-mass of the half-open arc a."""
    if a.is_full:
        return Fraction(1)
    if isinstance(mu, Lebesgue):
        return a.length
    if isinstance(mu, Atomic):
        return sum((m for x, m in mu.atoms if a.contains(x)), Fraction(0))
    if isinstance(mu, DigitBernoulli) and max(mu.probs) < 1:
        # no atoms, so cell boundaries carry no mass
        cell = _padic_cell_index(a, mu.base)
        if cell is not None:
            return _cell_mass(mu, *cell)
    total = Fraction(0)
    for lo, hi in a.pieces():
        total += cdf_at(mu, hi) - cdf_at(mu, lo)
    return total


def point_mass(mu: MeasureModel, x) -> Fraction:
    x = reduce_mod1(x).value
    if isinstance(mu, Lebesgue):
        return Fraction(0)
    if isinstance(mu, Atomic):
        return dict(mu.atoms).get(x, Fraction(0))
    if x == 0:
        return _digit_point_mass(mu, Fraction(0)) + _digit_point_mass(mu, Fraction(1))
    return _digit_point_mass(mu, x)


# ---------------------------------------------------------------------------
# sampling


class _Categorical:
    """Exact sampler for a finite distribution with rational weights."""

    def __init__(self, weights: Sequence[Fraction]):
        self.den = math.lcm(*(w.denominator for w in weights))
        self.cum = list(itertools.accumulate(w.numerator * (self.den // w.denominator) for w in weights))

    def draw(self, rng: random.Random) -> int:
        return bisect.bisect_right(self.cum, rng.randrange(self.den))


def sample_point(mu: MeasureModel, seed, depth: int, base: int = 2) -> TorusPoint:
    """Draw a point of mu deterministically from ``seed``.

    Atomic measures return an exact atom.  For digit measures ``depth`` digits
    are drawn and the point is placed at the right end of the drawn depth
    cell, so that under the left-open cell convention its address is exactly
    the drawn digits.  ``base`` selects the digit base for Lebesgue measure.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    rng = random.Random(seed)
    if isinstance(mu, Atomic):
        return TorusPoint(mu.atoms[_Categorical([m for _, m in mu.atoms]).draw(rng)][0])
    if isinstance(mu, Lebesgue):
        p = base
        k = rng.randrange(p ** depth)
        return reduce_mod1(Fraction(k + 1, p ** depth))
    if isinstance(mu, DigitBernoulli):
        p = mu.base
        digits = _Categorical(mu.probs)
        k = 0
        for _ in range(depth):
            k = k * p + digits.draw(rng)
        return reduce_mod1(Fraction(k + 1, p ** depth))
    raise TypeError(f"not a measure model: {mu!r}")


def cell_address(x, p: int, depth: int) -> list[int]:
    """Base-p digits of the depth-``depth`` cell (k/p^n, (k+1)/p^n] containing x."""
    v = reduce_mod1(x).value
    q = p ** depth
    k = math.ceil(v * q) - 1
    if k < 0:
        k = q - 1  # 0 is identified with 1
    digits = []
    for _ in range(depth):
        k, d = divmod(k, p)
        digits.append(d)
    return digits[::-1]


# ---------------------------------------------------------------------------
# invariance and entropy


@dataclass(frozen=True)
class InvarianceRow:
    arc: Arc
    mass: Fraction
    preimage_mass: Fraction

    @property
    def discrepancy(self) -> Fraction:
        return self.preimage_mass - self.mass


@dataclass(frozen=True)
class InvarianceReport:
    q: int
    rows: tuple[InvarianceRow, ...]

    @property
    def invariant(self) -> bool:
        return all(r.discrepancy == 0 for r in self.rows)

    @property
    def first_violation(self) -> InvarianceRow | None:
        return next((r for r in self.rows if r.discrepancy != 0), None)


def check_invariance(mu: MeasureModel, q: int, arcs: Iterable[Arc]) -> InvarianceReport:
    """Compare mu(A) with mu(T_q^{-1} A) for each test arc."""
    if q < 1:
        raise ValueError("q must be a positive integer")
    rows = []
    for a in arcs:
        m = arc_mass(mu, a)
        if a.is_full:
            pm = Fraction(1)
        else:
            pm = sum((arc_mass(mu, b) for b in preimage_arcs(a, q)), Fraction(0))
        rows.append(InvarianceRow(a, m, pm))
    return InvarianceReport(q, tuple(rows))


def canonical_arcs() -> list[Arc]:
    """Fixed family of test arcs used to screen invariance."""
    arcs = []
    for m in (2, 3, 4, 5, 7, 8, 9, 27):
        arcs += [Arc(Fraction(i, m), Fraction(1, m)) for i in range(m)]
    arcs += [Arc(Fraction(j, 7), Fraction(1, 3)) for j in range(7)]
    arcs += [Arc(Fraction(1, 10), Fraction(1, 5)), Arc(Fraction(5, 6), Fraction(1, 4))]
    return arcs


def _require_invariant(mu: MeasureModel, p: int) -> None:
    rep = check_invariance(mu, p, canonical_arcs())
    bad = rep.first_violation
    if bad is not None:
        raise InvarianceError(
            f"{mu} is not T_{p}-invariant: mu{bad.arc} = {bad.mass} but "
            f"mu(T_{p}^-1{bad.arc}) = {bad.preimage_mass}",
            arc=bad.arc,
            q=p,
        )


def _shannon(probs: Iterable[Fraction]) -> float:
    return -sum(float(q) * math.log(q) for q in probs if q > 0)


def analytic_entropy(mu: MeasureModel, p: int) -> float:
    """Measure-theoretic entropy h_mu(T_p), natural log."""
    if p < 1:
        raise ValueError("p must be a positive integer")
    _require_invariant(mu, p)
    if p == 1 or isinstance(mu, Atomic):
        return 0.0
    if isinstance(mu, Lebesgue) or mu.is_uniform:
        return math.log(p)
    # T_p = T_base^j acts on digits as a j-fold shift
    j, q = 0, 1
    while q < p:
        q *= mu.base
        j += 1
    if q != p:
        raise UnsupportedCombination(
            f"entropy of a base-{mu.base} digit measure under T_{p} is not supported"
        )
    return j * _shannon(mu.probs)


# ---------------------------------------------------------------------------
# text grammar


def parse_measure(text: str) -> MeasureModel:
    """Parse ``lebesgue``, ``atomic:[p/q=m,...]`` or ``bernoulli:base=3,probs=1/2,0,1/2``."""
    text = text.strip().replace(" ", "")
    if text == "lebesgue":
        return Lebesgue()
    if text == "cantor":
        return cantor()
    try:
        if text.startswith("atomic:"):
            m = re.fullmatch(r"atomic:\[(.*)\]", text)
            if not m or not m.group(1):
                raise MeasureSpecError("atomic measure must be atomic:[x=m,...]")
            atoms = []
            for item in m.group(1).split(","):
                x, eq, mass = item.partition("=")
                if not eq:
                    raise MeasureSpecError(f"atom {item!r} must be x=mass")
                atoms.append((Fraction(x), Fraction(mass)))
            return Atomic(tuple(atoms))
        if text.startswith("bernoulli:"):
            m = re.fullmatch(r"bernoulli:base=(\d+),probs=(.*)", text)
            if not m:
                raise MeasureSpecError("bernoulli measure must be bernoulli:base=p,probs=q0,...")
            return DigitBernoulli(int(m.group(1)), tuple(Fraction(q) for q in m.group(2).split(",")))
    except MeasureSpecError:
        raise
    except (ValueError, ZeroDivisionError) as exc:
        raise MeasureSpecError(f"bad measure spec {text!r}: {exc}") from None
    raise MeasureSpecError(
        f"unknown measure spec {text!r} (lebesgue | atomic:[x=m,...] | bernoulli:base=p,probs=...)"
    )


def format_measure(mu: MeasureModel) -> str:
    return str(mu)

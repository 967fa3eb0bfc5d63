"""p-adic partitions, the information function and entropy-rate estimates.

The depth-n refinement of the partition {((j-1)/p, j/p]} under T_p is the
family of cells (k/p^n, (k+1)/p^n].  The information of a point at depth n
is -log mu(cell containing x); divided by n it converges to the entropy of
T_p for mu-almost every x.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from .exact import Arc, TorusPoint, ball
from .measures import (
    MeasureModel,
    UnsupportedCombination,
    analytic_entropy,
    arc_mass,
    sample_point,
)

_LOG_PREC = 113


@dataclass(frozen=True)
class PadicCell:
    base: int
    depth: int
    index: int

    @property
    def arc(self) -> Arc:
        q = self.base ** self.depth
        return Arc(Fraction(self.index, q), Fraction(1, q))


def padic_cell(x, p: int, n: int) -> PadicCell:
    """The depth-n base-p cell (k/p^n, (k+1)/p^n] containing x (0 lies in the last cell)."""
    if p < 2 or n < 1:
        raise ValueError("need p >= 2 and n >= 1")
    q = p ** n
    v = TorusPoint.of(x).value
    k = math.ceil(v * q) - 1
    if k < 0:
        k = q - 1
    return PadicCell(p, n, k)


def neg_log(mass: Fraction, n: int = 1) -> float:
    """-log(mass) / n, rounded once from a high-precision evaluation."""
    if mass <= 0:
        return math.inf
    with mpmath.workprec(_LOG_PREC):
        return float((mpmath.log(mass.denominator) - mpmath.log(mass.numerator)) / n)


@dataclass(frozen=True)
class InformationSample:
    x: TorusPoint
    depth: int
    mass: Fraction
    value: float

    @property
    def infinite(self) -> bool:
        return self.mass == 0


def information_value(mu: MeasureModel, x, p: int, n: int) -> InformationSample:
    """(1/n) * I_mu(depth-n partition)(x); +inf (flagged) on a null cell."""
    x = TorusPoint.of(x)
    mass = arc_mass(mu, padic_cell(x, p, n).arc)
    value = neg_log(mass, n)
    return InformationSample(x, n, mass, value)


@dataclass(frozen=True)
class SMBEstimate:
    p: int
    depth: int
    samples: int
    mean: float
    stderr: float
    analytic: float | None
    values: tuple[float, ...] = field(repr=False, default=())

    @property
    def relative_error(self) -> float | None:
        if self.analytic is None or self.analytic == 0:
            return None
        return abs(self.mean - self.analytic) / self.analytic


class ModelBug(RuntimeError):
    """A point sampled from mu landed in a mu-null cell."""


def smb_estimate(mu: MeasureModel, p: int, n: int, sample_count: int, seed: int = 0) -> SMBEstimate:
    """Mean of the depth-n information over points sampled from mu."""
    if n < 1 or sample_count < 1:
        raise ValueError("need n >= 1 and sample_count >= 1")
    values = []
    for i in range(sample_count):
        x = sample_point(mu, repr((seed, "smb", i)), n, base=p)
        s = information_value(mu, x, p, n)
        if s.infinite:
            raise ModelBug(f"sampled point {x} lies in a null cell at depth {n}")
        values.append(s.value)
    mean = float(sum(map(Fraction, values)) / len(values))  # exact mean, one rounding
    stderr = statistics.stdev(values) / math.sqrt(len(values)) if len(values) > 1 else 0.0
    try:
        exact = analytic_entropy(mu, p)
    except (UnsupportedCombination, ValueError):
        exact = None
    return SMBEstimate(p, n, sample_count, mean, stderr, exact, tuple(values))


# ---------------------------------------------------------------------------
# zero-dimension scan


def _exceeds_power(mass: Fraction, delta: Fraction, beta: Fraction) -> bool:
    """mass > delta**beta, exactly, for rational beta = a/b > 0."""
    a, b = beta.numerator, beta.denominator
    return mass ** b > delta ** a


@dataclass(frozen=True)
class Lemma1Point:
    x: TorusPoint
    delta0: Fraction | None  # largest grid delta below which every grid value passes


@dataclass(frozen=True)
class Lemma1Failure:
    x: TorusPoint
    delta: Fraction
    mass: Fraction


@dataclass(frozen=True)
class Lemma1Report:
    """Outcome of checking mu(B_delta(x)) > delta**beta on a finite delta grid.

    ``delta0`` is the largest grid value such that more than a 1 - eps
    fraction of sampled points pass at every grid delta <= delta0.  Only the
    listed grid is examined; nothing is claimed between grid values.
    """

    beta: Fraction
    eps: Fraction
    grid: tuple[Fraction, ...]
    points: tuple[Lemma1Point, ...]
    failures: tuple[Lemma1Failure, ...]
    delta0: Fraction | None

    @property
    def pass_fraction(self) -> Fraction:
        ok = sum(1 for pt in self.points if pt.delta0 is not None)
        return Fraction(ok, len(self.points))

    @property
    def passes(self) -> bool:
        return self.pass_fraction > 1 - self.eps


def _sample_depth(mu: MeasureModel, smallest: Fraction) -> tuple[int, int]:
    base = getattr(mu, "base", 2)
    depth = 1
    while Fraction(1, base ** depth) > smallest / 1024:
        depth += 1
    return base, depth


def lemma1_scan(
    mu: MeasureModel,
    beta,
    eps,
    delta_grid: Sequence,
    sample_count: int,
    seed: int = 0,
    max_failures: int = 50,
) -> Lemma1Report:
    beta, eps = Fraction(beta), Fraction(eps)
    if beta <= 0 or not 0 < eps < 1:
        raise ValueError("need beta > 0 and 0 < eps < 1")
    grid = tuple(sorted((Fraction(d) for d in delta_grid), reverse=True))
    if not grid:
        raise ValueError("delta grid is empty")
    if not all(0 < d < Fraction(1, 2) for d in grid):
        raise ValueError("grid values must lie in (0, 1/2)")
    base, depth = _sample_depth(mu, grid[-1])
    points, failures = [], []
    for i in range(sample_count):
        x = sample_point(mu, repr((seed, "lemma1", i)), depth, base=base)
        delta0 = None
        # walk up from the smallest delta while the inequality keeps holding
        for d in reversed(grid):
            m = arc_mass(mu, ball(x, d))
            if not _exceeds_power(m, d, beta):
                if len(failures) < max_failures:
                    failures.append(Lemma1Failure(x, d, m))
                break
            delta0 = d
        points.append(Lemma1Point(x, delta0))
    common = None
    for d in grid:
        ok = sum(1 for pt in points if pt.delta0 is not None and pt.delta0 >= d)
        if Fraction(ok, len(points)) > 1 - eps:
            common = d
            break
    return Lemma1Report(beta, eps, grid, tuple(points), tuple(failures), common)


def geometric_grid(base: int, lo_exp: int, hi_exp: int) -> list[Fraction]:
    """base**-lo_exp, ..., base**-hi_exp (descending)."""
    return [Fraction(1, base ** e) for e in range(lo_exp, hi_exp + 1)]

"""Finitely generated multiplicative semigroups of the integers.

Sigma is the set of *nonempty* products of generators, so 1 is never a
member.  Counts are therefore one less than the monoid convention.
"""

from __future__ import annotations

import heapq
import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator

import sympy

GeneratorSet = tuple  # sorted tuple of distinct ints >= 2


def normalize_gens(gens: Iterable[int]) -> tuple[int, ...]:
    out = tuple(sorted(set(int(g) for g in gens)))
    if not out:
        raise ValueError("generator set must be nonempty")
    if out[0] < 2:
        raise ValueError("generators must be integers >= 2")
    return out


def parse_gens(text: str) -> tuple[int, ...]:
    try:
        return normalize_gens(int(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise ValueError(f"bad generator list {text!r}: {exc}") from None


class SemigroupStream:
    """Strictly increasing stream of Sigma ∩ [1, limit].

    A min-heap holds the pending products; popping v emits it and pushes
    v*g for every generator g <= limit / v.  A set of pending values
    suppresses duplicates, so memory tracks the frontier, not the limit.
    """

    def __init__(self, gens: Iterable[int], limit: int):
        if limit < 1:
            raise ValueError("limit must be >= 1")
        self.gens = normalize_gens(gens)
        self.limit = limit
        self.last: int | None = None
        self._heap = [g for g in self.gens if g <= limit]
        heapq.heapify(self._heap)
        self._pending = set(self._heap)

    def __iter__(self) -> Iterator[int]:
        return self

    def __next__(self) -> int:
        if not self._heap:
            raise StopIteration
        v = heapq.heappop(self._heap)
        self._pending.discard(v)
        bound = self.limit // v
        for g in self.gens:
            if g > bound:
                break
            w = v * g
            if w not in self._pending:
                self._pending.add(w)
                heapq.heappush(self._heap, w)
        self.last = v
        return v


def enumerate_up_to(gens: Iterable[int], limit: int) -> SemigroupStream:
    return SemigroupStream(gens, limit)


@lru_cache(maxsize=64)
def _elements_cached(gens: tuple[int, ...], limit: int) -> tuple[int, ...]:
    return tuple(SemigroupStream(gens, limit))


def elements_up_to(gens: Iterable[int], limit: int) -> tuple[int, ...]:
    """Materialized (and memoized) Sigma ∩ [1, limit]."""
    return _elements_cached(normalize_gens(gens), limit)


@lru_cache(maxsize=256)
def _exponent_vectors(gens: tuple[int, ...]) -> tuple[dict[int, int], ...]:
    return tuple(sympy.factorint(g) for g in gens)


@lru_cache(maxsize=256)
def _independent(gens: tuple[int, ...]) -> bool:
    """True when distinct exponent tuples give distinct products."""
    if len(gens) == 1:
        return True
    vecs = _exponent_vectors(gens)
    primes = sorted(set().union(*vecs))
    if len(primes) < len(gens):
        return False
    mat = sympy.Matrix([[v.get(p, 0) for p in primes] for v in vecs])
    return mat.rank() == len(gens)


def _count_tuples(gens: tuple[int, ...], bound: int) -> int:
    # number of exponent tuples (including the empty product) with product <= bound
    if bound < 1:
        return 0
    g = gens[0]
    if len(gens) == 1:
        return _ilog(bound, g) + 1
    total = 0
    rest = gens[1:]
    p = 1
    while p <= bound:
        total += _count_tuples(rest, bound // p)
        p *= g
    return total


def _ilog(n: int, b: int) -> int:
    """Largest e with b**e <= n, for n >= 1."""
    e, p = 0, b
    while p <= n:
        p *= b
        e += 1
    return e


def count_up_to(gens: Iterable[int], limit: int) -> int:
    """#(Sigma ∩ [1, limit])."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    gens = normalize_gens(gens)
    if len(gens) <= 8 and _independent(gens):
        return _count_tuples(gens, limit) - 1
    return sum(1 for _ in SemigroupStream(gens, limit))


@dataclass(frozen=True)
class DensityCheckpoint:
    N: int
    count: int
    density: Fraction
    log_density: float
    empty: bool = False


@dataclass(frozen=True)
class DensityReport:
    """Counts of Sigma ∩ [1, N] at checkpoints.

    ``density_exponent`` is an empirical least-squares slope of log count
    against log N over the later half of the checkpoints.  It estimates the
    growth exponent only; it is not a certified density constant.
    """

    gens: tuple[int, ...]
    checkpoints: list[DensityCheckpoint] = field(default_factory=list)
    density_exponent: float | None = None

    @property
    def lower_density(self) -> Fraction:
        return min(c.density for c in self.checkpoints)


def density_profile(gens: Iterable[int], checkpoints: Iterable[int]) -> DensityReport:
    gens = normalize_gens(gens)
    ns = [int(n) for n in checkpoints]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("checkpoints must be strictly ascending")
    rows = []
    for n in ns:
        c = count_up_to(gens, n)
        if c == 0 or n == 1:
            rows.append(DensityCheckpoint(n, c, Fraction(c, n), 0.0, empty=True))
        else:
            rows.append(DensityCheckpoint(n, c, Fraction(c, n), math.log(c) / math.log(n)))
    tail = [r for r in rows[len(rows) // 2:] if not r.empty]
    slope = None
    if len(tail) >= 2:
        xs = [math.log(r.N) for r in tail]
        ys = [math.log(r.count) for r in tail]
        slope = statistics.linear_regression(xs, ys).slope
    return DensityReport(gens, rows, slope)


@dataclass(frozen=True)
class LacunarityResult:
    lacunary: bool
    witness: int | None = None


def is_lacunary(gens: Iterable[int]) -> LacunarityResult:
    """Decide whether every generator is a power of one integer a >= 2.

    All exponent vectors must be multiples of one primitive vector u; the
    smallest witness is then prod p**u_p.
    """
    gens = normalize_gens(gens)
    vecs = _exponent_vectors(gens)
    primes = sorted(set().union(*vecs))
    base = None
    for v in vecs:
        row = [v.get(p, 0) for p in primes]
        g = math.gcd(*row)
        prim = tuple(e // g for e in row)
        if base is None:
            base = prim
        elif prim != base:
            return LacunarityResult(False)
    witness = math.prod(p ** e for p, e in zip(primes, base))
    return LacunarityResult(True, witness)


def contains(gens: Iterable[int], n: int) -> bool:
    """True iff n is a nonempty product of generators."""
    if n < 1:
        raise ValueError("n must be positive")
    gens = normalize_gens(gens)

    @lru_cache(maxsize=None)
    def reachable(m: int) -> bool:
        for g in gens:
            if g > m:
                break
            if m % g == 0:
                q = m // g
                if q == 1 or reachable(q):
                    return True
        return False

    return reachable(n)

"""Iterative construction of a multiplicative semigroup of positive lower
density whose orbit sigma*alpha mod 1 is not equidistributed.

Stage 1 takes every k in (N0, 2*N0] with k*alpha mod 1 in (0, 1/8).  Each
later stage doubles N' = N_k * 2**l until the current semigroup has at most
a 1/100 share of [1, 2N'], then adds the window hits in (N', 2N'] that
are not already in the semigroup.  Every stage is certified: the counting
estimate for the window at all n used, minimality of the doubling, a lower
bound on Re of the Weyl sum, the density at N_k, and Sigma ∩ [1, N_k] = B.
"""

from __future__ import annotations

import math
from array import array
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

from .equidist import WORKING_PREC, Interval, weyl_sum
from .exact import (
    AngleSpec,
    Decision,
    PrecisionExhausted,
    RationalAngle,
    classify_frac,
    eval_angle,
    frac_threshold_test,
    reduce_mod1,
    PRECISION_CAP,
)
from .semigroup import SemigroupStream, elements_up_to

WINDOW = (Fraction(0), Fraction(1, 8))
SLACK = Fraction(1, 1000)
STOP_FRACTION = Fraction(1, 100)
SEED_FRACTION = Fraction(1, 10)
DENSITY_FLOOR = Fraction(1, 200)


class ConstructionError(RuntimeError):
    pass


class PrecisionAbort(ConstructionError):
    def __init__(self, k: int):
        super().__init__(f"cannot certify the window test for k={k} within the precision cap")
        self.k = k


class Estimate2Violation(ConstructionError):
    def __init__(self, n: int, count: int):
        super().__init__(f"window-count estimate fails at n={n} (count {count})")
        self.n = n
        self.count = count


class InvariantViolation(ConstructionError):
    pass


class ResourceLimit(ConstructionError):
    pass


class NotFound(ConstructionError):
    pass


def bias_bound_holds(x: Fraction) -> bool:
    """x >= sqrt(2)/40 - 1/100, decided exactly."""
    y = (x + Fraction(1, 100)) * 40
    return y >= 0 and y * y >= 2


BIAS_BOUND = math.sqrt(2) / 40 - 1 / 100


@dataclass(frozen=True)
class NazarovConfig:
    alpha: AngleSpec
    window: tuple[Fraction, Fraction] = WINDOW
    slack: Fraction = SLACK
    stop_fraction: Fraction = STOP_FRACTION
    growth_factor: int = 2
    stages: int = 3
    precision: int = 256
    precision_cap: int = PRECISION_CAP
    n0_search_limit: int = 10 ** 5
    count_cap: int = 10 ** 9


# ---------------------------------------------------------------------------
# certified window scan


class WindowScan:
    """Certified membership of k*alpha mod 1 in the window, for k = 1..limit,
    with running counts.  Extends lazily."""

    def __init__(self, alpha: AngleSpec, window=WINDOW, precision: int = 256, cap: int = PRECISION_CAP):
        self.alpha = alpha
        self.lo, self.hi = Fraction(window[0]), Fraction(window[1])
        self.cap = cap
        self.limit = 0
        self.inside = bytearray(1)  # index 0 unused
        self.counts = array("q", [0])
        self._exact = isinstance(alpha, RationalAngle)
        if not self._exact:
            try:
                a = eval_angle(alpha, precision)
            except PrecisionExhausted:
                raise PrecisionAbort(1) from None
            self._unit = 1 << a.scale
            self._step = a.mantissa % self._unit
            self._err = a.error_units
            self._scale = a.scale
            self._acc = 0

    def extend(self, limit: int) -> None:
        k = self.limit
        if limit <= k:
            return
        lo, hi = self.lo, self.hi
        inside, counts = self.inside, self.counts
        c = counts[-1]
        if self._exact:
            v = self.alpha.value
            for k in range(k + 1, limit + 1):
                f = (k * v) % 1
                flag = lo < f < hi
                inside.append(flag)
                c += flag
                counts.append(c)
        else:
            unit, step, err, scale = self._unit, self._step, self._err, self._scale
            acc = self._acc
            for k in range(k + 1, limit + 1):
                acc = (acc + step) % unit
                e = k * err
                d = classify_frac(acc - e, acc + e, scale, lo, hi)
                if d is Decision.UNDECIDABLE:
                    d = frac_threshold_test(k, self.alpha, lo, hi, self.cap)
                    if d is Decision.UNDECIDABLE:
                        raise PrecisionAbort(k)
                flag = d is Decision.INSIDE
                inside.append(flag)
                c += flag
                counts.append(c)
            self._acc = acc
        self.limit = limit

    def count(self, n: int) -> int:
        self.extend(n)
        return self.counts[n]

    def is_inside(self, k: int) -> bool:
        self.extend(k)
        return bool(self.inside[k])


@dataclass(frozen=True)
class Estimate2:
    n: int
    count: int
    lower: Fraction
    upper: Fraction

    @property
    def holds(self) -> bool:
        return self.lower < self.count < self.upper


def _estimate2(scan: WindowScan, n: int, slack: Fraction = SLACK) -> Estimate2:
    width = scan.hi - scan.lo
    return Estimate2(n, scan.count(n), n * width - n * slack, n * width + n * slack)


def verify_estimate2(alpha: AngleSpec, n: int, precision: int = 256) -> Estimate2:
    """Count k <= n with k*alpha mod 1 in (0, 1/8) against n/8 +- n/1000."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _estimate2(WindowScan(alpha, precision=precision), n)


def qualifying_set(
    alpha: AngleSpec,
    lo: int,
    hi: int,
    exclude: Callable[[int], bool] | Iterable[int] | None = None,
    scan: WindowScan | None = None,
) -> list[int]:
    """All k in (lo, hi] with k*alpha mod 1 certified inside (0, 1/8), minus exclusions."""
    if lo >= hi:
        raise ValueError("need lo < hi")
    if exclude is None:
        skip = lambda k: False  # noqa: E731
    elif callable(exclude):
        skip = exclude
    else:
        ex = set(exclude)
        skip = ex.__contains__
    scan = scan or WindowScan(alpha)
    scan.extend(hi)
    return [k for k in range(lo + 1, hi + 1) if scan.inside[k] and not skip(k)]


def _n0_from_scan(scan: WindowScan, limit: int, slack: Fraction) -> int:
    scan.extend(limit)
    width = scan.hi - scan.lo
    ok = bytearray(limit + 1)
    for n in range(1, limit + 1):
        c = scan.counts[n]
        ok[n] = n * width - n * slack < c < n * width + n * slack
    next_fail = [limit + 1] * (limit + 2)
    for n in range(limit, 0, -1):
        next_fail[n] = n if not ok[n] else next_fail[n + 1]
    for n0 in range(1, limit + 1):
        if ok[n0] and next_fail[n0] > min(4 * n0, limit):
            return n0
    raise NotFound(f"no N0 <= {limit} satisfies the window-count estimate on [N0, 4*N0]")


def find_N0(alpha: AngleSpec, search_limit: int = 10 ** 5, precision: int = 256) -> int:
    """Smallest N0 with the window-count estimate holding on [N0, min(4*N0, limit)]."""
    if search_limit < 8:
        raise ValueError("search_limit must be >= 8")
    return _n0_from_scan(WindowScan(alpha, precision=precision), search_limit, SLACK)


# ---------------------------------------------------------------------------
# stages


@dataclass(frozen=True)
class StopCount:
    X: int
    count: int
    threshold: Fraction

    @property
    def stops(self) -> bool:
        return self.count <= self.threshold


@dataclass(frozen=True)
class StageRecord:
    k: int
    N: int
    N_prime: int | None
    ell: int | None
    A: tuple[int, ...]
    B: tuple[int, ...]
    sigma_count: int
    stop_counts: tuple[StopCount, ...] = ()

    @property
    def density(self) -> Fraction:
        return Fraction(self.sigma_count, self.N)


@dataclass(frozen=True)
class LackUdCertificate:
    k: int
    weyl_re: Interval
    bias_holds: bool
    bias_margin: float  # lower end of Re S minus the bound
    density: Fraction
    density_holds: bool

    @property
    def holds(self) -> bool:
        return self.bias_holds and self.density_holds


@dataclass
class ConstructionState:
    config: NazarovConfig
    N0: int
    stages: list[StageRecord] = field(default_factory=list)
    certificates: list[LackUdCertificate] = field(default_factory=list)
    used_n: list[int] = field(default_factory=list)
    verified_range: tuple[int, int] | None = None
    scan: WindowScan | None = field(default=None, repr=False, compare=False)


def init_state(config: NazarovConfig, N0: int | None = None) -> ConstructionState:
    scan = WindowScan(config.alpha, config.window, config.precision, config.precision_cap)
    if N0 is None:
        N0 = _n0_from_scan(scan, config.n0_search_limit, config.slack)
    return ConstructionState(config, N0, scan=scan)


def _verify_range(state: ConstructionState, upto: int, used: Iterable[int]) -> None:
    """Check the window-count estimate at every n in [N0, upto]; abort on failure."""
    cfg, scan = state.config, state.scan
    start = state.N0 if state.verified_range is None else state.verified_range[1] + 1
    scan.extend(upto)
    width = scan.hi - scan.lo
    for n in range(start, upto + 1):
        c = scan.counts[n]
        if not n * width - n * cfg.slack < c < n * width + n * cfg.slack:
            raise Estimate2Violation(n, c)
    if upto >= state.N0:
        state.verified_range = (state.N0, max(upto, state.verified_range[1] if state.verified_range else upto))
    state.used_n.extend(used)


def run_stage(state: ConstructionState) -> ConstructionState:
    cfg, scan = state.config, state.scan
    g = cfg.growth_factor
    if not state.stages:
        N0 = state.N0
        N1 = g * N0
        _verify_range(state, N1, [N0, N1])
        B = tuple(qualifying_set(cfg.alpha, N0, N1, scan=scan))
        if len(B) < SEED_FRACTION * N0:
            raise InvariantViolation(f"stage 1 found {len(B)} window hits in ({N0}, {N1}], need >= {N0}/10")
        sigma = elements_up_to(B, N1) if B else ()
        state.stages.append(StageRecord(1, N1, None, None, B, B, len(sigma)))
        return state

    prev = state.stages[-1]
    gens = prev.B
    stops = []
    ell, Np = 0, prev.N
    while True:
        ell += 1
        Np *= g
        X = g * Np
        if X > cfg.count_cap:
            raise ResourceLimit(f"stopping-rule search exceeded the counting cap {cfg.count_cap}")
        c = sum(1 for _ in SemigroupStream(gens, X))
        sc = StopCount(X, c, X * cfg.stop_fraction)
        stops.append(sc)
        if sc.stops:
            break
    N = g * Np
    _verify_range(state, N, [Np, N])
    current = set(elements_up_to(gens, N))
    A = tuple(qualifying_set(cfg.alpha, Np, N, exclude=current.__contains__, scan=scan))
    if len(A) < SEED_FRACTION * Np:
        raise InvariantViolation(
            f"stage {prev.k + 1}: only {len(A)} new window hits in ({Np}, {N}], need >= {Np}/10"
        )
    B = tuple(sorted(current | set(A)))
    sigma = elements_up_to(B, N)
    state.stages.append(StageRecord(prev.k + 1, N, Np, ell, A, B, len(sigma), tuple(stops)))
    return state


def stage_points(record: StageRecord, alpha: AngleSpec, precision: int = 256):
    if isinstance(alpha, RationalAngle):
        return [reduce_mod1(s * alpha.value) for s in record.B]
    a = eval_angle(alpha, precision)
    return [a.times(s).mod1() for s in record.B]


def certify_stage(record: StageRecord, alpha: AngleSpec, precision: int = 256) -> LackUdCertificate:
    """Certified lower bound on Re of the normalized Weyl sum over B_{N_k}."""
    pts = stage_points(record, alpha, precision)
    prec = WORKING_PREC
    while True:
        re = weyl_sum(pts, 1, prec=prec).re
        lo_ok, hi_ok = bias_bound_holds(re.lo), bias_bound_holds(re.hi)
        if lo_ok or not hi_ok or prec >= 4 * WORKING_PREC:
            break
        prec *= 2  # enclosure straddles the bound
    density = record.density
    return LackUdCertificate(
        record.k, re, lo_ok, float(re.lo) - BIAS_BOUND, density, density >= DENSITY_FLOOR
    )


def run_construction(config: NazarovConfig, N0: int | None = None) -> ConstructionState:
    state = init_state(config, N0)
    for _ in range(config.stages):
        run_stage(state)
        state.certificates.append(certify_stage(state.stages[-1], config.alpha, config.precision))
    return state


# ---------------------------------------------------------------------------
# independent re-verification from recorded sets


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str = ""


def verify_record(
    alpha: AngleSpec,
    N0: int,
    stages: list[StageRecord],
    config: NazarovConfig | None = None,
    claimed_weyl: list[Interval | None] | None = None,
) -> list[Check]:
    """Recheck every stage inequality from the stage sets alone."""
    cfg = config or NazarovConfig(alpha)
    scan = WindowScan(alpha, cfg.window, cfg.precision, cfg.precision_cap)
    width = scan.hi - scan.lo
    g = cfg.growth_factor
    checks: list[Check] = []

    def add(name, ok, detail=""):
        checks.append(Check(name, bool(ok), detail))

    top = max(r.N for r in stages) if stages else N0
    scan.extend(top)
    bad = [
        n for n in range(N0, top + 1)
        if not n * width - n * cfg.slack < scan.counts[n] < n * width + n * cfg.slack
    ]
    add("window count on [N0, N_last]", not bad, f"first failure n={bad[0]}" if bad else f"[{N0}, {top}]")

    prevB: tuple[int, ...] = ()
    prevN = None
    for i, r in enumerate(stages):
        tag = f"stage {r.k}"
        B = tuple(r.B)
        add(f"{tag}: B sorted and distinct", list(B) == sorted(set(B)))
        if i == 0:
            add(f"{tag}: N_1 = 2*N0", r.N == g * N0, f"N={r.N}, N0={N0}")
            expected = [k for k in range(N0 + 1, r.N + 1) if scan.inside[k]]
            add(f"{tag}: B = all window hits in (N0, N1]", list(B) == expected)
            add(f"{tag}: |B| >= N0/10", len(B) >= SEED_FRACTION * N0, f"{len(B)} vs {N0}/10")
        else:
            Np = r.N_prime
            add(f"{tag}: N = 2*N'", Np is not None and r.N == g * Np)
            add(f"{tag}: N' = N_prev * 2^l", Np == prevN * g ** (r.ell or 0) and (r.ell or 0) >= 1)
            X = g * Np
            c = sum(1 for _ in SemigroupStream(prevB, X))
            add(f"{tag}: stopping rule count <= X/100", c <= X * cfg.stop_fraction, f"count {c}, X {X}")
            minimal = True
            for l in range(1, r.ell):
                Xl = g * prevN * g ** l
                cl = sum(1 for _ in SemigroupStream(prevB, Xl))
                if cl <= Xl * cfg.stop_fraction:
                    minimal = False
            add(f"{tag}: stopping rule minimality of l", minimal, f"l={r.ell}")
            prior = set(elements_up_to(prevB, r.N))
            A = tuple(r.A)
            add(f"{tag}: A inside (N', N]", all(Np < a <= r.N for a in A))
            add(f"{tag}: A certified in window", all(scan.inside[a] for a in A))
            add(f"{tag}: A disjoint from previous semigroup", not prior.intersection(A))
            add(f"{tag}: |A| >= N'/10", len(A) >= SEED_FRACTION * Np, f"{len(A)} vs {Np}/10")
            add(f"{tag}: B = (Sigma_prev ∩ [1,N]) ∪ A", set(B) == prior | set(A))
        sigma = elements_up_to(B, r.N) if B else ()
        add(f"{tag}: Sigma ∩ [1, N_k] = B", tuple(sigma) == B)
        add(f"{tag}: density >= 1/200", Fraction(len(sigma), r.N) >= DENSITY_FLOOR,
            f"{len(sigma)}/{r.N}")
        cert = certify_stage(r, alpha, cfg.precision)
        add(f"{tag}: Re S >= sqrt(2)/40 - 1/100", cert.bias_holds, f"Re S >= {float(cert.weyl_re.lo):.6f}")
        if claimed_weyl is not None and claimed_weyl[i] is not None:
            cw = claimed_weyl[i]
            agree = cw.lo <= cert.weyl_re.hi and cert.weyl_re.lo <= cw.hi and bias_bound_holds(cw.lo)
            add(f"{tag}: recorded Weyl enclosure consistent", agree)
        prevB, prevN = B, r.N
    return checks

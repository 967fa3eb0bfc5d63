"""Collision detection and rational reconstruction for semigroup orbits.

Given x and Sigma ∩ [1, M], the images q*B_delta(x) cannot all be disjoint
once their masses add up to more than 1.  Two overlapping images q1, q2
put x within 2*M**-4 of k / (q1 - q2).  Repeating at M, M**2, M**4, ...
with delta = M**-5 either stabilizes on one rational or fails.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Union

from .exact import (
    Arc,
    AngleSpec,
    FixedReal,
    TorusPoint,
    ball,
    dilate_arc,
    eval_angle,
    reduce_mod1,
    times_n,
)
from .measures import (
    Atomic,
    InvarianceError,
    MeasureModel,
    UnsupportedCombination,
    analytic_entropy,
    arc_mass,
    canonical_arcs,
    check_invariance,
    point_mass,
    sample_point,
)
from .entropy import geometric_grid, lemma1_scan, smb_estimate
from .semigroup import LacunarityResult, elements_up_to, is_lacunary, normalize_gens

Point = Union[TorusPoint, FixedReal]


class InsufficientElements(ValueError):
    pass


class CertificationError(ArithmeticError):
    """Working precision is too low to decide a gap comparison."""


def certified_point(spec: AngleSpec, bits: int = 256) -> FixedReal:
    return eval_angle(spec, bits).mod1()


def dilation_images(x, delta, gens, M: int) -> list[tuple[int, Arc]]:
    """A_q = q * B_delta(x) for every q in Sigma ∩ [1, M]."""
    delta = Fraction(delta)
    if not 0 < delta < Fraction(1, 2):
        raise ValueError("need 0 < delta < 1/2")
    b = ball(x, delta)
    return [(q, dilate_arc(b, q)) for q in elements_up_to(gens, M)]


@dataclass(frozen=True)
class CollisionWitness:
    q1: int
    q2: int
    k: int
    ell: int
    overlap_point: Point
    gap: Fraction  # upper bound on the circular distance between q1*x and q2*x
    exact: bool


def _choose(pairs):
    # pairs of (gap, ell, q2, q1); minimal gap, then smallest ell, then smallest q2
    return min(pairs)


def _exact_collision(x: TorusPoint, qs, delta: Fraction) -> CollisionWitness | None:
    a, b = x.value.numerator, x.value.denominator
    groups: dict[int, list[int]] = {}
    for q in qs:
        groups.setdefault(q * a % b, []).append(q)
    best = None
    for members in groups.values():
        for q2, q1 in zip(members, members[1:]):
            cand = (q1 - q2, q2, q1)
            if best is None or cand < best:
                best = cand
    if best is not None:
        ell, q2, q1 = best
        k = ell * a // b
        return CollisionWitness(q1, q2, k, ell, times_n(x, q1), Fraction(0), True)
    # no exact coincidence: look for a near one
    order = sorted((q * a % b, q) for q in qs)
    pairs = []
    limit = 2 * delta * b
    for (r1, s1), (r2, s2) in zip(order, order[1:] + order[:1]):
        gap = (r2 - r1) % b
        gap = min(gap, b - gap)
        if gap <= limit:
            q1, q2 = max(s1, s2), min(s1, s2)
            pairs.append((gap, q1 - q2, q2, q1))
    if not pairs:
        return None
    gap, ell, q2, q1 = _choose(pairs)
    k = round(ell * x.value)
    return CollisionWitness(q1, q2, k, ell, times_n(x, q1), Fraction(gap, b), False)


def _certified_collision(x: FixedReal, qs, delta: Fraction) -> CollisionWitness | None:
    unit = 1 << x.scale
    e = x.error_units
    pts = sorted((q * x.mantissa % unit, q) for q in qs)
    limit = 2 * delta * unit
    widest = 2 * e * qs[-1]
    pairs = []
    smallest = None
    for (c1, s1), (c2, s2) in zip(pts, pts[1:] + pts[:1]):
        g = (c2 - c1) % unit
        g = min(g, unit - g)
        smallest = g if smallest is None else min(smallest, g)
        upper = g + e * (s1 + s2)
        if upper <= limit:
            q1, q2 = max(s1, s2), min(s1, s2)
            pairs.append((Fraction(upper, unit), q1 - q2, q2, q1))
    if pairs:
        gap, ell, q2, q1 = _choose(pairs)
        k = round(Fraction(ell * x.mantissa, unit))
        return CollisionWitness(q1, q2, k, ell, x.times(q1).mod1(), gap, False)
    if smallest - widest > limit:
        return None
    raise CertificationError("precision too low to separate orbit gaps from 2*delta")


def find_point_collision(x: Point, gens, M: int, delta) -> CollisionWitness | None:
    """Closest pair among {q*x mod 1 : q in Sigma ∩ [1, M]} if within 2*delta."""
    delta = Fraction(delta)
    qs = elements_up_to(gens, M)
    if len(qs) < 2:
        raise InsufficientElements(f"Sigma ∩ [1, {M}] has {len(qs)} element(s); need 2")
    if isinstance(x, FixedReal):
        return _certified_collision(x.mod1(), qs, delta)
    return _exact_collision(TorusPoint.of(x), qs, delta)


# ---------------------------------------------------------------------------
# rational reconstruction


@dataclass(frozen=True)
class Stage:
    M: int
    delta: Fraction
    witness: CollisionWitness | None
    candidate: Fraction | None
    kappa_bound: Fraction
    kappa_ok: bool | None
    note: str = ""


@dataclass(frozen=True)
class ReconstructionTrace:
    x: Point
    stages: tuple[Stage, ...]
    verdict: Fraction | None  # None means not certified
    separation: Fraction | None = None

    @property
    def certified(self) -> bool:
        return self.verdict is not None


def _distance_within(x: Point, r: Fraction, bound: Fraction) -> bool:
    """|x - r| <= bound for the [0, 1) representative (certified for FixedReal)."""
    if isinstance(x, FixedReal):
        return abs(x.value - r) + x.error <= bound
    return abs(TorusPoint.of(x).value - r) <= bound


def reconstruct_rational(
    x: Point,
    gens,
    m1: int,
    max_doublings: int = 1,
    delta_exponent: int = 5,
) -> ReconstructionTrace:
    """Run the collision step at M = m1, m1**2, m1**4, ... until two
    consecutive candidates agree and their error bounds cannot both hold
    for two distinct rationals with the admissible denominators.

    ``delta_exponent`` sets delta = M**-delta_exponent (5 unless overridden).
    """
    if max_doublings < 1:
        raise ValueError("max_doublings must be >= 1")
    gens = normalize_gens(gens)
    stages: list[Stage] = []
    M = m1
    prev: Stage | None = None
    for _ in range(max_doublings + 1):
        delta = Fraction(1, M ** delta_exponent)
        kappa = Fraction(2, M ** 4)
        w = find_point_collision(x, gens, M, delta)
        if w is None:
            stages.append(Stage(M, delta, None, None, kappa, None, "no collision within 2*delta"))
            return ReconstructionTrace(x, tuple(stages), None)
        cand = Fraction(w.k, w.ell)
        ok = _distance_within(x, cand, kappa)
        stage = Stage(M, delta, w, cand, kappa, ok, "" if ok else "kappa bound violated")
        stages.append(stage)
        if not ok:
            return ReconstructionTrace(x, tuple(stages), None)
        if prev is not None and prev.candidate == cand:
            # distinct rationals with denominators < prev.M and < M are >= 1/(prev.M*M) apart
            separation = Fraction(1, prev.M * M)
            if prev.kappa_bound + kappa < separation:
                return ReconstructionTrace(x, tuple(stages), cand, separation)
        prev = stage
        M = M * M
    return ReconstructionTrace(x, tuple(stages), None)


# ---------------------------------------------------------------------------
# measure-level pigeonhole


@dataclass(frozen=True)
class PigeonholeResult:
    forced: bool
    total_mass: Fraction
    delta: Fraction
    threshold: Fraction | None  # delta**beta when it is rational, else None
    heavy_arcs: int  # arcs with mass > delta**beta
    pair: tuple[int, int] | None
    overlap_point: TorusPoint | None
    masses: tuple[tuple[int, Fraction], ...] = field(repr=False, default=())


def _overlapping_pair(images: list[tuple[int, Arc]]):
    pieces = []
    for q, a in images:
        for lo, hi in a.pieces():
            pieces.append((lo, hi, q))
    pieces.sort()
    # the two largest right ends seen so far, from different arcs
    top: list[tuple[Fraction, int]] = []
    for lo, hi, q in pieces:
        for prev_hi, prev_q in top:
            if prev_q != q and prev_hi > lo:
                return prev_q, q, reduce_mod1(min(prev_hi, hi))
        top = [t for t in top if t[1] != q] + [(hi, q)]
        top = sorted(top, reverse=True)[:2]
    return None


def measure_pigeonhole(mu: MeasureModel, x, gens, M: int, beta, delta=None) -> PigeonholeResult:
    """Sum mu(q * B_delta(x)) over q in Sigma ∩ [1, M] (delta = M**-5 by default).

    A total above 1 forces two images to overlap; the overlapping pair is
    located by an endpoint sweep.
    """
    beta = Fraction(beta)
    delta = Fraction(1, M ** 5) if delta is None else Fraction(delta)
    images = dilation_images(x, delta, gens, M)
    masses = [(q, arc_mass(mu, a)) for q, a in images]
    total = sum((m for _, m in masses), Fraction(0))
    a, b = beta.numerator, beta.denominator
    heavy = sum(1 for _, m in masses if m ** b > delta ** a)
    threshold = delta ** a if b == 1 else None
    hit = _overlapping_pair(images)
    if total > 1:
        if hit is None:
            raise AssertionError("mass exceeds 1 but no two images overlap")
        q1, q2, pt = hit
        return PigeonholeResult(True, total, delta, threshold, heavy, (max(q1, q2), min(q1, q2)), pt, tuple(masses))
    return PigeonholeResult(False, total, delta, threshold, heavy, None, None, tuple(masses))


# ---------------------------------------------------------------------------
# classification


class Verdict(enum.Enum):
    FINITE_SUPPORT_DETECTED = "FiniteSupportDetected"
    LEBESGUE_CONSISTENT = "LebesgueConsistent"
    POSITIVE_ENTROPY_NO_CONCLUSION = "PositiveEntropyNoConclusion"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class ClassifyParams:
    seed: int = 0
    samples: int = 24
    m1: int = 100
    doublings: int = 1
    depth: int = 64
    smb_depth: int = 1000
    smb_samples: int = 200
    zero_entropy_factor: float = 0.05  # heuristic cut for estimated entropies
    beta: Fraction = Fraction(1, 10)
    discrepancy_samples: int = 400
    ks_cutoff: float = 1.95  # sqrt(N) * D* above this is flagged (about 0.1% under Lebesgue)


@dataclass(frozen=True)
class EntropyEntry:
    p: int
    value: float
    method: str  # "analytic" or "estimate"


@dataclass
class ClassificationReport:
    verdict: Verdict
    entropies: list[EntropyEntry]
    lacunarity: LacunarityResult
    atoms: list[tuple[Fraction, Fraction]] | None = None
    traces: list[ReconstructionTrace] = field(default_factory=list)
    evidence: dict = field(default_factory=dict)


def _orbit_closure(points: Iterable[Fraction], gens) -> set[Fraction]:
    seen = set(points)
    todo = list(seen)
    while todo:
        y = todo.pop()
        for g in gens:
            z = times_n(y, g).value
            if z not in seen:
                seen.add(z)
                todo.append(z)
    return seen


def _separating_arcs(points: list[Fraction]) -> list[Arc]:
    pts = sorted(points)
    arcs = []
    for y, z in zip(pts, pts[1:] + [pts[0] + 1]):
        arcs.append(Arc(y, z - y) if z - y < 1 else Arc(y, Fraction(1, 2)))
    return arcs


def _entropy_entries(mu, gens, params: ClassifyParams) -> list[EntropyEntry]:
    out = []
    for g in gens:
        try:
            out.append(EntropyEntry(g, analytic_entropy(mu, g), "analytic"))
        except UnsupportedCombination:
            est = smb_estimate(mu, g, params.smb_depth, params.smb_samples, params.seed)
            out.append(EntropyEntry(g, est.mean, "estimate"))
    return out


def _is_zero(entry: EntropyEntry, gens, params: ClassifyParams) -> bool:
    if entry.method == "analytic":
        return entry.value == 0
    return entry.value < params.zero_entropy_factor * math.log(min(gens))


def _star_discrepancy_sqrt_n(values: list[Fraction]) -> float:
    xs = sorted(values)
    n = len(xs)
    d = max(max(Fraction(i + 1, n) - v, v - Fraction(i, n)) for i, v in enumerate(xs))
    return float(d) * math.sqrt(n)


def classify_measure(mu: MeasureModel, gens, params: ClassifyParams | None = None) -> ClassificationReport:
    params = params or ClassifyParams()
    gens = normalize_gens(gens)
    arcs = canonical_arcs()
    for g in gens:
        bad = check_invariance(mu, g, arcs).first_violation
        if bad is not None:
            raise InvarianceError(
                f"{mu} is not T_{g}-invariant on arc {bad.arc}: "
                f"{bad.mass} vs preimage {bad.preimage_mass}",
                arc=bad.arc,
                q=g,
            )
    entropies = _entropy_entries(mu, gens, params)
    lac = is_lacunary(gens)
    report = ClassificationReport(Verdict.INCONCLUSIVE, entropies, lac)

    if any(_is_zero(e, gens, params) for e in entropies):
        scan = lemma1_scan(
            mu, params.beta, Fraction(1, 2), geometric_grid(2, 10, 40), params.samples, params.seed
        )
        report.evidence["lemma1_pass_fraction"] = scan.pass_fraction
        report.evidence["lemma1_delta0"] = scan.delta0
        recovered = set()
        for i in range(params.samples):
            x = sample_point(mu, repr((params.seed, "classify", i)), params.depth)
            trace = reconstruct_rational(x, gens, params.m1, params.doublings)
            report.traces.append(trace)
            if not trace.certified:
                report.evidence["uncertified_sample"] = str(x)
                return report
            recovered.add(trace.verdict)
        closure = sorted(_orbit_closure(recovered, gens))
        atoms = [(y, point_mass(mu, y)) for y in closure]
        total = sum((m for _, m in atoms), Fraction(0))
        report.evidence["atom_mass_total"] = total
        if total != 1:
            return report
        model = Atomic(tuple(atoms))
        test_arcs = arcs + _separating_arcs(closure)
        if all(check_invariance(model, g, test_arcs).invariant for g in gens):
            report.verdict = Verdict.FINITE_SUPPORT_DETECTED
            report.atoms = atoms
        return report

    if lac.lacunary:
        report.verdict = Verdict.POSITIVE_ENTROPY_NO_CONCLUSION
        report.evidence["reason"] = f"generators are powers of {lac.witness}"
        return report

    family = [Arc(Fraction(j, 2 ** n), Fraction(1, 2 ** n)) for n in range(1, 7) for j in range(2 ** n)]
    family += [Arc(Fraction(j, 3 ** n), Fraction(1, 3 ** n)) for n in range(1, 5) for j in range(3 ** n)]
    mismatches = [a for a in family if arc_mass(mu, a) != a.length]
    samples = [
        sample_point(mu, repr((params.seed, "ks", i)), params.depth).value
        for i in range(params.discrepancy_samples)
    ]
    ks = _star_discrepancy_sqrt_n(samples)
    report.evidence["arc_family_size"] = len(family)
    report.evidence["arc_mismatches"] = [str(a) for a in mismatches[:10]]
    report.evidence["sqrtN_star_discrepancy"] = ks
    if not mismatches and ks < params.ks_cutoff:
        report.verdict = Verdict.LEBESGUE_CONSISTENT
    return report

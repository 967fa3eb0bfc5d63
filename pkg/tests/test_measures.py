import math
from collections import Counter
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rigidtorus.exact import Arc, preimage_arcs
from rigidtorus.measures import (
    Atomic,
    DigitBernoulli,
    InvarianceError,
    Lebesgue,
    MeasureSpecError,
    UnsupportedCombination,
    analytic_entropy,
    arc_mass,
    canonical_arcs,
    cantor,
    cdf_at,
    cell_address,
    check_invariance,
    format_measure,
    parse_measure,
    point_mass,
    sample_point,
)

SEVENTHS = Atomic.uniform([F(1, 7), F(2, 7), F(4, 7)])
BIASED = DigitBernoulli(2, (F(1, 4), F(3, 4)))


def cell_mass_oracle(mu, p, n, k):
    """Mass of ((k)/p^n, (k+1)/p^n] from the digit product."""
    digits = []
    for _ in range(n):
        k, d = divmod(k, p)
        digits.append(d)
    return math.prod(mu.probs[d] for d in digits)


def test_cdf_examples():
    assert cdf_at(Lebesgue(), F(3, 10)) == F(3, 10)
    assert cdf_at(cantor(), F(1, 3)) == F(1, 2)
    assert cdf_at(SEVENTHS, F(1, 2)) == F(2, 3)
    assert cdf_at(cantor(), 0) == 0 and cdf_at(cantor(), 1) == 1


def test_arc_mass_examples():
    assert arc_mass(Lebesgue(), Arc(F(9, 10), F(3, 10))) == F(3, 10)
    assert arc_mass(cantor(), Arc(F(1, 3), F(1, 3))) == 0
    assert arc_mass(SEVENTHS, Arc(F(6, 7) - F(1, 100), F(2, 100))) == 0
    assert arc_mass(SEVENTHS, Arc(F(0), 1)) == 1


@pytest.mark.parametrize("mu, p", [(BIASED, 2), (cantor(), 3), (DigitBernoulli(3, (F(1, 6), F(1, 3), F(1, 2))), 3)])
@pytest.mark.parametrize("n", [1, 3, 5])
def test_cells_against_digit_oracle(mu, p, n):
    for k in range(p ** n):
        a = Arc(F(k, p ** n), F(1, p ** n))
        assert arc_mass(mu, a) == cell_mass_oracle(mu, p, n, k)


def test_digit_bernoulli_atomic_digit_law():
    # a degenerate digit law gives a point mass: all digits 1 in base 2 is the point 1 = 0
    mu = DigitBernoulli(2, (F(0), F(1)))
    assert arc_mass(mu, Arc(F(1, 2), F(1, 2))) == 1
    assert point_mass(mu, 0) == 1


unit = st.fractions(min_value=0, max_value=F(26, 27), max_denominator=81)
measures = st.sampled_from([Lebesgue(), cantor(), BIASED, SEVENTHS])


@given(measures, unit, st.fractions(min_value=0, max_value=1, max_denominator=81), st.fractions(min_value=0, max_value=1, max_denominator=81))
def test_arc_additivity(mu, s, l1, l2):
    if l1 + l2 > 1:
        return
    whole = arc_mass(mu, Arc(s, l1 + l2)) if l1 + l2 > 0 else F(0)
    left = arc_mass(mu, Arc(s, l1)) if l1 > 0 else F(0)
    right = arc_mass(mu, Arc(s + l1, l2)) if l2 > 0 else F(0)
    assert whole == left + right


@given(measures, st.fractions(min_value=0, max_value=1, max_denominator=81), st.fractions(min_value=0, max_value=1, max_denominator=81))
def test_cdf_monotone(mu, s, t):
    lo, hi = sorted((s, t))
    assert 0 <= cdf_at(mu, lo) <= cdf_at(mu, hi) <= 1


@given(st.sampled_from([(Lebesgue(), 7), (cantor(), 3), (BIASED, 2), (SEVENTHS, 2), (Lebesgue(), 2)]), unit, st.fractions(min_value=F(1, 81), max_value=1, max_denominator=81))
def test_invariance_random_arcs(pair, s, length):
    mu, q = pair
    a = Arc(s, length)
    assert arc_mass(mu, a) == sum(arc_mass(mu, b) for b in preimage_arcs(a, q))


def test_invariance_reports():
    assert check_invariance(Lebesgue(), 7, canonical_arcs()).invariant
    assert check_invariance(cantor(), 3, canonical_arcs()).invariant
    assert check_invariance(SEVENTHS, 2, canonical_arcs()).invariant
    bad = check_invariance(SEVENTHS, 3, canonical_arcs())
    assert not bad.invariant
    row = bad.first_violation
    assert row.mass != row.preimage_mass
    assert not check_invariance(cantor(), 2, canonical_arcs()).invariant


def test_analytic_entropy():
    assert analytic_entropy(Lebesgue(), 2) == math.log(2)
    assert analytic_entropy(cantor(), 3) == pytest.approx(math.log(2), abs=1e-15)
    assert analytic_entropy(SEVENTHS, 2) == 0
    assert analytic_entropy(BIASED, 4) == pytest.approx(2 * analytic_entropy(BIASED, 2))
    with pytest.raises(UnsupportedCombination):
        analytic_entropy(DigitBernoulli(4, (F(1, 16), F(3, 16), F(3, 16), F(9, 16))), 2)
    with pytest.raises(InvarianceError):
        analytic_entropy(SEVENTHS, 3)
    with pytest.raises(InvarianceError):
        analytic_entropy(cantor(), 2)


def test_sampling_atomic_frequencies():
    mu = Atomic(((F(1, 5), F(1, 2)), (F(2, 5), F(1, 3)), (F(3, 5), F(1, 6))))
    n = 10_000
    counts = Counter(sample_point(mu, i, 10).value for i in range(n))
    assert set(counts) <= set(mu.support)
    for x, m in mu.atoms:
        sigma = math.sqrt(n * float(m) * (1 - float(m)))
        assert abs(counts[x] - n * float(m)) <= 3 * sigma


@pytest.mark.parametrize("seed", range(20))
def test_cantor_samples_avoid_digit_one(seed):
    x = sample_point(cantor(), seed, 40, base=3)
    assert 1 not in cell_address(x, 3, 40)
    assert arc_mass(cantor(), Arc(x.value - F(1, 3 ** 40), F(1, 3 ** 40))) > 0


def test_lebesgue_sampling_fair_and_deterministic():
    xs = [sample_point(Lebesgue(), s, 64) for s in range(400)]
    assert xs == [sample_point(Lebesgue(), s, 64) for s in range(400)]
    ones = sum(sum(cell_address(x, 2, 64)) for x in xs)
    total = 64 * len(xs)
    assert abs(ones - total / 2) <= 4 * math.sqrt(total / 4)
    assert all(x.value.denominator <= 2 ** 64 for x in xs)


@pytest.mark.parametrize(
    "text",
    ["lebesgue", "cantor", "atomic:[1/7=1/3,2/7=1/3,4/7=1/3]", "bernoulli:base=2,probs=1/4,3/4"],
)
def test_parse_format_roundtrip(text):
    mu = parse_measure(text)
    assert parse_measure(format_measure(mu)) == mu


@pytest.mark.parametrize(
    "bad",
    ["", "gauss", "atomic:[1/2=1/3]", "atomic:[x=1]", "bernoulli:base=2,probs=1/2", "bernoulli:base=1,probs=1"],
)
def test_parse_errors(bad):
    with pytest.raises(MeasureSpecError):
        parse_measure(bad)

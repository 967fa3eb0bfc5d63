import itertools
import math
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rigidtorus.semigroup import (
    contains,
    count_up_to,
    density_profile,
    elements_up_to,
    enumerate_up_to,
    is_lacunary,
    parse_gens,
)


def brute_elements(gens, limit):
    """Closure of the generators under products, by repeated multiplication."""
    out = set()
    frontier = {g for g in gens if g <= limit}
    while frontier:
        out |= frontier
        frontier = {a * g for a in frontier for g in gens if a * g <= limit} - out
    return sorted(out)


def brute_witness(gens, bound):
    """Smallest a with every generator a power of a, by direct search."""
    for a in range(2, bound + 1):
        ok = True
        for g in gens:
            v = a
            while v < g:
                v *= a
            if v != g:
                ok = False
                break
        if ok:
            return a
    return None


@pytest.mark.parametrize(
    "gens, limit, expected",
    [
        ((2, 3), 20, [2, 3, 4, 6, 8, 9, 12, 16, 18]),
        ((5,), 100, [5, 25]),
        ((2, 3, 5), 30, [2, 3, 4, 5, 6, 8, 9, 10, 12, 15, 16, 18, 20, 24, 25, 27, 30]),
    ],
)
def test_enumeration_examples(gens, limit, expected):
    assert list(enumerate_up_to(gens, limit)) == expected


@pytest.mark.parametrize("gens, limit, expected", [((2, 3), 100, 19), ((2,), 100, 6), ((2, 3, 5), 30, 17)])
def test_count_examples(gens, limit, expected):
    assert count_up_to(gens, limit) == expected


def test_density_examples():
    rep = density_profile((2,), [10, 100])
    assert [c.count for c in rep.checkpoints] == [3, 6]
    rep = density_profile((2, 3), [10 ** 2, 10 ** 4, 10 ** 6])
    logs = [c.log_density for c in rep.checkpoints]
    assert logs == sorted(logs, reverse=True)
    assert rep.lower_density == F(rep.checkpoints[-1].count, 10 ** 6)
    empty = density_profile((7,), [5, 6])
    assert all(c.empty and c.log_density == 0.0 for c in empty.checkpoints)
    with pytest.raises(ValueError):
        density_profile((2,), [100, 10])


@pytest.mark.parametrize("gens, lac, witness", [((2, 3), False, None), ((4, 16), True, 2), ((8, 32), True, 2), ((9,), True, 3), ((12, 18), False, None)])
def test_lacunary_examples(gens, lac, witness):
    r = is_lacunary(gens)
    assert (r.lacunary, r.witness) == (lac, witness)


@pytest.mark.parametrize("gens, n, expected", [((2, 3), 72, True), ((2, 3), 10, False), ((6, 10), 60, True), ((6, 10), 6 * 6 * 10, True), ((6, 10), 30, False)])
def test_contains_examples(gens, n, expected):
    assert contains(gens, n) is expected


gen_sets = st.lists(st.integers(2, 50), min_size=1, max_size=4)


@given(gen_sets, st.integers(1, 3000))
def test_enumeration_matches_brute_force(gens, limit):
    assert list(elements_up_to(gens, limit)) == brute_elements(set(gens), limit)
    assert count_up_to(gens, limit) == len(brute_elements(set(gens), limit))


@given(gen_sets, st.integers(1, 3000))
def test_stream_strictly_increasing(gens, limit):
    xs = list(enumerate_up_to(gens, limit))
    assert all(a < b for a, b in zip(xs, xs[1:]))


@given(st.lists(st.integers(2, 64), min_size=1, max_size=3))
def test_lacunary_matches_brute_force(gens):
    r = is_lacunary(gens)
    w = brute_witness(set(gens), max(gens))
    assert r.lacunary == (w is not None)
    assert r.witness == w


@given(gen_sets, st.integers(1, 400))
def test_contains_matches_enumeration(gens, n):
    assert contains(gens, n) == (n in set(brute_elements(set(gens), n)))


def test_count_23_double_loop():
    limit = 10 ** 6
    oracle = sum(
        1 for a in range(21) for b in range(13) if (a or b) and 2 ** a * 3 ** b <= limit
    )
    assert count_up_to((2, 3), limit) == oracle


def test_independent_counting_large():
    # exponent-tuple path vs stream on independent generators
    gens = (2, 3, 5, 7)
    assert count_up_to(gens, 10 ** 5) == sum(1 for _ in enumerate_up_to(gens, 10 ** 5))
    dependent = (4, 6, 9)
    assert count_up_to(dependent, 10 ** 5) == len(brute_elements(set(dependent), 10 ** 5))


@pytest.mark.parametrize("bad", ["", "1,2", "0", "a,b", "-3"])
def test_parse_gens_errors(bad):
    with pytest.raises(ValueError):
        parse_gens(bad)


def test_count_grows_like_log_squared():
    # |{2^a 3^b <= N}| ~ (log N)^2 / (2 log 2 log 3)
    n = 10 ** 12
    approx = math.log(n) ** 2 / (2 * math.log(2) * math.log(3))
    assert abs(count_up_to((2, 3), n) - approx) / approx < 0.1


def test_itertools_oracle_three_gens():
    gens = (2, 3, 5)
    limit = 5000
    oracle = sorted(
        {2 ** a * 3 ** b * 5 ** c for a, b, c in itertools.product(range(13), range(8), range(6))} - {1}
    )
    assert list(elements_up_to(gens, limit)) == [v for v in oracle if v <= limit]

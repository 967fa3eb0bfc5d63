from fractions import Fraction as F

import pytest

from rigidtorus.exact import DecimalAngle, RationalAngle, parse_angle
from rigidtorus.nazarov import (
    BIAS_BOUND,
    ConstructionError,
    Estimate2Violation,
    NazarovConfig,
    NotFound,
    PrecisionAbort,
    StageRecord,
    certify_stage,
    bias_bound_holds,
    find_N0,
    init_state,
    qualifying_set,
    run_construction,
    run_stage,
    verify_estimate2,
    verify_record,
)

GOLDEN = parse_angle("quadratic:(1+1*sqrt(5))/2")
QUARTER = RationalAngle(F(1, 4))


@pytest.fixture(scope="module")
def construction():
    return run_construction(NazarovConfig(GOLDEN, stages=3))


def test_bias_bound_exact():
    assert abs(BIAS_BOUND - (2 ** 0.5 / 40 - 0.01)) < 1e-15
    assert bias_bound_holds(F(2536, 100000))
    assert not bias_bound_holds(F(2535, 100000))


def test_qualifying_examples():
    assert qualifying_set(GOLDEN, 0, 13) == [5, 13]
    assert qualifying_set(GOLDEN, 0, 13, exclude=[5]) == [13]
    assert qualifying_set(QUARTER, 0, 100) == []


def test_estimate2_examples():
    e = verify_estimate2(GOLDEN, 13)
    assert e.count == 2 and not e.holds
    assert (float(e.lower), float(e.upper)) == pytest.approx((1.612, 1.638))
    e = verify_estimate2(GOLDEN, 10 ** 4)
    assert e.holds and abs(e.count - 1250) <= 10
    assert not verify_estimate2(QUARTER, 500).holds


def test_find_n0():
    n0 = find_N0(GOLDEN, 10 ** 5)
    assert n0 <= 10 ** 4
    assert all(verify_estimate2(GOLDEN, n).holds for n in (n0, 2 * n0, 4 * n0))
    with pytest.raises(NotFound):
        find_N0(QUARTER, 10 ** 4)


def test_low_precision_decimal_aborts():
    with pytest.raises(PrecisionAbort):
        find_N0(DecimalAngle("0.6180339887"), 10 ** 5)


def test_rational_smuggled_past_n0_aborts():
    state = init_state(NazarovConfig(QUARTER), N0=100)
    with pytest.raises(ConstructionError) as info:
        run_stage(state)
    assert isinstance(info.value, Estimate2Violation)


def test_stage_invariants(construction):
    st = construction
    s1, s2, s3 = st.stages
    assert len(s1.B) >= st.N0 / 10 and s1.N == 2 * st.N0
    for prev, cur in ((s1, s2), (s2, s3)):
        assert cur.N == 2 * cur.N_prime and cur.ell >= 1
        last = cur.stop_counts[-1]
        assert last.X == cur.N and last.count <= F(cur.N, 100)
        assert all(sc.count > sc.threshold for sc in cur.stop_counts[:-1])
        assert set(prev.B) <= set(cur.B)
    for r in st.stages:
        assert r.sigma_count == len(r.B)
        assert r.density >= F(1, 200)


def test_certificates_hold(construction):
    for c in construction.certificates:
        assert c.holds and c.bias_margin >= 1e-6
        assert c.weyl_re.lo >= F(2535, 100000)


def test_estimate2_range_contiguous(construction):
    lo, hi = construction.verified_range
    assert lo == construction.N0 and hi == construction.stages[-1].N
    assert all(lo <= n <= hi for n in construction.used_n)


def test_verify_record_accepts_and_rejects(construction):
    st = construction
    checks = verify_record(GOLDEN, st.N0, st.stages[:2])
    assert all(c.ok for c in checks), [c for c in checks if not c.ok]
    r = st.stages[1]
    tampered = StageRecord(r.k, r.N, r.N_prime, r.ell, r.A[1:], r.B, r.sigma_count, r.stop_counts)
    bad = [c.name for c in verify_record(GOLDEN, st.N0, [st.stages[0], tampered]) if not c.ok]
    assert any("B = (Sigma_prev" in n for n in bad)


def test_adversarial_window_fails_certificate():
    B = tuple(k for k in range(1, 2001) if 0.5 < (k * 1.6180339887498949) % 1 < 0.625)
    rec = StageRecord(1, 2000, None, None, B, B, len(B))
    cert = certify_stage(rec, GOLDEN)
    assert cert.weyl_re.hi < 0 and not cert.bias_holds


def test_all_inside_window_gives_large_re():
    B = tuple(qualifying_set(GOLDEN, 0, 500))
    cert = certify_stage(StageRecord(1, 500, None, None, B, B, len(B)), GOLDEN)
    assert cert.weyl_re.lo >= F(7071, 10000)

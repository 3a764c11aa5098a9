import math
import random
from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torusavg.unitmath import (CompensatedSum, ScalarConstant, UnitPoint,
                               compensated_sum_add, compensated_sum_init,
                               compensated_sum_value, frac, orbit_point,
                               rational_independence, sum_shifted_frac)

mp.mp.dps = 40

SQRT2 = ScalarConstant.surd(0, 1, 2)
SQRT3 = ScalarConstant.surd(0, 1, 3)


# ---------------------------------------------------------------------------
# frac


def test_frac_examples():
    assert frac(0.0) == 0.0
    assert frac(3.25) == 0.25
    assert frac(-0.3) == pytest.approx(0.7, abs=1e-15)


def test_frac_rejects_non_finite():
    for bad in (math.inf, -math.inf, math.nan):
        with pytest.raises(ValueError):
            frac(bad)


@given(st.floats(allow_nan=False, allow_infinity=False,
                 min_value=-1e15, max_value=1e15))
def test_frac_idempotent_and_in_range(x):
    r = frac(x)
    assert 0.0 <= r < 1.0
    assert frac(r) == r


@given(st.floats(min_value=0.0, max_value=1.0, exclude_max=True),
       st.integers(min_value=-(2 ** 30), max_value=2 ** 30))
def test_frac_shift_invariance(x, m):
    # x + m rounds once, so compare as circle distance at the rounding scale
    d = abs(frac(x + m) - frac(x))
    assert min(d, 1.0 - d) <= 2 ** -22


# ---------------------------------------------------------------------------
# orbit_point


def test_orbit_rational_exact():
    assert orbit_point(UnitPoint(0.0), ScalarConstant.rational(1, 2), 3).value == 0.5
    p = orbit_point(UnitPoint(0.0), ScalarConstant.rational(1, 3), 10 ** 6)
    assert p.value == pytest.approx(1 / 3, abs=1e-15)


def test_orbit_surd_against_high_precision_oracle():
    # frozen from a 40-digit mpmath evaluation of {0.25 + 1e6*sqrt(2)}
    p = orbit_point(UnitPoint(0.25), SQRT2, 10 ** 6)
    assert p.value + p.comp == pytest.approx(0.8123730950488016887, abs=1e-12)
    oracle = float(mp.frac(mp.mpf(0.25) + 10 ** 6 * mp.sqrt(2)))
    assert p.value + p.comp == pytest.approx(oracle, abs=1e-12)


def test_orbit_large_n():
    p = orbit_point(UnitPoint(0.0), SQRT2, 2 ** 40)
    oracle = float(mp.frac(2 ** 40 * mp.sqrt(2)))
    assert p.value + p.comp == pytest.approx(oracle, abs=1e-10)


def test_orbit_rejects_negative_step():
    with pytest.raises(ValueError):
        orbit_point(UnitPoint(0.0), SQRT2, -1)


@settings(max_examples=30)
@given(st.integers(min_value=0, max_value=10 ** 6),
       st.integers(min_value=0, max_value=10 ** 6))
def test_orbit_additivity(m, n):
    a = orbit_point(UnitPoint(0.0), SQRT2, m + n)
    b = orbit_point(orbit_point(UnitPoint(0.0), SQRT2, m), SQRT2, n)
    diff = abs((a.value + a.comp) - (b.value + b.comp))
    assert min(diff, 1.0 - diff) <= 1e-12  # distance on the circle


# ---------------------------------------------------------------------------
# ScalarConstant


def test_surd_normalization():
    # square factors move into the coefficient: sqrt(8) = 2*sqrt(2)
    s8 = ScalarConstant.surd(0, 1, 8)
    assert (s8.surd_b, s8.surd_m) == (Fraction(2), 2)
    assert s8 == ScalarConstant.surd(0, 2, 2)
    # degenerate radicand collapses to a rational
    assert ScalarConstant.surd(1, 2, 4).kind == "rational"
    assert ScalarConstant.surd(1, 2, 4).as_fraction() == 5


def test_scalar_float_value():
    assert SQRT2.float_value == pytest.approx(math.sqrt(2), abs=1e-16)
    assert ScalarConstant.rational(1, 3).float_value == pytest.approx(1 / 3, abs=1e-17)


def test_scalar_subtraction():
    assert SQRT2.sub(SQRT2).as_fraction() == 0
    assert ScalarConstant.rational(1, 2).sub(ScalarConstant.rational(1, 3)).as_fraction() == Fraction(1, 6)
    assert SQRT2.sub(SQRT3) is None
    mixed = ScalarConstant.surd(1, 1, 2).sub(SQRT2)
    assert mixed.as_fraction() == 1


# ---------------------------------------------------------------------------
# compensated summation


def test_compensated_sum_ones():
    acc = compensated_sum_init()
    for _ in range(10 ** 6):
        compensated_sum_add(acc, 1.0)
    assert compensated_sum_value(acc) == 1_000_000.0


def test_compensated_sum_tenths():
    acc = CompensatedSum()
    for _ in range(10):
        acc.add(0.1)
    assert acc.value() == pytest.approx(1.0, abs=1e-15)


def test_compensated_sum_cancellation_witness():
    # exact-rational oracle: 1e16 + 1 - 1e16 == 1
    acc = CompensatedSum()
    for t in (1e16, 1.0, -1e16):
        acc.add(t)
    assert acc.value() == 1.0


def test_compensated_sum_merge_matches_single_stream():
    rng = random.Random(7)
    terms = [rng.uniform(-1, 1) * 10 ** rng.randint(-8, 8) for _ in range(2000)]
    whole = CompensatedSum()
    for t in terms:
        whole.add(t)
    left, right = CompensatedSum(), CompensatedSum()
    for t in terms[:1000]:
        left.add(t)
    for t in terms[1000:]:
        right.add(t)
    left.merge(right)
    assert left.value() == pytest.approx(whole.value(), rel=1e-14, abs=1e-14)


def test_compensated_sum_overflow_reported():
    acc = CompensatedSum()
    acc.add(1e308)
    with pytest.raises(OverflowError):
        acc.add(1e308)


def test_compensated_sum_rejects_non_finite():
    with pytest.raises(ValueError):
        CompensatedSum().add(math.nan)


# ---------------------------------------------------------------------------
# sum_shifted_frac


def test_sum_shifted_frac_examples():
    assert sum_shifted_frac(0.25, 1) == 0.25
    assert sum_shifted_frac(0.25, 2) == pytest.approx(1.0, abs=1e-14)
    assert sum_shifted_frac(0.2, 5) == pytest.approx(2.0, abs=1e-13)


def test_sum_shifted_frac_identity_bulk():
    rng = random.Random(123)
    xs = [rng.random() for _ in range(500)] + [0.0, 1.0, 0.5]
    for k in range(1, 65):
        for x in xs:
            rhs = frac(k * x) + (k - 1) / 2
            assert abs(sum_shifted_frac(x, k) - rhs) <= 1e-12


def test_sum_shifted_frac_domain():
    with pytest.raises(ValueError):
        sum_shifted_frac(0.5, 0)
    with pytest.raises(ValueError):
        sum_shifted_frac(1.5, 3)


# ---------------------------------------------------------------------------
# rational independence


def test_independence_examples():
    v = rational_independence([ScalarConstant.rational(1, 2)], bound=2, tol=1e-9)
    assert v.status == "dependent" and v.relation == (1, -2)

    v = rational_independence([SQRT2, ScalarConstant.surd(0, 1, 8)], bound=3, tol=1e-9)
    assert v.status == "dependent" and v.relation == (0, 2, -1)

    v = rational_independence([SQRT2, SQRT3], bound=10, tol=1e-9)
    assert v.status == "independent-up-to-bound" and v.bound == 10


def test_independence_exact_for_single_surd():
    v = rational_independence([SQRT2], bound=10, tol=1e-9)
    assert v.status == "exact-independent"


def test_independence_relation_sound_in_high_precision():
    cases = [
        [ScalarConstant.rational(1, 2)],
        [ScalarConstant.rational(2, 7), ScalarConstant.rational(3, 7)],
        [SQRT2, ScalarConstant.surd(0, 1, 8)],
        [ScalarConstant.surd(1, 2, 3), SQRT3],
    ]
    values = {2: mp.sqrt(2), 3: mp.sqrt(3), 8: mp.sqrt(8)}
    for alphas in cases:
        v = rational_independence(alphas, bound=10, tol=1e-9)
        assert v.status == "dependent"
        k0, *ks = v.relation
        total = mp.mpf(k0)
        for k, a in zip(ks, alphas):
            if a.kind == "rational":
                total += k * mp.mpf(a.rat.numerator) / a.rat.denominator
            else:
                total += k * (mp.mpf(a.surd_a.numerator) / a.surd_a.denominator
                              + mp.mpf(a.surd_b.numerator) / a.surd_b.denominator
                              * mp.sqrt(a.surd_m))
        assert abs(total) <= 1e-9


def test_independence_domain_errors():
    with pytest.raises(ValueError):
        rational_independence([], bound=10, tol=1e-9)
    with pytest.raises(ValueError):
        rational_independence([SQRT2], bound=0, tol=1e-9)
    with pytest.raises(ValueError):
        rational_independence([SQRT2], bound=10, tol=-1.0)


# ---------------------------------------------------------------------------
# UnitPoint


def test_unit_point_range_enforced():
    with pytest.raises(ValueError):
        UnitPoint(1.0)
    with pytest.raises(ValueError):
        UnitPoint(-0.1)
    assert UnitPoint.from_real(3.25).value == 0.25
    assert UnitPoint.from_real(-0.25).value == 0.75

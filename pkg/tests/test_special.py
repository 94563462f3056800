import math
import random
from decimal import Decimal as D

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from converse import dec
from converse.dec import Interval
from converse.special import (HALF_PI, PI, QUARTER_PI, bd_cos, bd_sin, reduced_cos, reduced_sin, rig_cos,
                              rig_sin, rig_sqrt, set_trig_dp)

CFG = set_trig_dp(35)
mpmath.mp.dps = 80


def oracle_sin(x: D) -> D:
    return D(mpmath.nstr(mpmath.sin(mpmath.mpf(str(x))), 70, strip_zeros=False))


def oracle_cos(x: D) -> D:
    return D(mpmath.nstr(mpmath.cos(mpmath.mpf(str(x))), 70, strip_zeros=False))


def test_trig_order_choice():
    assert set_trig_dp(35).trig_terms == min(n for n in range(40) if math.factorial(2 * n + 3) > 10**37)
    assert set_trig_dp(1).trig_terms == 2
    for dp in range(1, 61):
        cfg = set_trig_dp(dp)
        n = cfg.trig_terms
        assert math.factorial(2 * n + 3) > 10 ** (dp + 2)
        assert n * 10 ** -cfg.trig_dp <= 10 ** -(dp + 2) or n <= 1
        assert n == 0 or math.factorial(2 * n + 1) <= 10 ** (dp + 2)


def test_reduced_sin_examples():
    assert reduced_sin(D(0), CFG) == 0
    pi6 = dec.truncate(dec.divide(PI, D(6), 60), 50)
    assert abs(reduced_sin(pi6, CFG) - D("0.5")) <= dec.ulp(35)
    with pytest.raises(dec.DomainError):
        reduced_sin(D(1), CFG)


def _oversampled_series(x: D, odd: bool) -> D:
    # independent check: plain Taylor series with many more terms
    import decimal

    with decimal.localcontext() as ctx:
        ctx.prec = 60
        term = x if odd else D(1)
        total = term
        k = 1 if odd else 0
        for _ in range(60):
            term = -term * x * x / ((k + 1) * (k + 2))
            k += 2
            total += term
        return +total


def test_reduced_functions_match_oversampled_series(rng):
    for _ in range(100):
        th = dec.truncate(D(rng.uniform(0, float(QUARTER_PI))), 40)
        assert abs(reduced_sin(th, CFG) - _oversampled_series(th, True)) <= dec.ulp(35)
        assert abs(reduced_cos(th, CFG) - _oversampled_series(th, False)) <= dec.ulp(35)


def test_rig_sin_error_budget(rng):
    worst = D(0)
    for _ in range(1000):
        th = dec.truncate(D(rng.uniform(-1000, 1000)), 40)
        worst = max(worst, abs(rig_sin(th, CFG) - oracle_sin(th)), abs(rig_cos(th, CFG) - oracle_cos(th)))
    assert worst <= dec.ulp(35)


def test_rig_sin_of_pi_and_symmetry(rng):
    assert abs(rig_sin(PI, CFG)) <= dec.ulp(35)
    for _ in range(50):
        th = dec.truncate(D(rng.uniform(-10, 10)), 30)
        assert rig_cos(th.copy_negate(), CFG) == rig_cos(th, CFG)


def test_pythagoras(rng):
    for _ in range(200):
        th = dec.truncate(D(rng.uniform(-10, 10)), 30)
        s, c = rig_sin(th, CFG), rig_cos(th, CFG)
        with dec.exact():
            assert abs(s * s + c * c - 1) <= 4 * dec.ulp(35)


def test_huge_angle_refused():
    with pytest.raises(dec.PrecisionLossError):
        rig_sin(D("1e90"), CFG)


def _isqrt_digits(x: D, places: int) -> D:
    # digit-by-digit square root via integer square root
    scaled = int(x.scaleb(2 * places, context=dec.EXACT))
    return D(math.isqrt(scaled)).scaleb(-places, context=dec.EXACT)


def test_sqrt_examples():
    assert abs(rig_sqrt(D(4), 35) - 2) <= dec.ulp(35)
    assert rig_sqrt(D(0), 10) == 0
    assert abs(rig_sqrt(D(2), 35) - _isqrt_digits(D(2), 40)) <= dec.ulp(35)
    with pytest.raises(dec.DomainError):
        rig_sqrt(D(-1), 10)


@given(st.decimals(min_value=0, max_value=10**6, places=20, allow_nan=False, allow_infinity=False))
@settings(max_examples=200)
def test_sqrt_squares_back(x):
    r = rig_sqrt(x, 30)
    with dec.exact():
        slack = 3 * dec.ulp(30) * (1 + r + dec.ulp(30))
        assert x - slack <= r * r <= x + slack
    assert abs(r - _isqrt_digits(x, 40)) <= dec.ulp(30)


def test_bd_sin_examples():
    whole = bd_sin(Interval(0, dec.truncate(PI, 50)), CFG)
    assert whole.ub == 1 and -dec.ulp(35) <= whole.lb <= 0
    th = D("0.7")
    pt = bd_sin(Interval(th, th), CFG)
    assert pt.width <= 2 * dec.ulp(35)
    q = bd_sin(Interval(dec.truncate(QUARTER_PI, 50), dec.truncate(3 * QUARTER_PI, 50)), CFG)
    assert q.ub == 1 and q.lb <= D(mpmath.nstr(mpmath.sqrt(2) / 2, 60))


def test_bd_trig_contains_sampled_values():
    rng = random.Random(3)
    for _ in range(10000):
        a = rng.uniform(-20, 20)
        w = rng.choice([1e-6, 1e-3, 0.1, 1.0, 4.0])
        lo, hi = dec.truncate(D(a), 20), dec.truncate(D(a + rng.uniform(0, w)), 20)
        s, c = bd_sin(Interval(lo, hi), CFG), bd_cos(Interval(lo, hi), CFG)
        for t in (a, (a + float(hi)) / 2, float(hi), rng.uniform(float(lo), float(hi))):
            t = min(max(t, float(lo)), float(hi))
            assert float(s.lb) - 1e-15 <= math.sin(t) <= float(s.ub) + 1e-15
            assert float(c.lb) - 1e-15 <= math.cos(t) <= float(c.ub) + 1e-15


def test_bd_sin_is_monotone_under_widening(rng):
    for _ in range(100):
        lo = dec.truncate(D(rng.uniform(-5, 5)), 15)
        hi = dec.truncate(lo + D(rng.uniform(0, 2)), 15)
        small = bd_sin(Interval(lo, hi), CFG)
        big = bd_sin(Interval(lo - D("0.1"), hi + D("0.1")), CFG)
        assert big.lb <= small.lb + dec.ulp(35) and small.ub - dec.ulp(35) <= big.ub


def test_critical_point_snapping():
    near = dec.truncate(HALF_PI, 50)
    iv = bd_sin(Interval(near - D("1e-30"), near + D("1e-30")), CFG)
    assert iv.ub == 1

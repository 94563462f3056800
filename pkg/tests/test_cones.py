import math
import random
from decimal import Decimal as D
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from converse import dec
from converse.backend import FloatBackend, RigorousBackend
from converse.cones import (DiagStats, GlobalBounds, SuiteVacuous, avoidance_threshold, beta_eigen_bounds,
                            criterion1, criterion1_threshold_std, criterion2, criterion2_threshold_std,
                            d_recursion_2d, eigen_suite_step, flux_test, global_bounds_4d,
                            immediate_threshold, initial_stats, min_beta, starting_point, suite_success,
                            uniform_cone_2d)
from converse.maps import AbcParams, Perturbation, StdFamily, eig_beta, trace_beta

BK = RigorousBackend()
FB = FloatBackend()


def trig_family(coefs, offset=0.0):
    f = lambda x: offset + sum(c * math.sin(2 * math.pi * (k + 1) * x) for k, c in enumerate(coefs))  # noqa: E731
    df = lambda x: sum(2 * math.pi * (k + 1) * c * math.cos(2 * math.pi * (k + 1) * x)  # noqa: E731
                       for k, c in enumerate(coefs))
    return StdFamily(1.0, f, df)


def test_flux_test():
    assert flux_test(StdFamily(0.9)) == "inconclusive"
    assert flux_test(trig_family([1.0], 0.1)) == "no-circles"
    rng = random.Random(1)
    for _ in range(20):
        assert flux_test(trig_family([rng.uniform(-1, 1) for _ in range(4)])) == "inconclusive"


def test_criterion1():
    assert criterion1_threshold_std() == 2
    assert criterion1(StdFamily(1.0)) == "inconclusive"
    assert criterion1(StdFamily(2.05)) == "no-circles"
    for k in (0.5, 1.5, 3.0):
        grid = min(StdFamily(k).beta(x) for x in np.linspace(0, 1, 100001))
        assert abs(min_beta(StdFamily(k)) - grid) < 1e-8


def test_uniform_cone():
    assert uniform_cone_2d(2) == (1, 1)
    lm, lp = uniform_cone_2d(D("2.5"))
    assert abs(lm - D("0.5")) <= dec.ulp(40) and abs(lp - 2) <= dec.ulp(40)
    lm, lp = uniform_cone_2d(D("3.3"), dp=40)
    with dec.exact():
        # l_- solves l = M - 1/l
        assert abs(D("3.3") - dec.divide(dec.ONE, lm, 60) - lm) <= D("1e-38")
    with pytest.raises(dec.DomainError):
        uniform_cone_2d(D("1.9"))


@settings(max_examples=50, deadline=None)
@given(st.integers(2000, 50000).map(lambda n: D(n) / 1000))
def test_cone_roots_multiply_to_one(m):
    lm, lp = uniform_cone_2d(m)
    with dec.exact():
        assert abs(lm * lp - 1) <= D("1e-37") * m
        assert lm <= lp


def test_criterion2():
    assert criterion2_threshold_std() == Fraction(4, 3)
    assert criterion2(1, 3) == "inconclusive"
    assert criterion2(2, 2) == "inconclusive"
    k = D("1.34")
    assert criterion2(2 - k, 2 + k) == "no-circles"
    k = D("1.33")
    assert criterion2(2 - k, 2 + k) == "inconclusive"


def test_d_recursion():
    res = d_recursion_2d([3.0] * 50, 1.0, 3.0)
    lp = (3 + math.sqrt(5)) / 2
    assert res.verdict == "inconclusive" and all(abs(d - lp) < 1e-12 for d in res.d)
    res = d_recursion_2d([2.5] * 50, 1.0, 3.0)
    assert res.d == sorted(res.d, reverse=True) and abs(res.d[-1] - 2) < 1e-6
    res = d_recursion_2d([1.9] * 1000, 1.0, 3.0)
    assert res.verdict == "no-minimizing-state"
    # a single low beta after the cone maximum
    k = 1.4
    lm, lp = uniform_cone_2d(D(2 + k))
    res = d_recursion_2d([2 - k], 2 - k, 2 + k)
    assert res.d[0] < float(lm) and res.verdict == "no-minimizing-state"
    assert d_recursion_2d([(0.0, 3.0)] * 3, 1.0, 3.0).verdict == "inconclusive"


def test_global_bounds_unperturbed():
    gb = global_bounds_4d(AbcParams.from_strings("0", "0", "0", "0", "0", "0"))
    assert gb.t == gb.T == 4 and gb.b == gb.B == 2
    assert gb.tr_min == gb.tr_max == 2 and gb.lam_min == gb.lam_max == 1


def test_global_bounds_enclose_grid_values():
    params = AbcParams.from_strings("0.3085", "0.3085", "0.617", "0.00125", "0.00125", "0.0025")
    gb = global_bounds_4d(params)
    g = np.linspace(0, 2 * math.pi, 241)
    for a in (0.30725, 0.30975):
        for c in (0.6145, 0.6195):
            trs = [trace_beta(x, y, a, a, c) for x in g for y in g]
            lms = [eig_beta(x, y, a, a, c)[1] for x in g for y in g]
            assert float(gb.t) <= min(trs) and max(trs) <= float(gb.T)
            assert float(gb.b) <= min(lms)
    with dec.exact():
        assert abs(gb.tr_min * gb.tr_max - 4) <= D("1e-35")
        assert abs(gb.lam_min * gb.lam_max - 1) <= D("1e-35")


def test_starting_points_are_diagonal_minimizers():
    params = AbcParams.from_strings("0.3085", "0.3085", "0.617", "0", "0", "0")
    g = np.linspace(0, 2 * math.pi, 200001)
    for kind, fn in (("least-lambda", lambda t: eig_beta(t, t, 0.3085, 0.3085, 0.617)[1]),
                     ("herman", lambda t: trace_beta(t, t, 0.3085, 0.3085, 0.617))):
        x0, x1 = starting_point(params, kind)
        assert x0 == x1
        assert fn(float(x0)) <= min(fn(t) for t in g) + 1e-6
    with pytest.raises(ValueError):
        starting_point(params, "nowhere")


def test_suite_is_stationary_when_unperturbed():
    gb = global_bounds_4d(AbcParams.from_strings("0", "0", "0", "0", "0", "0"))
    z = dec.Interval(0, 0)
    prev = initial_stats(gb)
    b = beta_eigen_bounds(z, z, z, z, z, z, BK)
    nxt = eigen_suite_step(b, prev, gb, BK)
    assert nxt.ub_lam_minus == gb.lam_max and suite_success(nxt, gb) is None


def test_suite_with_constant_diagonal_beta_follows_scalar_recursion():
    m, big_m = 1.2, 2.8
    gb = GlobalBounds(None, None, None, None, 2 * (big_m - math.sqrt(big_m**2 - 4)) / 2, 2 * (big_m + math.sqrt(big_m**2 - 4)) / 2,
                      (big_m - math.sqrt(big_m**2 - 4)) / 2, (big_m + math.sqrt(big_m**2 - 4)) / 2)
    st_ = initial_stats(gb)
    scalar = d_recursion_2d([m] * 10, m, big_m)
    for j in range(10):
        st_ = eigen_suite_step((2 * m, m, m), st_, gb, FB)
        if suite_success(st_, gb):
            break
        # beta = m I gives d_j = d I, so every bound is exact
        assert st_.ub_lam_minus == pytest.approx(scalar.d[j], rel=1e-12)
    assert suite_success(st_, gb) is not None and scalar.verdict == "no-minimizing-state"


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 0.5), st.floats(0.0, 0.5), st.floats(0.0, 1.0), st.floats(0, 6.3), st.floats(0, 6.3),
       st.floats(0.0, 0.3))
def test_suite_is_monotone_in_its_inputs(a, b, c, v0, v1, widen):
    gb = global_bounds_4d(AbcParams.from_strings("0.3", "0.3", "0.6", "0.01", "0.01", "0.02"), FB)
    from converse.backend import FInterval

    def bounds(w):
        s0 = FInterval(math.sin(v0) - w, math.sin(v0) + w)
        s1 = FInterval(math.sin(v1) - w, math.sin(v1) + w)
        s01 = FInterval(math.sin(v0 + v1) - w, math.sin(v0 + v1) + w)
        return beta_eigen_bounds(s0, s1, s01, FInterval(a), FInterval(b), FInterval(c), FB)

    narrow, wide = bounds(0.0), bounds(widen)
    assert all(w >= n - 1e-12 for n, w in zip(narrow, wide))
    prev = initial_stats(gb)
    try:
        sn = eigen_suite_step(narrow, prev, gb, FB)
        sw = eigen_suite_step(wide, prev, gb, FB)
    except SuiteVacuous:
        return
    assert sw.ub_lam_minus >= sn.ub_lam_minus - 1e-12


def test_eigen_closed_forms(rng):
    for _ in range(200):
        v0, v1 = rng.uniform(0, 7), rng.uniform(0, 7)
        a, b, c = rng.uniform(0, 0.5), rng.uniform(0, 0.5), rng.uniform(0, 1)
        tr, lm, lp = eig_beta(v0, v1, a, b, c)
        assert lm + lp == pytest.approx(tr, abs=1e-13)


def test_suite_rejects_non_positive_denominators():
    gb = GlobalBounds(0, 8, 0, 4, 0.5, 7.5, 0.3, 3.7)
    with pytest.raises(SuiteVacuous):
        eigen_suite_step((4.0, 2.0, 2.0), DiagStats(-0.1, 4.0), gb, FB)


def test_immediate_bounds():
    assert abs(immediate_threshold("trace") - 0.0435) < 1e-3
    assert abs(immediate_threshold("least-lambda") - 0.0278) < 1e-3


def test_avoidance_thresholds():
    assert abs(avoidance_threshold(Perturbation.TRIG) - 0.03856) < 1e-4
    assert abs(avoidance_threshold(Perturbation.POLY) - 0.04167) < 1e-4

import math
from decimal import Decimal as D

import numpy as np
import pytest

from converse import dec
from converse.backend import FloatBackend, RigorousBackend
from converse.maps import (M_POLY, M_TRIG, AbcParams, ExtPoint, Perturbation, StdFamily, abc_to_eps,
                           action_h, action_h_grad, beta_block, block_bounds, delay_step_2d, dg_abc,
                           eig_beta, eps_to_abc, g_abc, g_abc_float, gamma_block, grad_potential,
                           hess_potential, potential, std_step, trace_beta)

FB = FloatBackend()


def fd_jacobian(fn, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2 * h))
    return np.array(cols).T


def test_std_step_examples():
    assert std_step(0.25, 0.5, StdFamily(0.0)) == (0.75, 0.5)
    assert std_step(0.0, 0.3, StdFamily(1.7)) == (0.3, 0.3)


def test_std_step_preserves_area(rng):
    fam = StdFamily(1.3)
    for _ in range(100):
        x, p = rng.uniform(-1, 1), rng.uniform(-1, 1)
        j = fd_jacobian(lambda z: std_step(z[0], z[1], fam), [x, p])
        assert abs(np.linalg.det(j) - 1) < 1e-6


def test_zero_mean_default_force():
    assert abs(StdFamily(0.9).mean_f()) < 1e-12


def test_delay_step():
    assert delay_step_2d(0, 1, StdFamily(0.0)) == (1, 2)
    fam = StdFamily(0.8)
    # positions of two standard-map steps are one delay step
    x0, p0 = 0.3, 0.1
    x1, p1 = std_step(x0, p0, fam)
    x2, _ = std_step(x1, p1, fam)
    assert delay_step_2d(x0, x1, fam) == pytest.approx((x1, x2), abs=1e-14)


def test_delay_beta_is_the_derivative(rng):
    fam = StdFamily(0.7)
    for _ in range(50):
        v = rng.uniform(0, 1)
        fd = (delay_step_2d(0, v + 1e-6, fam)[1] - delay_step_2d(0, v - 1e-6, fam)[1]) / 2e-6
        assert abs(fd - fam.beta(v)) < 1e-6


def test_g_abc_examples():
    z = D(0)
    out = g_abc(ExtPoint(z, z, z, (z, z), (D(1), D(2))))
    assert out.u == (1, 2) and out.v == (2, 4)
    a, b, c = D("0.3"), D("0.2"), D("0.5")
    out = g_abc(ExtPoint(a, b, c, (D("0.1"), D("0.4")), (z, z)))
    assert out.v == (D("-0.1") + a + c, D("-0.4") + b + c)


def test_rigorous_and_float_maps_agree(rng):
    for _ in range(20):
        x = [D(str(round(rng.uniform(-3, 3), 10))) for _ in range(7)]
        y = g_abc(ExtPoint.from_tuple(x))
        assert np.allclose([float(v) for v in y.as_tuple()], g_abc_float(x), atol=1e-13)


def test_full_map_is_symplectic(rng):
    # (u, v) -> (v, v') is the delay form of (y, J) -> (y', J') with J = v - u
    a, b, c = 0.3, 0.25, 0.6
    omega = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])

    def yj_map(z):
        y, j = z[:2], z[2:]
        img = g_abc_float([a, b, c, *(y - j), *y])
        return np.concatenate([img[5:], img[5:] - img[3:5]])

    for _ in range(20):
        z = np.array([rng.uniform(0, 6.3) for _ in range(4)])
        jac = fd_jacobian(yj_map, z)
        assert np.allclose(jac.T @ omega @ jac, omega, atol=1e-6)


def test_blocks_at_special_points():
    beta = beta_block(1.0, 2.0, 0.0, 0.0, 0.0, FB)
    assert beta == [[2.0, 0.0], [0.0, 2.0]]
    beta = beta_block(math.pi / 2, math.pi / 2, 0.0, 0.0, 0.7, FB)
    assert abs(beta[0][1]) < 1e-15
    beta = beta_block(math.pi / 2, math.pi / 2, 0.3, 0.2, 0.0, FB)
    assert beta[0][0] == pytest.approx(1.7) and beta[1][1] == pytest.approx(1.8)


def test_dg_matches_finite_differences(rng):
    for _ in range(20):
        x = np.array([rng.uniform(0.1, 0.5), rng.uniform(0.1, 0.5), rng.uniform(0.1, 1.0)]
                     + [rng.uniform(0, 6.3) for _ in range(4)])
        assert np.allclose(np.array(dg_abc(x, FB)), fd_jacobian(g_abc_float, x), atol=1e-6)


def test_dg_structure():
    m = np.array(dg_abc([0, 0, 0, 0.1, 0.2, 0.3, 0.4], FB))
    assert np.array_equal(m[:3], np.eye(7)[:3])
    assert np.array_equal(m[3:, 3:], np.array([[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 2, 0], [0, -1, 0, 2]]))


def test_interval_blocks_contain_point_values(rng):
    bk = RigorousBackend(20)
    for _ in range(10):
        ac, bc, cc = rng.uniform(0.2, 0.4), rng.uniform(0.2, 0.4), rng.uniform(0.4, 0.8)
        lo0, lo1 = rng.uniform(0, 5), rng.uniform(0, 5)
        w = rng.uniform(0.01, 1)
        v0r = dec.Interval(dec.truncate(D(lo0), 12), dec.truncate(D(lo0 + w), 12))
        v1r = dec.Interval(dec.truncate(D(lo1), 12), dec.truncate(D(lo1 + w), 12))
        sr = v0r + v1r
        pr = [dec.Interval.around(dec.truncate(D(p), 12), D("0.001")) for p in (ac, bc, cc)]
        bb = block_bounds(v0r, v1r, sr, *pr, bk)
        for t0 in np.linspace(lo0, lo0 + w, 10):
            for t1 in np.linspace(lo1, lo1 + w, 10):
                t0c = min(max(t0, float(v0r.lb)), float(v0r.ub))
                t1c = min(max(t1, float(v1r.lb)), float(v1r.ub))
                pb = beta_block(t0c, t1c, ac, bc, cc, FB)
                pg = gamma_block(t0c, t1c, FB)
                for i in range(2):
                    for j in range(2):
                        assert float(bb.beta[i][j].lb) - 1e-12 <= pb[i][j] <= float(bb.beta[i][j].ub) + 1e-12
                    for j in range(3):
                        assert float(bb.gamma[i][j].lb) - 1e-12 <= pg[i][j] <= float(bb.gamma[i][j].ub) + 1e-12
    whole = dec.Interval(0, D(7))
    a = dec.Interval(D("0.3"), D("0.3"))
    bb = block_bounds(whole, whole, whole + whole, a, a, dec.Interval(D("0.6"), D("0.6")), bk)
    assert bb.beta[0][0].subset_of(dec.Interval(D("2") - D("0.9") - D("1e-19"), D("2.9") + D("1e-19")))


def test_trace_forms_agree(rng):
    for _ in range(100):
        v0, v1 = rng.uniform(0, 6.3), rng.uniform(0, 6.3)
        a, b, c = rng.uniform(0, 0.5), rng.uniform(0, 0.5), rng.uniform(0, 1)
        m = np.array(beta_block(v0, v1, a, b, c, FB))
        assert trace_beta(v0, v1, a, b, c) == pytest.approx(np.trace(m), abs=1e-14)
        tr, lm, lp = eig_beta(v0, v1, a, b, c)
        assert np.allclose(sorted(np.linalg.eigvalsh(m)), [lm, lp], atol=1e-12)


def test_normalizations():
    grid = np.linspace(0, 1, 401)
    for kind in (Perturbation.TRIG, Perturbation.POLY):
        peak = max(abs(potential((x, y), kind)) for x in grid for y in grid)
        assert abs(peak - 1) < 1e-4
    assert abs(M_TRIG - 4 * 0.0275 * math.pi**2 / 0.617) < 2e-3
    assert M_POLY == 1 / 4096


def test_potential_derivatives(rng):
    for kind in Perturbation:
        for _ in range(20):
            x = np.array([rng.uniform(0.05, 0.45), rng.uniform(0.55, 0.95)])
            g = fd_jacobian(lambda z: [potential(z, kind)], x)[0]
            assert np.allclose(grad_potential(x, kind), g, atol=1e-6)
            h = fd_jacobian(lambda z: grad_potential(z, kind), x)
            assert np.allclose(hess_potential(x, kind), h, atol=1e-5)


def test_generating_function(rng):
    assert action_h((0.2, 0.3), (0.2, 0.3), 0.0) == 0.0
    assert action_h((0.0, 0.0), (0.3, 0.4), 0.0) == pytest.approx(0.125)
    for _ in range(20):
        x, xp = np.array([rng.uniform(0, 1) for _ in range(2)]), np.array([rng.uniform(0, 1) for _ in range(2)])
        gx, gxp = action_h_grad(x, xp, 0.02)
        fx = fd_jacobian(lambda z: [action_h(z, xp, 0.02)], x)[0]
        fxp = fd_jacobian(lambda z: [action_h(x, z, 0.02)], xp)[0]
        assert np.allclose(gx, fx, atol=1e-6) and np.allclose(gxp, fxp, atol=1e-6)


def test_eps_conversion_reproduces_the_input_box():
    box = AbcParams.from_strings("0.3085", "0.3085", "0.617", "0.00125", "0.00125", "0.0025")
    for eps in (0.0274, 0.0276):
        a, b, c = eps_to_abc(eps)
        assert abs(a - 0.3085) <= 0.00125 and abs(c - 0.617) <= 0.0025
    assert abc_to_eps(eps_to_abc(0.0275)[0]) == pytest.approx(0.0275)
    lo, hi = box.eps_range()
    assert lo <= 0.0274 and hi >= 0.0276


def test_half_widths_must_be_non_negative():
    with pytest.raises(ValueError):
        AbcParams.from_strings("0.3", "0.3", "0.6", "-0.1", "0", "0")

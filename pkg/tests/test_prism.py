import math
import random
from decimal import Decimal as D

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from containment import SLACK, containment_trial, eta_coordinates, random_box, sample_eta, short
from converse import dec
from converse.backend import FloatBackend, RigorousBackend
from converse.maps import g_abc_float
from converse.prism import (Prism, PrismParseError, SingularMatrixError, Status, bound_image, bound_lift_1d,
                            column_rotor_fatten, dg_times_p, mat_sum, matmul_exact, prism_from_lines,
                            prism_to_lines, rgauss, row_sum, truncate_prism)

BK = RigorousBackend()
Z = D(0)

small_ints = st.integers(-1000, 1000).map(lambda n: D(n) / 100)
mat3 = st.lists(st.lists(small_ints, min_size=3, max_size=3), min_size=3, max_size=3)


def test_row_and_matrix_sums():
    assert row_sum([[1, -2], [3, 4]], 0) == 3
    assert mat_sum([[D(int(i == j)) for j in range(5)] for i in range(5)]) == 5


@settings(max_examples=100, deadline=None)
@given(mat3, mat3)
def test_mat_sum_is_submultiplicative(a, b):
    assert mat_sum(matmul_exact(a, b)) <= mat_sum(a) * mat_sum(b)


def test_rgauss_identity_and_integer_inverse():
    eye = [[D(int(i == j)) for j in range(4)] for i in range(4)]
    res = rgauss(eye, 30)
    assert res.approx_inverse == eye and res.delta <= dec.ulp(30)
    res = rgauss([[D(2), D(1)], [D(1), D(1)]], 30)
    for row, want in zip(res.approx_inverse, [[1, -1], [-1, 2]]):
        assert all(abs(x - w) <= res.delta for x, w in zip(row, want))


def test_rgauss_residual_by_exact_product(rng):
    for _ in range(20):
        m = [[short(rng.uniform(-2, 2), 10) + (2 if i == j else 0) for j in range(4)] for i in range(4)]
        res = rgauss(m, 50, precision=40)
        prod = matmul_exact(m, res.approx_inverse)
        with dec.exact():
            err = max(abs(prod[i][j] - (i == j)) for i in range(4) for j in range(4))
        assert err <= res.residual_bound(m) <= dec.ulp(40)


def test_rgauss_detects_singular_matrices():
    with pytest.raises(SingularMatrixError):
        rgauss([[D(1), D(2)], [D(2), D(4)]], 30)
    with pytest.raises(ValueError):
        rgauss([[D(1), D(2)]], 30)


def test_fixed_fattener_keeps_parameter_factors_at_one(rng):
    for _ in range(5):
        ib = bound_image(random_box(rng), BK, "fixed")
        assert ib.w[:3] == [1, 1, 1]
        assert all(w > 0 for w in ib.w[3:])


def test_integrable_image_is_the_affine_image():
    bk = RigorousBackend(w_digits=60)
    s = Prism.box([Z, Z, Z, D("0.3"), D("1.1"), D("2.0"), D("0.4")],
                  [Z, Z, Z, Z, Z, D("0.05"), D("0.3")])
    ib = bound_image(s, bk, "fixed")
    # u' = v, v' = 2v - u
    assert ib.prism.center[3:] == (D("2.0"), D("0.4"), D("3.7"), D("-0.3"))
    for k in (5, 6):
        assert 0 <= ib.w[k] - 1 <= 2 * dec.ulp(bk.dp)
    m = ib.a
    assert (m[3][5], m[4][6], m[5][5], m[6][6]) == (D("0.05"), D("0.3"), D("0.10"), D("0.6"))


def test_rotor_leaves_orthogonal_columns_alone():
    a = [[D(int(i == j)) for j in range(7)] for i in range(7)]
    assert column_rotor_fatten(a, bk=BK) == a


def test_rotor_separates_parallel_columns():
    a = [[Z] * 7 for _ in range(7)]
    for i in range(3):
        a[i][i] = D(1)
    for i, col in ((3, [1, 0, 0, 0]), (4, [2, 0, 0, 0]), (5, [0, 0, 1, 0]), (6, [0, 0, 0, 1])):
        for r, x in enumerate(col):
            a[3 + r][i] = D(x)
    out = column_rotor_fatten(a, math.radians(27), bk=FloatBackend())
    c3 = np.array([float(out[r][3]) for r in range(3, 7)])
    c4 = np.array([float(out[r][4]) for r in range(3, 7)])
    ang = math.acos(abs(c3 @ c4) / np.linalg.norm(c3) / np.linalg.norm(c4))
    assert ang >= math.radians(27) - 1e-9
    # the shorter column moved, the longer one stayed and lengths are kept
    assert np.allclose(c4, [2, 0, 0, 0]) and np.linalg.norm(c3) == pytest.approx(1)


def test_smaller_rotor_angle_gives_a_thinner_prism():
    rng = random.Random(3)
    for _ in range(5):
        s1 = bound_image(random_box(rng), BK, "fixed").prism
        vols = []
        for deg in (27, 90):
            p = bound_image(s1, BK, "rotor", math.radians(deg)).prism
            vols.append(abs(np.linalg.det(np.array([[float(p.matrix[i][j]) for j in range(3, 7)]
                                                     for i in range(3, 7)]))))
        # 27 degrees lets the columns follow the contraction; 90 forces a box
        assert vols[0] <= vols[1] * 1.5


def test_monte_carlo_containment_small():
    rng = random.Random(11)
    total, worst = 0, 0.0
    for _ in range(6):
        n, w = containment_trial(rng, 500)
        total, worst = total + n, max(worst, w)
    assert total == 6000 and worst <= 1 + SLACK


def test_float_backend_bounds_agree_with_rigorous():
    rng = random.Random(4)
    s = random_box(rng)
    r = bound_image(s, BK, "fixed")
    f = bound_image(s.to_float(), FloatBackend(), "fixed")
    assert np.allclose([float(x) for x in r.w], f.w, rtol=1e-4)


def test_truncation_moves_points_by_at_most_seven_units():
    rng = random.Random(7)
    s = random_box(rng)
    s = bound_image(s, BK, "fixed").prism
    t = truncate_prism(s, 12)
    assert truncate_prism(t, 12) == t
    eta = [D(rng.choice([-1, 1])) for _ in range(7)]
    with dec.exact():
        for i in range(7):
            drift = abs(sum(x * e for x, e in zip(s.matrix[i], eta)) - sum(x * e for x, e in zip(t.matrix[i], eta)))
            assert drift <= 7 * dec.ulp(12)


def test_truncated_prism_still_contains_image_after_widening():
    rng = random.Random(9)
    s = random_box(rng)
    img = bound_image(s, BK, "fixed").prism
    t = truncate_prism(img, 30)
    pts = np.array([s.point(e) for e in sample_eta(rng, 2000)])
    eta = eta_coordinates(t, np.array([g_abc_float(p) for p in pts]))
    assert np.abs(eta).max() <= 1 + SLACK


def test_lift_example_contains_fine_samples():
    bk = RigorousBackend()
    omega, eps = D("0.3"), D("0.8")
    for c, r in ((D("0.25"), D("0.1")), (D("0.6"), D("0.02")), (D("-0.1"), D("0.2"))):
        img_c, img_r = bound_lift_1d(c, r, omega, eps, bk)
        xs = np.linspace(float(c - r), float(c + r), 20001)
        ys = xs + 0.3 + 0.8 / (2 * math.pi) * np.sin(2 * math.pi * xs)
        assert float(img_c - img_r) <= ys.min() and ys.max() <= float(img_c + img_r)
        # and not absurdly loose
        assert float(2 * img_r) <= 2.5 * (ys.max() - ys.min()) + 1e-9


def test_dg_times_p_matches_float_jacobian():
    rng = random.Random(2)
    s = random_box(rng)
    a = np.array([[float(x) for x in r] for r in dg_times_p(s.center, s.matrix, BK)])
    from converse.maps import dg_abc

    want = np.array(dg_abc([float(x) for x in s.center], FloatBackend())) @ np.array(
        [[float(x) for x in r] for r in s.matrix])
    assert np.allclose(a, want, atol=1e-12)


def test_prism_text_round_trip():
    s = random_box(random.Random(1))
    s.status, s.n_cuts, s.cut_history = Status.MAYBE, 2, ("v0-", "c+")
    assert prism_from_lines(prism_to_lines(s)) == s


@pytest.mark.parametrize("k, bad, lineno", [(0, "prism-v0 UNTRIED 0 -", 10), (0, "prism-v1 WHAT 0 -", 10),
                                             (1, "center 1 2", 11), (4, "row 1 2 3 4 5 6 x", 14)])
def test_prism_parse_errors_name_the_line(k, bad, lineno):
    lines = prism_to_lines(random_box(random.Random(1)))
    lines[k] = bad
    with pytest.raises(PrismParseError) as err:
        prism_from_lines(lines, first_lineno=10)
    assert err.value.lineno == lineno


def test_prism_shape_is_checked():
    with pytest.raises(ValueError):
        Prism([0] * 6, [[0] * 7] * 7)

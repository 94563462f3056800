"""Non-existence criteria: the 2-D tests and the 4-D cone machinery."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np
from scipy import optimize

from . import dec
from .backend import FloatBackend, RigorousBackend
from .maps import (AbcParams, Perturbation, StdFamily, eig_beta, hess_potential,
                   potential, trace_beta)

# ------------------------------------------------------------------ 2-D


def flux_test(fam: StdFamily, n: int = 4096, tol: float = 1e-9) -> str:
    """'no-circles' when f has non-zero mean, else 'inconclusive'."""
    return "no-circles" if abs(fam.mean_f(n)) > tol else "inconclusive"


def min_beta(fam: StdFamily, n: int = 20000) -> float:
    xs = (np.arange(n) + 0.5) / n
    vals = [fam.beta(x) for x in xs]
    i = int(np.argmin(vals))
    res = optimize.minimize_scalar(fam.beta, bounds=(xs[i] - 1.0 / n, xs[i] + 1.0 / n), method="bounded",
                                   options={"xatol": 1e-12})
    return float(min(vals[i], res.fun))


def criterion1(fam: StdFamily) -> str:
    """No rotational circles when beta = 2 + f' goes negative somewhere."""
    return "no-circles" if min_beta(fam) < 0 else "inconclusive"


def criterion1_threshold_std() -> Fraction:
    """k above which criterion1 fires for the standard map.

    beta = 2 - k cos(2 pi x) has minimum 2 - k.
    """
    return Fraction(2)


def uniform_cone_2d(m, dp: int = 40) -> tuple:
    """(l_-, l_+) = roots of l^2 - M l + 1, l_- rounded down, l_+ up."""
    m = dec.to_dec(m)
    if m < 2:
        raise dec.DomainError("uniform cone needs M >= 2")
    bk = RigorousBackend(dp, 0)
    with dec.exact():
        d = m * m - 4
        lo = (m - bk.sqrt_up(d)) * dec.Decimal("0.5")
        hi = (m + bk.sqrt_up(d)) * dec.Decimal("0.5")
    return dec.round_down(lo, dp), dec.round_up(hi, dp)


def criterion2(m, big_m, dp: int = 40) -> str:
    """'no-circles' iff l_- > m - 1/l_+ (strict)."""
    m = dec.to_dec(m)
    lm, lp = uniform_cone_2d(big_m, dp)
    # conservative: l_- low, 1/l_+ low
    rhs = dec.EXACT.subtract(m, dec.div_down(dec.ONE, lp, dp))
    return "no-circles" if lm > rhs else "inconclusive"


def criterion2_threshold_std() -> Fraction:
    """k above which criterion2 fires for m = 2 - k, M = 2 + k.

    With l_- l_+ = 1 the test is 2 l_- > 2 - k, i.e. 2 + k - sqrt(k^2 + 4k)
    > 2 - k, i.e. 4k^2 > k^2 + 4k; the positive root is k = 4/3.
    """
    import sympy as sp

    k = sp.symbols("k", positive=True)
    roots = sp.solve(sp.Eq(4 * k**2, k**2 + 4 * k), k)
    return Fraction(str(roots[0]))


@dataclass
class DRecursionResult:
    verdict: str
    steps: int
    d: list


def d_recursion_2d(betas: Iterable, m: float, big_m: float, max_steps: int | None = None) -> DRecursionResult:
    """d_{j+1} = beta_{j+1} - 1/d_j from d_{-1} = l_+.

    ``betas`` holds numbers or (lo, hi) pairs; pairs use the upper end.
    Stops with 'no-minimizing-state' once d drops below l_- or below 0.
    """
    r = math.sqrt(big_m * big_m - 4)
    lm, lp = (big_m - r) / 2, (big_m + r) / 2
    d = lp
    seq = []
    for j, b in enumerate(betas):
        if max_steps is not None and j >= max_steps:
            break
        ub = b[1] if isinstance(b, (tuple, list)) else b
        d = ub - 1.0 / d
        seq.append(d)
        if d < lm - 1e-15 or d < 0:
            return DRecursionResult("no-minimizing-state", j + 1, seq)
    return DRecursionResult("inconclusive", len(seq), seq)


# ------------------------------------------------------------------ 4-D

NEWT_TOL_FACTOR = 1e-9
N_DIM = 2


@dataclass(frozen=True)
class GlobalBounds:
    t: object
    T: object
    b: object
    B: object
    tr_min: object
    tr_max: object
    lam_min: object
    lam_max: object


def _newton_extremum(fn, grad, hess, x0, tol, max_iter=60):
    x = np.array(x0, dtype=float)
    for _ in range(max_iter):
        g = grad(x)
        if np.linalg.norm(g) < tol:
            return x, True
        try:
            step = np.linalg.solve(hess(x), g)
        except np.linalg.LinAlgError:
            return x, False
        x = x - step
    return x, np.linalg.norm(grad(x)) < tol


def _grid_min(fn, n=721):
    g = np.linspace(0, 2 * np.pi, n)
    best = min(((fn(x, y), x, y) for x in g[::4] for y in g[::4]))
    return np.array(best[1:])


def _tr_parts(a, b, c):
    def f(x):
        return trace_beta(x[0], x[1], a, b, c)

    def g(x):
        s = math.cos(x[0] + x[1])
        return np.array([-a * math.cos(x[0]) - 2 * c * s, -b * math.cos(x[1]) - 2 * c * s])

    def h(x):
        s = math.sin(x[0] + x[1])
        return np.array([[a * math.sin(x[0]) + 2 * c * s, 2 * c * s],
                         [2 * c * s, b * math.sin(x[1]) + 2 * c * s]])

    return f, g, h


def _lam_minus(x, a, b, c):
    return eig_beta(x[0], x[1], a, b, c)[1]


def _min_trace(a, b, c):
    f, g, h = _tr_parts(a, b, c)
    tol = NEWT_TOL_FACTOR * (abs(a) + abs(b) + abs(c)) if (a or b or c) else 1e-12
    best = None
    # Newton only finds critical points; also start from a coarse grid minimum
    for x0 in ((math.pi / 2, math.pi / 2), tuple(_grid_min(lambda p, q: f((p, q))))):
        x, ok = _newton_extremum(f, g, h, x0, tol)
        if ok and (best is None or f(x) < f(best)):
            best = x
    return best if best is not None else _grid_min(lambda p, q: f((p, q)))


def _min_lam(a, b, c):
    fn = lambda x: _lam_minus(x, a, b, c)  # noqa: E731
    tol = NEWT_TOL_FACTOR * (abs(a) + abs(b) + abs(c)) if (a or b or c) else 1e-12
    best = None
    for x0 in ((math.pi / 2, math.pi / 2), tuple(_grid_min(lambda p, q: fn((p, q))))):
        r = optimize.minimize(fn, x0, method="BFGS", options={"gtol": tol})
        if best is None or r.fun < best.fun:
            best = r
    return best.x


@lru_cache(maxsize=256)
def _extrema_points(a: float, b: float, c: float):
    return tuple(_min_trace(a, b, c)), tuple(_min_lam(a, b, c))


def global_bounds_4d(params: AbcParams, bk=None) -> GlobalBounds:
    """Cone constants valid for every parameter in the box.

    V_abc is odd, so max Tr beta = 8 - min Tr beta and
    max lambda_+(beta) = 4 - min lambda_-(beta); the minima come from a
    double-precision Newton search with tolerance
    1e-9 (|a| + |b| + |c|), and the margins below absorb both the search
    error and the parameter half-widths.
    """
    bk = bk or RigorousBackend()
    ac, bc, cc = (float(x) for x in params.centers)
    xt, xl = _extrema_points(ac, bc, cc)
    with bk.context():
        a, b, c = (bk.num(x) for x in params.centers)
        da, db, dc = (bk.num(x) for x in params.widths)
        x0, x1 = bk.num(float(xt[0])), bk.num(float(xt[1]))
        err = (abs(a) + abs(b) + 2 * abs(c)) * bk.trig_err
        tr_at = 4 - a * bk.sin(x0) - b * bk.sin(x1) - 2 * c * bk.sin(x0 + x1)
        margin = (abs(a) + abs(b) + 2 * abs(c)) * bk.num("1e-6") + da + db + 2 * dc
        t = tr_at - err - margin
        big_t = 8 - t
        y0, y1 = bk.num(float(xl[0])), bk.num(float(xl[1]))
        s0, s1, s01 = bk.sin(y0), bk.sin(y1), bk.sin(y0 + y1)
        tr_l = 4 - a * s0 - b * s1 - 2 * c * s01
        disc = (a * s0 - b * s1) ** 2 + 4 * (c * s01) ** 2
        # lambda_- = (tr - sqrt(disc))/2; push it down for the lower bound
        lam = (tr_l - err - bk.sqrt_up(disc) - 4 * err) / 2
        b_low = lam - margin
        big_b = 4 - b_low
        half = bk.num("0.5")
        rt = bk.sqrt_up(big_t * big_t - 4 * N_DIM * N_DIM)
        rb = bk.sqrt_up(big_b * big_b - 4)
        tr_min = (big_t - rt) * half
        tr_max = (big_t + rt) * half
        lam_min = (big_b - rb) * half
        lam_max = (big_b + rb) * half
        if bk.rigorous:
            p = bk.precision
            tr_min, lam_min = dec.round_down(tr_min, p), dec.round_down(lam_min, p)
            tr_max, lam_max = dec.round_up(tr_max, p), dec.round_up(lam_max, p)
            t, b_low = dec.round_down(t, p), dec.round_down(b_low, p)
            big_t, big_b = dec.round_up(big_t, p), dec.round_up(big_b, p)
    return GlobalBounds(t, big_t, b_low, big_b, tr_min, tr_max, lam_min, lam_max)


def _diag_minimizer(fn) -> float:
    g = np.linspace(0, 2 * np.pi, 4001)
    i = int(np.argmin([fn(x) for x in g]))
    h = g[1] - g[0]
    res = optimize.minimize_scalar(fn, bounds=(g[i] - h, g[i] + h), method="bounded", options={"xatol": 1e-12})
    x = res.x if res.fun <= fn(g[i]) else g[i]
    return float(x) % (2 * np.pi)


def starting_point(params: AbcParams, kind: str = "least-lambda", places: int = 20):
    """Point on the diagonal v0 = v1 minimizing lambda_-(beta) or Tr beta.

    Returned as a pair of identical Dec values; exact optimality is not
    needed, the diagonal constraint is.
    """
    a, b, c = (float(x) for x in params.centers)
    if kind == "least-lambda":
        fn = lambda th: eig_beta(th, th, a, b, c)[1]  # noqa: E731
    elif kind == "herman":
        fn = lambda th: trace_beta(th, th, a, b, c)  # noqa: E731
    else:
        raise ValueError(f"unknown starting point {kind!r}")
    th = dec.truncate(dec.Decimal(_diag_minimizer(fn)), places)
    return th, th


@dataclass(frozen=True)
class DiagStats:
    ub_lam_minus: object
    ub_trace: object
    winner: str | None = None


CRITERIA = ("trace", "maxBlam", "minBlam")


def initial_stats(gb: GlobalBounds) -> DiagStats:
    return DiagStats(gb.lam_max, gb.tr_max)


class SuiteVacuous(Exception):
    pass


def beta_eigen_bounds(s0, s1, s01, ar, br, cr, bk):
    """Upper bounds on Tr beta, lambda_+(beta), lambda_-(beta) over a set."""
    with bk.context():
        tr = 4 - ar * s0 - br * s1 - 2 * (cr * s01)
        diff = ar * s0 - br * s1
        disc = diff.square() + 4 * (cr * s01).square()
        half = bk.num("0.5")
        ub_tr = tr.ub
        ub_lp = (ub_tr + bk.sqrt_up(disc.ub)) * half
        ub_lm = (ub_tr - bk.sqrt_down(disc.lb)) * half
    return ub_tr, ub_lp, ub_lm


def eigen_suite_step(bounds: tuple, prev: DiagStats, gb: GlobalBounds, bk) -> DiagStats:
    """One step of the three-inequality bound on lambda_-(d_j).

    ``bounds`` is (ub Tr beta, ub lambda_+ beta, ub lambda_- beta) over
    the relevant set.  The new bound is the best of

        trace:   ub Tr beta / n - n / ub Tr d
        maxBlam: ub lambda_+ beta - 1 / ub lambda_- d
        minBlam: ub lambda_- beta - 1 / (ub Tr d - (n-1) lambda_-min)

    clipped at lambda_-max (trace clipped at Tr_max).
    """
    ub_tr, ub_lp, ub_lm = bounds
    n = N_DIM
    with bk.context():
        lam, tr = prev.ub_lam_minus, prev.ub_trace
        den3 = tr - (n - 1) * gb.lam_min
        if lam <= 0 or tr <= 0 or den3 <= 0:
            raise SuiteVacuous("denominators in the suite are not positive")
        new_tr = ub_tr - bk.div_down(n * n * bk.one, tr)
        c1 = ub_tr * bk.num("0.5") - bk.div_down(n * bk.one, tr)
        c2 = ub_lp - bk.div_down(bk.one, lam)
        c3 = ub_lm - bk.div_down(bk.one, den3)
        cands = (c1, c2, c3)
        k = min(range(3), key=lambda i: (cands[i], i))
        best = cands[k]
        lam_new = min(best, gb.lam_max)
        tr_new = min(new_tr, gb.tr_max)
    return DiagStats(lam_new, tr_new, CRITERIA[k])


def suite_success(st: DiagStats, gb: GlobalBounds) -> str | None:
    if st.ub_lam_minus < gb.lam_min:
        return st.winner
    if st.ub_trace < gb.tr_min:
        return "trace"
    return None


# -------------------------------------------------------- immediate bounds


def _float_bounds(eps: float) -> tuple:
    params = AbcParams.from_strings(*[repr(x) for x in _abc(eps)], "0", "0", "0")
    return params, global_bounds_4d(params, FloatBackend())


def _abc(eps):
    from .maps import eps_to_abc

    return eps_to_abc(eps)


def immediate_margin(eps: float, kind: str) -> float:
    """Negative when the first suite step already certifies at eps."""
    params, gb = _float_bounds(eps)
    a, b, c = _abc(eps)
    if kind == "trace":
        th = float(starting_point(params, "herman")[0])
        tr = trace_beta(th, th, a, b, c)
        return (tr - N_DIM * N_DIM / gb.tr_max) - gb.tr_min
    th = float(starting_point(params, "least-lambda")[0])
    tr, lm, lp = eig_beta(th, th, a, b, c)
    c2 = lp - 1 / gb.lam_max
    c3 = lm - 1 / (gb.tr_max - gb.lam_min)
    return min(c2, c3) - gb.lam_min


def immediate_threshold(kind: str) -> float:
    """Smallest eps certified at x* without following any orbit."""
    lo, hi = (0.01, 0.08)
    return optimize.brentq(lambda e: immediate_margin(e, kind), lo, hi, xtol=1e-10)


# ------------------------------------------------------------- avoidance


def _potential_min(kind: Perturbation):
    g = np.linspace(0, 1, 201)
    vals = [(potential((x, y), kind), x, y) for x in g for y in g]
    _, x, y = min(vals)
    res = optimize.minimize(lambda z: potential(z, kind), [x, y], method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    return res.x


def avoidance_threshold(kind: Perturbation = Perturbation.TRIG) -> float:
    """eps where 2 I - eps Hess V stops being positive definite at V's minimum."""
    x = _potential_min(kind)
    mu = float(np.max(np.linalg.eigvalsh(hess_potential(x, kind))))
    return 2.0 / mu


__all__ = [
    "flux_test", "criterion1", "criterion1_threshold_std", "uniform_cone_2d", "criterion2",
    "criterion2_threshold_std", "d_recursion_2d", "DRecursionResult", "GlobalBounds",
    "global_bounds_4d", "starting_point", "DiagStats", "initial_stats", "SuiteVacuous",
    "beta_eigen_bounds", "eigen_suite_step", "suite_success", "immediate_margin",
    "immediate_threshold", "avoidance_threshold", "min_beta", "CRITERIA",
]

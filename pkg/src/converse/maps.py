"""Standard-type maps, the three-parameter 4-D map and their derivatives.

Angles in the 4-D map are radians: the map studied in the proofs is

    u' = v,    v' = 2v - u - grad V_abc(v),
    V_abc(y) = -a sin y0 - b sin y1 - c sin(y0 + y1),

which is the trigonometric perturbation written in 2*pi-scaled
coordinates with a = b = 2 pi^2 eps / M_trig and c = 2a.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from . import dec
from .backend import FloatBackend, RigorousBackend
from .dec import Interval

# max over the torus of |1/2 (sin 2pi x0 + sin 2pi x1) + sin 2pi (x0+x1)|,
# attained on the diagonal at cos(2 pi x) = (sqrt(33) - 1)/8
_C = (math.sqrt(33.0) - 1.0) / 8.0
M_TRIG = math.sqrt(1.0 - _C * _C) * (1.0 + 2.0 * _C)
# max |x0^2 (1-x0)^2 (x0-3/4)(1/4-x0) x1^2 (1-x1)^2|, attained at (1/2, 1/2)
M_POLY = 1.0 / 4096.0

PARAM_NAMES = ("a", "b", "c")


# ---------------------------------------------------------------- 2-D family


def _default_f(k):
    return lambda x: -(k / (2 * math.pi)) * math.sin(2 * math.pi * x)


@dataclass
class StdFamily:
    """Area-preserving twist maps p' = p + f(x), x' = x + p'."""

    k: float
    f: Callable[[float], float] | None = None
    df: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.f is None:
            k = self.k
            self.f = _default_f(k)
            self.df = lambda x: -k * math.cos(2 * math.pi * x)

    def beta(self, x: float) -> float:
        """d x_{n+1} / d x_n along the delay map: 2 + f'(x)."""
        if self.df is None:
            h = 1e-6
            return 2.0 + (self.f(x + h) - self.f(x - h)) / (2 * h)
        return 2.0 + self.df(x)

    def mean_f(self, n: int = 4096) -> float:
        xs = (np.arange(n) + 0.5) / n
        return float(np.mean([self.f(x) for x in xs]))


def std_step(x, p, fam: StdFamily):
    x, p = float(x), float(p)
    p1 = p + fam.f(x)
    return x + p1, p1


def delay_step_2d(u, v, fam: StdFamily):
    u, v = float(u), float(v)
    return v, 2 * v - u + fam.f(v)


# ---------------------------------------------------------------- 4-D family


class Perturbation(Enum):
    TRIG = "trigonometric"
    POLY = "polynomial"
    FF = "fast-froschle"


def _cubic(x):
    x = x % 1.0
    if x <= 0.5:
        return 1 - 24 * x**2 + 32 * x**3
    return 9 - 48 * x + 72 * x**2 - 32 * x**3


def _dcubic(x):
    x = x % 1.0
    if x <= 0.5:
        return -48 * x + 96 * x**2
    return -48 + 144 * x - 96 * x**2


def _d2cubic(x):
    x = x % 1.0
    if x <= 0.5:
        return -48 + 192 * x
    return 144 - 192 * x


def _poly_f(x):
    x = x % 1.0
    return x**2 * (1 - x) ** 2 * (x - 0.75) * (0.25 - x)


def _poly_g(x):
    x = x % 1.0
    return x**2 * (1 - x) ** 2


def _poly_df(x):
    x = x % 1.0
    # d/dx [x^2 (1-x)^2 (x - 3/4)(1/4 - x)]
    q = x * x * (1 - x) ** 2
    dq = 2 * x * (1 - x) ** 2 - 2 * x * x * (1 - x)
    r = (x - 0.75) * (0.25 - x)
    dr = (0.25 - x) - (x - 0.75)
    return dq * r + q * dr


def _poly_d2f(x):
    x = x % 1.0
    q = x * x * (1 - x) ** 2
    dq = 2 * x * (1 - x) ** 2 - 2 * x * x * (1 - x)
    d2q = 2 * (1 - x) ** 2 - 8 * x * (1 - x) + 2 * x * x
    r = (x - 0.75) * (0.25 - x)
    dr = 1.0 - 2 * x
    d2r = -2.0
    return d2q * r + 2 * dq * dr + q * d2r


def _poly_dg(x):
    x = x % 1.0
    return 2 * x * (1 - x) ** 2 - 2 * x * x * (1 - x)


def _poly_d2g(x):
    x = x % 1.0
    return 2 * (1 - x) ** 2 - 8 * x * (1 - x) + 2 * x * x


def potential(x, kind: Perturbation = Perturbation.TRIG) -> float:
    """V(x) on the torus with coordinates in units of the period."""
    x0, x1 = float(x[0]), float(x[1])
    tp = 2 * math.pi
    if kind is Perturbation.TRIG:
        return -(0.5 * (math.sin(tp * x0) + math.sin(tp * x1)) + math.sin(tp * (x0 + x1))) / M_TRIG
    if kind is Perturbation.POLY:
        return -_poly_f(x0) * _poly_g(x1) / M_POLY
    return -0.5 * (0.5 * (_cubic(x0) + _cubic(x1)) + _cubic(x0 + x1))


def grad_potential(x, kind: Perturbation = Perturbation.TRIG) -> np.ndarray:
    x0, x1 = float(x[0]), float(x[1])
    tp = 2 * math.pi
    if kind is Perturbation.TRIG:
        s = math.cos(tp * (x0 + x1))
        return -tp * np.array([0.5 * math.cos(tp * x0) + s, 0.5 * math.cos(tp * x1) + s]) / M_TRIG
    if kind is Perturbation.POLY:
        return -np.array([_poly_df(x0) * _poly_g(x1), _poly_f(x0) * _poly_dg(x1)]) / M_POLY
    s = _dcubic(x0 + x1)
    return -0.5 * np.array([0.5 * _dcubic(x0) + s, 0.5 * _dcubic(x1) + s])


def hess_potential(x, kind: Perturbation = Perturbation.TRIG) -> np.ndarray:
    x0, x1 = float(x[0]), float(x[1])
    tp = 2 * math.pi
    if kind is Perturbation.TRIG:
        s = math.sin(tp * (x0 + x1))
        h00 = 0.5 * math.sin(tp * x0) + s
        h11 = 0.5 * math.sin(tp * x1) + s
        return tp * tp * np.array([[h00, s], [s, h11]]) / M_TRIG
    if kind is Perturbation.POLY:
        h00 = _poly_d2f(x0) * _poly_g(x1)
        h01 = _poly_df(x0) * _poly_dg(x1)
        h11 = _poly_f(x0) * _poly_d2g(x1)
        return -np.array([[h00, h01], [h01, h11]]) / M_POLY
    s = _d2cubic(x0 + x1)
    return -0.5 * np.array([[0.5 * _d2cubic(x0) + s, s], [s, 0.5 * _d2cubic(x1) + s]])


def action_h(x, xp, eps: float, kind: Perturbation = Perturbation.TRIG) -> float:
    """Generating function H(x, x') = |x' - x|^2 / 2 - eps V(x)."""
    d = np.asarray(xp, dtype=float) - np.asarray(x, dtype=float)
    return 0.5 * float(d @ d) - eps * potential(x, kind)


def action_h_grad(x, xp, eps: float, kind: Perturbation = Perturbation.TRIG):
    """(dH/dx, dH/dx')."""
    d = np.asarray(xp, dtype=float) - np.asarray(x, dtype=float)
    return -d - eps * grad_potential(x, kind), d


def action_h_2d(x, xp, k: float) -> float:
    """Standard-map generating function (x' - x)^2/2 + (k/4pi^2) cos 2pi x."""
    return 0.5 * (xp - x) ** 2 + k / (4 * math.pi**2) * math.cos(2 * math.pi * x)


# ----------------------------------------------------- (a, b, c) parameters


def eps_to_abc(eps: float) -> tuple[float, float, float]:
    a = 2 * math.pi**2 * eps / M_TRIG
    return a, a, 2 * a


def abc_to_eps(a: float) -> float:
    return a * M_TRIG / (2 * math.pi**2)


@dataclass(frozen=True)
class AbcParams:
    a_c: Decimal
    b_c: Decimal
    c_c: Decimal
    da: Decimal
    db: Decimal
    dc: Decimal

    def __post_init__(self):
        for name in ("da", "db", "dc"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @classmethod
    def from_strings(cls, a, b, c, da, db, dc) -> "AbcParams":
        t = dec.to_dec
        return cls(t(a), t(b), t(c), t(da), t(db), t(dc))

    @classmethod
    def from_eps(cls, lo: float, hi: float, digits: int = 6) -> "AbcParams":
        """Box of trigonometric parameters covering eps in [lo, hi]."""
        alo, ahi = eps_to_abc(lo)[0], eps_to_abc(hi)[0]
        ac = round((alo + ahi) / 2, digits)
        da = round(max(ahi - ac, ac - alo) + 10.0**-digits, digits)
        t = lambda v: dec.to_dec(repr(v))  # noqa: E731
        return cls(t(ac), t(ac), t(2 * ac), t(da), t(da), t(2 * da))

    @property
    def centers(self):
        return (self.a_c, self.b_c, self.c_c)

    @property
    def widths(self):
        return (self.da, self.db, self.dc)

    def interval(self, k: int) -> Interval:
        return Interval.around(self.centers[k], self.widths[k])

    @property
    def symmetric(self) -> bool:
        return self.a_c == self.b_c and self.da == self.db

    def eps_range(self) -> tuple[float, float]:
        """eps values whose trigonometric (a, b, c) all lie in the box."""
        lo = max(abc_to_eps(float(self.a_c - self.da)), abc_to_eps(float(self.b_c - self.db)),
                 abc_to_eps(float(self.c_c - self.dc) / 2))
        hi = min(abc_to_eps(float(self.a_c + self.da)), abc_to_eps(float(self.b_c + self.db)),
                 abc_to_eps(float(self.c_c + self.dc) / 2))
        return lo, hi


@dataclass
class ExtPoint:
    a: Decimal
    b: Decimal
    c: Decimal
    u: tuple = field(default_factory=lambda: (dec.ZERO, dec.ZERO))
    v: tuple = field(default_factory=lambda: (dec.ZERO, dec.ZERO))

    def as_tuple(self):
        return (self.a, self.b, self.c, self.u[0], self.u[1], self.v[0], self.v[1])

    @classmethod
    def from_tuple(cls, t):
        return cls(t[0], t[1], t[2], (t[3], t[4]), (t[5], t[6]))


def g_abc_vec(x: Sequence, bk):
    """One step of the 4-D map on a 7-vector, in the backend's numbers.

    Returns (image, err) with err bounding the error of each phase
    coordinate of the image (zero for u', which is copied).
    """
    a, b, c, u0, u1, v0, v1 = x
    with bk.context():
        s = bk.cos(v0 + v1)
        w0 = 2 * v0 - u0 + a * bk.cos(v0) + c * s
        w1 = 2 * v1 - u1 + b * bk.cos(v1) + c * s
        err = (abs(a) + abs(b) + 2 * abs(c)) * bk.trig_err
    return (a, b, c, v0, v1, w0, w1), err


def g_abc(x: ExtPoint, dp: int = 35) -> ExtPoint:
    bk = RigorousBackend(dp)
    y, _ = g_abc_vec(x.as_tuple(), bk)
    return ExtPoint.from_tuple(y)


def g_abc_float(x) -> np.ndarray:
    a, b, c, u0, u1, v0, v1 = map(float, x)
    s = math.cos(v0 + v1)
    return np.array([a, b, c, v0, v1,
                     2 * v0 - u0 + a * math.cos(v0) + c * s,
                     2 * v1 - u1 + b * math.cos(v1) + c * s])


def beta_block(v0, v1, a, b, c, bk=None):
    """Point value of beta = d v'/d v; entries as backend numbers."""
    bk = bk or FloatBackend()
    with bk.context():
        s = bk.sin(v0 + v1)
        cs = c * s
        return [[2 - a * bk.sin(v0) - cs, -cs], [-cs, 2 - b * bk.sin(v1) - cs]]


def gamma_block(v0, v1, bk=None):
    """Point value of gamma = d v'/d(a, b, c)."""
    bk = bk or FloatBackend()
    z = bk.zero
    with bk.context():
        s = bk.cos(v0 + v1)
        return [[bk.cos(v0), z, s], [z, bk.cos(v1), s]]


@dataclass
class BlockBounds:
    """Enclosures of beta, gamma and the eigenvalue data over a set."""

    beta: list
    gamma: list
    sin0: object
    sin1: object
    sin01: object


def block_bounds(v0r, v1r, sr, ar, br, cr, bk) -> BlockBounds:
    """Interval beta and gamma for v0 in v0r, v1 in v1r, v0+v1 in sr."""
    with bk.context():
        s0, s1, s01 = bk.sin_iv(v0r), bk.sin_iv(v1r), bk.sin_iv(sr)
        c0, c1, c01 = bk.cos_iv(v0r), bk.cos_iv(v1r), bk.cos_iv(sr)
        cs = cr * s01
        two = bk.point(2 * bk.one)
        beta = [[two - ar * s0 - cs, -cs], [-cs, two - br * s1 - cs]]
        z = bk.point(bk.zero)
        gamma = [[c0, z, c01], [z, c1, c01]]
    return BlockBounds(beta, gamma, s0, s1, s01)


def dg_abc(x: Sequence, bk=None):
    """7x7 derivative of the 4-D map at a point (parameters, u, v)."""
    bk = bk or FloatBackend()
    a, b, c, _, _, v0, v1 = x
    beta = beta_block(v0, v1, a, b, c, bk)
    gamma = gamma_block(v0, v1, bk)
    z, o = bk.zero, bk.one
    m = [[z] * 7 for _ in range(7)]
    for i in range(3):
        m[i][i] = o
    m[3][5] = o
    m[4][6] = o
    with bk.context():
        for i in range(2):
            m[5 + i][3 + i] = -o
            for j in range(3):
                m[5 + i][j] = gamma[i][j]
            for j in range(2):
                m[5 + i][5 + j] = beta[i][j]
    return m


def trace_beta(v0, v1, a, b, c) -> float:
    return 4 - a * math.sin(v0) - b * math.sin(v1) - 2 * c * math.sin(v0 + v1)


def eig_beta(v0, v1, a, b, c) -> tuple[float, float, float]:
    """(Tr, lambda_-, lambda_+) of beta in closed form."""
    s = math.sin(v0 + v1)
    tr = trace_beta(v0, v1, a, b, c)
    disc = (a * math.sin(v0) - b * math.sin(v1)) ** 2 + 4 * c * c * s * s
    r = math.sqrt(disc)
    return tr, (tr - r) / 2, (tr + r) / 2


__all__ = [
    "M_TRIG", "M_POLY", "StdFamily", "std_step", "delay_step_2d", "Perturbation",
    "potential", "grad_potential", "hess_potential", "action_h", "action_h_grad",
    "action_h_2d", "eps_to_abc", "abc_to_eps", "AbcParams", "ExtPoint", "g_abc",
    "g_abc_vec", "g_abc_float", "beta_block", "gamma_block", "block_bounds",
    "BlockBounds", "dg_abc", "trace_beta", "eig_beta",
]

"""Number backends for the prism machinery.

The image-bounding code is written once and run twice: with exact Dec
values and validated trig for the rigorous pass, and with hardware
floats for the cheap staging pass.  Inside ``bk.context()`` the plain
operators ``+ - *`` are exact for Dec (and, of course, just floats for
the float backend), so algorithm code never has to call helpers for
ring operations.
"""
from __future__ import annotations

import contextlib
import math
from decimal import Decimal

import numpy as np

from . import dec
from .dec import EXACT, Interval
from .special import HALF_PI, PI, TWO_PI, bd_cos, bd_sin, rig_cos, rig_sin, rig_sqrt, set_trig_dp


class FInterval:
    """Float interval with the same surface as :class:`dec.Interval`.

    No directed rounding: this is the non-rigorous twin.
    """

    __slots__ = ("lb", "ub")

    def __init__(self, lb, ub=None):
        self.lb = float(lb)
        self.ub = float(lb if ub is None else ub)

    def __repr__(self):
        return f"FInterval({self.lb!r}, {self.ub!r})"

    @property
    def width(self):
        return self.ub - self.lb

    @property
    def mag(self):
        return max(abs(self.lb), abs(self.ub))

    def __neg__(self):
        return FInterval(-self.ub, -self.lb)

    def __add__(self, o):
        if isinstance(o, FInterval):
            return FInterval(self.lb + o.lb, self.ub + o.ub)
        return FInterval(self.lb + o, self.ub + o)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, FInterval):
            return FInterval(self.lb - o.ub, self.ub - o.lb)
        return FInterval(self.lb - o, self.ub - o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if isinstance(o, FInterval):
            p = (self.lb * o.lb, self.lb * o.ub, self.ub * o.lb, self.ub * o.ub)
            return FInterval(min(p), max(p))
        a, b = self.lb * o, self.ub * o
        return FInterval(min(a, b), max(a, b))

    __rmul__ = __mul__

    def square(self):
        if self.lb >= 0:
            return FInterval(self.lb * self.lb, self.ub * self.ub)
        if self.ub <= 0:
            return FInterval(self.ub * self.ub, self.lb * self.lb)
        m = self.mag
        return FInterval(0.0, m * m)


def _hits(lo: float, hi: float, offset: float) -> bool:
    k = math.ceil((lo - offset) / (2 * math.pi))
    return offset + 2 * math.pi * k <= hi


def fsin_iv(iv: FInterval) -> FInterval:
    if iv.width >= 2 * math.pi:
        return FInterval(-1.0, 1.0)
    a, b = math.sin(iv.lb), math.sin(iv.ub)
    lo, hi = min(a, b), max(a, b)
    if _hits(iv.lb, iv.ub, math.pi / 2):
        hi = 1.0
    if _hits(iv.lb, iv.ub, -math.pi / 2):
        lo = -1.0
    return FInterval(lo, hi)


def fcos_iv(iv: FInterval) -> FInterval:
    return fsin_iv(iv + math.pi / 2)


class FloatBackend:
    """Hardware doubles; fast, approximate, never used to remove a prism."""

    rigorous = False
    Interval = FInterval
    zero = 0.0
    one = 1.0
    trig_err = 0.0
    pi = math.pi

    def context(self):
        return contextlib.nullcontext()

    def num(self, x):
        return float(x)

    def point(self, x):
        return FInterval(x, x)

    def around(self, c, r):
        return FInterval(c - r, c + r)

    def sin(self, x):
        return math.sin(x)

    def cos(self, x):
        return math.cos(x)

    def sin_iv(self, iv):
        return fsin_iv(iv)

    def cos_iv(self, iv):
        return fcos_iv(iv)

    def trunc(self, x):
        return x

    def up(self, x):
        return x

    def div_up(self, x, y):
        return x / y

    def div_down(self, x, y):
        return x / y

    def sqrt_up(self, x):
        return math.sqrt(max(x, 0.0))

    def sqrt_down(self, x):
        return math.sqrt(max(x, 0.0))

    def inverse(self, m):
        b = np.linalg.inv(np.array(m, dtype=float))
        if not np.all(np.isfinite(b)):
            raise np.linalg.LinAlgError("singular matrix")
        return b.tolist(), 0.0


class RigorousBackend:
    """Exact Dec arithmetic with validated trig at ``dp`` places.

    ``precision`` (= dp + safety digits) is where matrices and centres
    are truncated; ``w_digits`` significant digits are kept when the
    fattening factors are rounded up.
    """

    rigorous = True
    Interval = Interval
    zero = dec.ZERO
    one = dec.ONE
    pi = PI

    def __init__(self, dp: int = 35, safety_dp: int = 5, w_digits: int = 6):
        self.dp = dp
        self.precision = dp + safety_dp
        self.cfg = set_trig_dp(dp)
        self.trig_err = dec.ulp(dp)
        self.eps = dec.ulp(self.precision)
        self.w_digits = w_digits

    def context(self):
        return dec.exact()

    def num(self, x):
        if isinstance(x, float):
            return dec.truncate(Decimal(x), self.precision)
        return dec.to_dec(x)

    def point(self, x):
        return Interval._raw(x, x)

    def around(self, c, r):
        return Interval.around(c, r)

    def sin(self, x):
        return rig_sin(x, self.cfg)

    def cos(self, x):
        return rig_cos(x, self.cfg)

    def sin_iv(self, iv):
        return bd_sin(iv, self.cfg)

    def cos_iv(self, iv):
        return bd_cos(iv, self.cfg)

    def trunc(self, x):
        return dec.truncate(x, self.precision)

    def up(self, x):
        """Round a non-negative bound up to ``w_digits`` significant digits."""
        if x.is_zero():
            return x
        return dec.round_up(x, max(0, self.w_digits - 1 - x.adjusted()))

    def div_up(self, x, y):
        return dec.div_up(x, y, self.precision)

    def div_down(self, x, y):
        return dec.div_down(x, y, self.precision)

    def sqrt_up(self, x):
        if x <= 0:
            return dec.ZERO
        return EXACT.add(rig_sqrt(x, self.precision), self.eps)

    def sqrt_down(self, x):
        if x <= 0:
            return dec.ZERO
        return max(dec.ZERO, EXACT.subtract(rig_sqrt(x, self.precision), self.eps))

    def inverse(self, m):
        from .prism import rgauss

        inv = rgauss(m, self.precision + 10, precision=self.precision)
        return inv.approx_inverse, inv.delta


__all__ = ["FInterval", "FloatBackend", "RigorousBackend", "fsin_iv", "fcos_iv", "HALF_PI", "TWO_PI"]

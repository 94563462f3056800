"""Validated sine, cosine and square root on Dec values.

Every function here returns a number whose distance from the true value
is at most ``10**-dp`` for the requested ``dp``; the interval versions
return enclosures.
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from functools import lru_cache
from math import factorial

from .dec import (
    EXACT,
    ONE,
    ZERO,
    DomainError,
    Interval,
    PrecisionLossError,
    div_down,
    div_up,
    divide,
    to_dec,
    truncate,
    ulp,
)

PI_DIGITS = 120
PI = Decimal(
    "3.141592653589793238462643383279502884197169399375105820974944592307"
    "816406286208998628034825342117067982148086513282306647"
)
HALF_PI = EXACT.multiply(PI, Decimal("0.5"))
QUARTER_PI = EXACT.multiply(PI, Decimal("0.25"))
TWO_PI = EXACT.multiply(PI, 2)
# |PI - pi| < PI_ERR
PI_ERR = ulp(PI_DIGITS)


@dataclass(frozen=True)
class TrigConfig:
    dp: int
    trig_terms: int
    trig_dp: int
    pi: Decimal = PI

    @property
    def err(self) -> Decimal:
        return ulp(self.dp)


@lru_cache(maxsize=None)
def set_trig_dp(dp: int) -> TrigConfig:
    """Pick the Taylor order and working precision for ``dp`` good places."""
    if dp < 1:
        raise ValueError("dp must be >= 1")
    bound = 10 ** (dp + 2)
    n = 0
    while factorial(2 * n + 3) <= bound:
        n += 1
    # smallest tdp with n * 10**-tdp <= 10**-(dp+2)
    tdp = dp + 2 + len(str(n)) if n > 1 else dp + 2
    return TrigConfig(dp=dp, trig_terms=n, trig_dp=tdp)


@lru_cache(maxsize=None)
def _horner_consts(n: int):
    f = factorial(2 * n + 1)
    consts = [Decimal((-1) ** (n - k) * (f // factorial(2 * (n - k) + 1))) for k in range(1, n + 1)]
    return Decimal(f), consts


def _series(theta: Decimal, cfg: TrigConfig, odd: bool) -> Decimal:
    n, tdp = cfg.trig_terms, cfg.trig_dp
    t2 = EXACT.multiply(theta, theta)
    if odd:
        fact, consts = _horner_consts(n)
    else:
        fact, consts = _cos_consts(n)
    s = Decimal((-1) ** n)
    for c in consts:
        s = truncate(EXACT.add(EXACT.multiply(t2, s), c), tdp)
    if odd:
        s = EXACT.multiply(theta, s)
    return divide(s, fact, tdp)


@lru_cache(maxsize=None)
def _cos_consts(n: int):
    # same recursion with (2N)!/(2j)! so the leading constant is (2N)!
    f = factorial(2 * n)
    consts = [Decimal((-1) ** (n - k) * (f // factorial(2 * (n - k)))) for k in range(1, n + 1)]
    return Decimal(f), consts


def _check_reduced(theta: Decimal, cfg: TrigConfig) -> None:
    if theta < 0 or theta > EXACT.add(QUARTER_PI, ulp(cfg.trig_dp)):
        raise DomainError(f"reduced argument outside [0, pi/4]: {theta}")


def reduced_sin(theta, cfg: TrigConfig) -> Decimal:
    """sin on [0, pi/4] by the truncated Horner recursion.

    Error: |theta~ - theta| + N 10^-tdp/(2N+1)! + theta^(2N+3)/(2N+3)!,
    plus one unit at tdp from the final division.
    """
    theta = to_dec(theta)
    _check_reduced(theta, cfg)
    if theta.is_zero():
        return ZERO
    return _series(truncate(theta, cfg.trig_dp), cfg, odd=True)


def reduced_cos(theta, cfg: TrigConfig) -> Decimal:
    """cos on [0, pi/4].

    The ledger mirrors the sine one; the Taylor remainder is
    theta^(2N+2)/(2N+2)! instead, which the choice of N also covers since
    the leading term of the series is the constant 1 rather than theta.
    """
    theta = to_dec(theta)
    _check_reduced(theta, cfg)
    return _series(truncate(theta, cfg.trig_dp), cfg, odd=False)


def _reduce(theta: Decimal, cfg: TrigConfig):
    """Return (k mod 4, sign, r) with theta = k*pi/2 + sign*r, r in [0, pi/4]."""
    q = divide(theta, HALF_PI, 2)
    k = int(q.to_integral_value(rounding="ROUND_HALF_EVEN"))
    digits = len(str(abs(k))) if k else 0
    if digits > PI_DIGITS - cfg.dp - 5:
        raise PrecisionLossError(
            f"|theta|/(pi/2) has {digits} integer digits; reduction would lose precision"
        )
    r = EXACT.subtract(theta, EXACT.multiply(Decimal(k), HALF_PI))
    # q was truncated, so r may sit a hair outside [-pi/4, pi/4]
    if r > QUARTER_PI:
        k += 1
        r = EXACT.subtract(r, HALF_PI)
    elif r < -QUARTER_PI:
        k -= 1
        r = EXACT.add(r, HALF_PI)
    sign = 1
    if r < 0:
        sign, r = -1, r.copy_negate()
    return k % 4, sign, truncate(r, cfg.trig_dp)


def _signed(x: Decimal, sign: int) -> Decimal:
    # unary minus on a Decimal rounds to the ambient context; copy_negate does not
    return x if sign > 0 else x.copy_negate()


def rig_sin(theta, cfg: TrigConfig) -> Decimal:
    theta = to_dec(theta)
    k, sign, r = _reduce(theta, cfg)
    if k == 0:
        return _signed(reduced_sin(r, cfg), sign)
    if k == 1:
        return reduced_cos(r, cfg)
    if k == 2:
        return _signed(reduced_sin(r, cfg), -sign)
    return reduced_cos(r, cfg).copy_negate()


def rig_cos(theta, cfg: TrigConfig) -> Decimal:
    theta = to_dec(theta)
    k, sign, r = _reduce(theta, cfg)
    if k == 0:
        return reduced_cos(r, cfg)
    if k == 1:
        return _signed(reduced_sin(r, cfg), -sign)
    if k == 2:
        return reduced_cos(r, cfg).copy_negate()
    return _signed(reduced_sin(r, cfg), sign)


def rig_sqrt(x, dp: int) -> Decimal:
    """Square root to within 10**-dp by truncated Newton iteration."""
    x = to_dec(x)
    if x < 0:
        raise DomainError("square root of a negative number")
    if x.is_zero() or x < ulp(2 * dp):
        return ZERO
    dpp = dp + 2
    stop = ulp(dp + 1)
    half = Decimal("0.5")
    y = x
    j = 0
    while True:
        nxt = truncate(EXACT.multiply(half, EXACT.add(y, divide(x, y, dpp))), dpp)
        j += 1
        # y_1 >= sqrt(x) by AM-GM; from there on the iterates decrease
        if j >= 2 and EXACT.subtract(y, nxt) < stop:
            return nxt
        y = nxt
        if j > 10_000:
            raise RuntimeError("square root iteration did not settle")


def sqrt_interval(iv: Interval, dp: int) -> Interval:
    """Enclosure of sqrt over a non-negative interval."""
    if iv.lb < 0:
        raise DomainError("square root of a negative interval")
    e = ulp(dp)
    lo = EXACT.subtract(rig_sqrt(iv.lb, dp), e)
    hi = EXACT.add(rig_sqrt(iv.ub, dp), e)
    return Interval._raw(max(lo, ZERO), hi)


def _extrema_hit(lo: Decimal, hi: Decimal, offset: Decimal) -> bool:
    """Could [lo, hi] contain offset + 2k*pi for some integer k?

    Uses the enclosure of pi, so the answer errs toward True.
    """
    k0 = int(divide(EXACT.subtract(lo, offset), TWO_PI, 2).to_integral_value(rounding="ROUND_FLOOR"))
    for k in (k0 - 1, k0, k0 + 1, k0 + 2):
        kk = Decimal(k)
        # offset is a multiple of pi/2 with coefficient at most 3
        slack = EXACT.multiply(abs(kk) * 2 + 2, PI_ERR)
        centre = EXACT.add(offset, EXACT.multiply(kk, TWO_PI))
        if EXACT.subtract(centre, slack) <= hi and lo <= EXACT.add(centre, slack):
            return True
    return False


def _bd_trig(iv: Interval, cfg: TrigConfig, fn, max_at: Decimal, min_at: Decimal) -> Interval:
    one = ONE
    if iv.width >= TWO_PI:
        return Interval._raw(-one, one)
    e = cfg.err
    a, b = fn(iv.lb, cfg), fn(iv.ub, cfg)
    lo = EXACT.subtract(min(a, b), e)
    hi = EXACT.add(max(a, b), e)
    if _extrema_hit(iv.lb, iv.ub, max_at):
        hi = one
    if _extrema_hit(iv.lb, iv.ub, min_at):
        lo = -one
    return Interval._raw(max(lo, -one), min(hi, one))


def bd_sin(iv: Interval, cfg: TrigConfig) -> Interval:
    """Enclosure of {sin t : t in iv}."""
    return _bd_trig(iv, cfg, rig_sin, HALF_PI, HALF_PI.copy_negate())


def bd_cos(iv: Interval, cfg: TrigConfig) -> Interval:
    """Enclosure of {cos t : t in iv}."""
    return _bd_trig(iv, cfg, rig_cos, ZERO, PI)


def sqrt_up(x, dp: int) -> Decimal:
    return EXACT.add(rig_sqrt(x, dp), ulp(dp))


def sqrt_down(x, dp: int) -> Decimal:
    return max(ZERO, EXACT.subtract(rig_sqrt(x, dp), ulp(dp)))


__all__ = [
    "PI",
    "PI_DIGITS",
    "TrigConfig",
    "set_trig_dp",
    "reduced_sin",
    "reduced_cos",
    "rig_sin",
    "rig_cos",
    "rig_sqrt",
    "sqrt_interval",
    "sqrt_up",
    "sqrt_down",
    "bd_sin",
    "bd_cos",
    "div_up",
    "div_down",
]

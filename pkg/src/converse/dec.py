"""Exact decimal numbers and validated interval arithmetic.

``Dec`` is :class:`decimal.Decimal` used under a context whose precision
is effectively unbounded and which traps ``Inexact``.  Addition,
subtraction and multiplication are therefore exact, and any accidental
rounding raises instead of silently losing digits.  Division, square
roots and trig only ever happen at an explicit number of decimal places.
"""
from __future__ import annotations

import decimal
from contextlib import contextmanager
from decimal import ROUND_CEILING, ROUND_DOWN, ROUND_FLOOR, Decimal
from typing import Iterable, Sequence

Dec = Decimal

EXACT = decimal.Context(
    prec=decimal.MAX_PREC,
    rounding=ROUND_DOWN,
    Emax=decimal.MAX_EMAX,
    Emin=decimal.MIN_EMIN,
    traps=[decimal.Inexact, decimal.InvalidOperation, decimal.DivisionByZero, decimal.Overflow],
)

ZERO = Decimal(0)
ONE = Decimal(1)
TWO = Decimal(2)


class RigorError(ArithmeticError):
    """Base class for failures of validated computation."""


class DivisionByZero(RigorError, ZeroDivisionError):
    pass


class DomainError(RigorError, ValueError):
    pass


class PrecisionLossError(RigorError):
    pass


@contextmanager
def exact():
    """Make plain operators on Decimals exact inside the block."""
    with decimal.localcontext(EXACT):
        yield


def to_dec(x) -> Decimal:
    """Convert ``x`` to a Dec without rounding.

    Strings are parsed as decimal literals (plain or scientific), floats
    are converted to their exact binary value.
    """
    if isinstance(x, Decimal):
        return x
    if isinstance(x, str):
        d = Decimal(x.strip())
    else:
        d = Decimal(x)
    if not d.is_finite():
        raise DomainError(f"not a finite number: {x!r}")
    return d


def add(x: Decimal, y: Decimal) -> Decimal:
    return EXACT.add(x, y)


def sub(x: Decimal, y: Decimal) -> Decimal:
    return EXACT.subtract(x, y)


def mul(x: Decimal, y: Decimal) -> Decimal:
    return EXACT.multiply(x, y)


def arith_exact(x: Decimal, y: Decimal, op: str) -> Decimal:
    try:
        fn = {"add": EXACT.add, "sub": EXACT.subtract, "mul": EXACT.multiply}[op]
    except KeyError:
        raise ValueError(f"unknown op {op!r}") from None
    return fn(to_dec(x), to_dec(y))


def _quantum(dp: int) -> Decimal:
    return Decimal((0, (1,), -dp))


def ulp(dp: int) -> Decimal:
    """10**-dp as an exact Dec."""
    return _quantum(dp)


def _digits_needed(x: Decimal, dp: int) -> int:
    if x.is_zero():
        return 1
    return max(1, x.adjusted() + dp + 2)


def _quantize(x: Decimal, dp: int, rounding: str) -> Decimal:
    ctx = decimal.Context(prec=_digits_needed(x, dp), rounding=rounding,
                          Emax=decimal.MAX_EMAX, Emin=decimal.MIN_EMIN)
    return x.quantize(_quantum(dp), context=ctx)


def truncate(x: Decimal, dp: int) -> Decimal:
    """Drop digits beyond ``dp`` places, rounding toward zero."""
    if x.as_tuple().exponent >= -dp:
        return x
    return _quantize(x, dp, ROUND_DOWN)


def round_up(x: Decimal, dp: int) -> Decimal:
    """Smallest dp-place number >= x."""
    if x.as_tuple().exponent >= -dp:
        return x
    return _quantize(x, dp, ROUND_CEILING)


def round_down(x: Decimal, dp: int) -> Decimal:
    """Largest dp-place number <= x."""
    if x.as_tuple().exponent >= -dp:
        return x
    return _quantize(x, dp, ROUND_FLOOR)


def _divide(x: Decimal, y: Decimal, dp: int, rounding: str) -> Decimal:
    if y.is_zero():
        raise DivisionByZero("division by zero")
    if x.is_zero():
        return ZERO
    prec = max(1, x.adjusted() - y.adjusted() + dp + 3)
    ctx = decimal.Context(prec=prec, rounding=rounding,
                          Emax=decimal.MAX_EMAX, Emin=decimal.MIN_EMIN)
    q = ctx.divide(x, y)
    return q.quantize(_quantum(dp), context=decimal.Context(prec=prec + 2, rounding=rounding))


def divide(x: Decimal, y: Decimal, dp: int) -> Decimal:
    """x/y truncated toward zero to ``dp`` places; error below 10**-dp."""
    return _divide(x, y, dp, ROUND_DOWN)


def div_up(x: Decimal, y: Decimal, dp: int) -> Decimal:
    return _divide(x, y, dp, ROUND_CEILING)


def div_down(x: Decimal, y: Decimal, dp: int) -> Decimal:
    return _divide(x, y, dp, ROUND_FLOOR)


def fmt(x: Decimal) -> str:
    """Round-trippable literal for backups and reports."""
    return str(x)


def parse(s: str) -> Decimal:
    return to_dec(s)


class Interval:
    """Closed interval [lb, ub] with exact Dec endpoints."""

    __slots__ = ("lb", "ub")

    def __init__(self, lb, ub=None):
        lb = to_dec(lb)
        ub = lb if ub is None else to_dec(ub)
        if lb > ub:
            raise ValueError(f"empty interval [{lb}, {ub}]")
        self.lb = lb
        self.ub = ub

    @classmethod
    def _raw(cls, lb: Decimal, ub: Decimal) -> "Interval":
        iv = object.__new__(cls)
        iv.lb = lb
        iv.ub = ub
        return iv

    @classmethod
    def around(cls, center, radius) -> "Interval":
        c, r = to_dec(center), to_dec(radius)
        if r < 0:
            raise ValueError("negative radius")
        return cls._raw(EXACT.subtract(c, r), EXACT.add(c, r))

    def __repr__(self):
        return f"Interval({self.lb}, {self.ub})"

    def __eq__(self, other):
        return isinstance(other, Interval) and self.lb == other.lb and self.ub == other.ub

    def __hash__(self):
        return hash((self.lb, self.ub))

    def __contains__(self, x) -> bool:
        return self.lb <= x <= self.ub

    def subset_of(self, other: "Interval") -> bool:
        return other.lb <= self.lb and self.ub <= other.ub

    @property
    def width(self) -> Decimal:
        return EXACT.subtract(self.ub, self.lb)

    @property
    def mag(self) -> Decimal:
        """max |x| over the interval."""
        return max(self.lb.copy_abs(), self.ub.copy_abs())

    def __neg__(self):
        return Interval._raw(self.ub.copy_negate(), self.lb.copy_negate())

    def __add__(self, other):
        if not isinstance(other, Interval):
            d = to_dec(other)
            return Interval._raw(EXACT.add(self.lb, d), EXACT.add(self.ub, d))
        return Interval._raw(EXACT.add(self.lb, other.lb), EXACT.add(self.ub, other.ub))

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Interval):
            d = to_dec(other)
            return Interval._raw(EXACT.subtract(self.lb, d), EXACT.subtract(self.ub, d))
        return Interval._raw(EXACT.subtract(self.lb, other.ub), EXACT.subtract(self.ub, other.lb))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        m = EXACT.multiply
        if not isinstance(other, Interval):
            d = to_dec(other)
            a, b = m(self.lb, d), m(self.ub, d)
            return Interval._raw(a, b) if a <= b else Interval._raw(b, a)
        p = (m(self.lb, other.lb), m(self.lb, other.ub), m(self.ub, other.lb), m(self.ub, other.ub))
        return Interval._raw(min(p), max(p))

    __rmul__ = __mul__

    def hull(self, other: "Interval") -> "Interval":
        return Interval._raw(min(self.lb, other.lb), max(self.ub, other.ub))

    def widen(self, eps) -> "Interval":
        e = to_dec(eps)
        return Interval._raw(EXACT.subtract(self.lb, e), EXACT.add(self.ub, e))

    def abs(self) -> "Interval":
        if self.lb >= 0:
            return self
        if self.ub <= 0:
            return -self
        return Interval._raw(ZERO, self.mag)

    def square(self) -> "Interval":
        a = self.abs()
        return Interval._raw(EXACT.multiply(a.lb, a.lb), EXACT.multiply(a.ub, a.ub))


def interval_op(I: Interval, J: Interval, op: str) -> Interval:
    if op == "add":
        return I + J
    if op == "sub":
        return I - J
    if op == "mul":
        return I * J
    raise ValueError(f"unknown op {op!r}")


def ihull(values: Iterable[Decimal]) -> Interval:
    vals = list(values)
    return Interval._raw(min(vals), max(vals))


class BoundedTerm:
    """coef times a product of interval factors.

    Factors are held by reference, so a term can be built once and
    re-bounded after its factor intervals are replaced in place via
    :meth:`set_factor`.
    """

    __slots__ = ("coef", "factors", "bound")

    def __init__(self, coef, factors: Sequence[Interval] = ()):
        self.coef = to_dec(coef)
        self.factors = list(factors)
        self.bound = None

    def set_factor(self, k: int, iv: Interval) -> None:
        self.factors[k] = iv
        self.bound = None

    def evaluate(self) -> Interval:
        acc = Interval._raw(self.coef, self.coef)
        for f in self.factors:
            acc = acc * f
        self.bound = acc
        return acc


class BoundedExpr:
    """constant plus a sum of bounded terms."""

    __slots__ = ("constant", "terms", "bound")

    def __init__(self, constant=0, terms: Sequence[BoundedTerm] = ()):
        self.constant = to_dec(constant)
        self.terms = list(terms)
        self.bound = None

    def evaluate(self) -> Interval:
        lb = ub = self.constant
        for t in self.terms:
            b = t.evaluate()
            lb = EXACT.add(lb, b.lb)
            ub = EXACT.add(ub, b.ub)
        self.bound = Interval._raw(lb, ub)
        return self.bound


def eval_expr(e: BoundedExpr) -> Interval:
    return e.evaluate()

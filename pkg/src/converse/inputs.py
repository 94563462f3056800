"""Input files for ``prove``.

Layout::

    0.3085  0.00125        a centre and half-width
    0.3085  0.00125        b
    0.617   0.0025         c
                           (blank)
    1.0     1.0            v0 centre and half-width, in units of pi
    1.0     1.0            v1
                           (blank)
    free-text comment lines, echoed verbatim in the report

Anything after the two numbers on a data line is ignored.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal

from . import dec
from .maps import AbcParams
from .special import PI, PI_ERR


class InputError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass
class InputSpec:
    params: AbcParams
    angles: tuple  # ((centre, half-width), (centre, half-width)) in units of pi
    comments: list = field(default_factory=list)

    def region(self, precision: int):
        """Dec centre and half-width per angle covering the true radian range."""
        out = []
        slack = dec.ulp(precision)
        with dec.exact():
            for c, h in self.angles:
                centre = dec.truncate(c * PI, precision)
                err = abs(c) * PI_ERR + slack
                half = dec.round_up(h * PI + abs(h) * PI_ERR + err, precision)
                out.append((centre, half))
        return tuple(out)


def _pair(line: str, lineno: int) -> tuple[Decimal, Decimal]:
    parts = line.split()
    if len(parts) < 2:
        raise InputError(lineno, f"expected 'centre half-width', got {line.strip()!r}")
    try:
        c, h = dec.parse(parts[0]), dec.parse(parts[1])
    except Exception:
        raise InputError(lineno, f"non-numeric value in {line.strip()!r}") from None
    if h < 0:
        raise InputError(lineno, "half-width must be non-negative")
    return c, h


def parse_input(text: str) -> InputSpec:
    lines = text.splitlines()
    pos = 0
    vals = []
    for k in range(3):
        if pos >= len(lines):
            raise InputError(pos + 1, "missing parameter line")
        vals.append(_pair(lines[pos], pos + 1))
        pos += 1
    while pos < len(lines) and not lines[pos].strip():
        pos += 1
    angles = []
    for k in range(2):
        if pos >= len(lines):
            raise InputError(pos + 1, "missing angle line")
        angles.append(_pair(lines[pos], pos + 1))
        pos += 1
    if pos < len(lines) and not lines[pos].strip():
        pos += 1
    comments = [ln.rstrip("\n") for ln in lines[pos:]]
    (a, da), (b, db), (c, dc) = vals
    return InputSpec(AbcParams(a, b, c, da, db, dc), tuple(angles), comments)


def read_input(path) -> InputSpec:
    with open(path) as fh:
        return parse_input(fh.read())


__all__ = ["InputSpec", "InputError", "parse_input", "read_input"]

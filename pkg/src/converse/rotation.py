"""Rational approximations of rotation numbers and rotation vectors."""
from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction

Triple = tuple  # (p0, p1, q)


def cfrac(omega, n: int) -> list[int]:
    """Partial quotients a_0 .. a_n, stopping early when omega is rational.

    Exact for int, Fraction and Decimal input; a float is taken at its
    exact binary value.
    """
    r = Fraction(omega)
    out = []
    for _ in range(n + 1):
        a = r.numerator // r.denominator
        out.append(a)
        if r == a:
            break
        r = 1 / (r - a)
    return out


def convergents(quotients) -> list[Fraction]:
    h0, h1, k0, k1 = 1, 0, 0, 1
    out = []
    for a in quotients:
        h0, h1 = a * h0 + h1, h0
        k0, k1 = a * k0 + k1, k0
        out.append(Fraction(h0, k0))
    return out


def mediant(x: tuple, y: tuple) -> tuple:
    return tuple(a + b for a, b in zip(x, y))


def farey_approx(omega, level: int) -> tuple[tuple[int, int], str]:
    """Mediant of the level-n Farey interval containing omega, and its address.

    A target equal to a mediant goes left.
    """
    w = Fraction(omega)
    if not 0 < w < 1:
        raise ValueError("omega must lie in (0, 1)")
    lo, hi = (0, 1), (1, 1)
    addr = []
    for _ in range(level):
        m = mediant(lo, hi)
        if w <= Fraction(*m):
            hi = m
            addr.append("l")
        else:
            lo = m
            addr.append("r")
    return mediant(lo, hi), "".join(addr)


@dataclass(frozen=True)
class FareyTriangle:
    """Vertices as (p0, p1, q); ``h1``-``h2`` is the hypotenuse."""

    h1: Triple
    h2: Triple
    corner: Triple

    def split(self):
        """(left, right) daughters; the mediant becomes the new corner."""
        m = mediant(self.h1, self.h2)
        return FareyTriangle(self.h1, self.corner, m), FareyTriangle(self.h2, self.corner, m)

    def contains(self, w) -> bool:
        pts = [(Fraction(v[0], v[2]), Fraction(v[1], v[2])) for v in (self.h1, self.h2, self.corner)]
        signs = []
        for (ax, ay), (bx, by) in zip(pts, pts[1:] + pts[:1]):
            signs.append((bx - ax) * (w[1] - ay) - (by - ay) * (w[0] - ax))
        return all(s >= 0 for s in signs) or all(s <= 0 for s in signs)


ROOT_TRIANGLE = FareyTriangle((1, 0, 1), (0, 1, 1), (1, 1, 1))


def farey_triangle_approx(w0, w1, levels: int) -> list[tuple[Triple, str]]:
    """Mediants of successive Farey triangles containing (w0, w1).

    Returns one (p0, p1, q) per level with the address so far.  Targets
    below the anti-diagonal are handled by the reflection
    (w0, w1) -> (1 - w0, 1 - w1).
    """
    w = (Fraction(w0), Fraction(w1))
    if not all(0 <= c <= 1 for c in w):
        raise ValueError("target must lie in the unit square")
    flip = w[0] + w[1] < 1
    if flip:
        w = (1 - w[0], 1 - w[1])
    tri = ROOT_TRIANGLE
    out, addr = [], ""
    for _ in range(levels):
        m = mediant(tri.h1, tri.h2)
        out.append(((m[2] - m[0], m[2] - m[1], m[2]) if flip else m, addr))
        left, right = tri.split()
        # a target on the shared edge goes left
        if left.contains(w):
            tri, addr = left, addr + "l"
        else:
            tri, addr = right, addr + "r"
    return out


def spiral_mean(places: int = 30) -> tuple[Decimal, Decimal]:
    """(tau^-2, tau^-1) where tau^3 = tau + 1, good to ``places`` digits."""
    with localcontext() as ctx:
        ctx.prec = places + 20
        tau = Decimal("1.3247")
        for _ in range(200):
            step = (tau**3 - tau - 1) / (3 * tau**2 - 1)
            tau -= step
            if abs(step) < Decimal(10) ** -(places + 15):
                break
        inv = 1 / tau
        return +(inv * inv), +inv


def spiral_tau(places: int = 30) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = places + 20
        return 1 / spiral_mean(places)[1]


def format_triple(t: Triple, address: str) -> str:
    return f"{t[0]} {t[1]} {t[2]} {address or '-'}"


__all__ = [
    "cfrac", "convergents", "mediant", "farey_approx", "FareyTriangle", "farey_triangle_approx",
    "spiral_mean", "spiral_tau", "format_triple", "ROOT_TRIANGLE",
]

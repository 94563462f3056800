"""Prisms in extended phase space and rigorous bounds on their images.

A prism is ``{x_c + P eta : |eta_j| <= 1}`` in the seven coordinates
(a, b, c, u0, u1, v0, v1).  The parameter block of P is diagonal and the
parameter rows carry no phase coupling, so the parameters ride along
unchanged under the map.

Bounding an image
-----------------
For any A with the same block structure (A_pp = P_pp, zero upper-right
blocks) the image G(S) lies in ``(x_c', A W)`` whenever every w_j bounds
the j-th row sum of ``A^-1 DG_x P`` over x in S, plus the centre error.
Writing the 4x4 phase block of A as M and ``B = M^-1``, the phase rows of
``A^-1 DG_x P`` are ``B Y(x)`` with

    Y_u = [P_vp - A_up,                    P_vu,             P_vv          ]
    Y_v = [gamma P_pp - P_up + beta P_vp - A_vp, beta P_vu - P_uu, beta P_vv - P_uv]

and the parameter rows are exactly the identity, so w_p = 1.  Both
fatteners below only choose A; the w_j come from one bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from decimal import Decimal
from enum import Enum
from typing import Sequence

import numpy as np

from . import dec
from .dec import RigorError
from .maps import BlockBounds, beta_block, block_bounds, gamma_block, g_abc_vec

N = 7
PARAMS = range(3)
PHASE = range(3, 7)


class Status(Enum):
    NO_TORI = "NO_TORI"
    UNTRIED = "UNTRIED"
    MAYBE = "MAYBE"
    ACTIVE = "ACTIVE"
    SYMMTRC = "SYMMTRC"


class SingularMatrixError(RigorError):
    pass


class SingularFattenerError(SingularMatrixError):
    pass


# ---------------------------------------------------------------- row sums


def row_sum(a, k: int):
    """sum_j |a_kj|."""
    with dec.exact():
        return sum((abs(x) for x in a[k]), type(a[k][0])(0))


def mat_sum(a):
    with dec.exact():
        return sum((row_sum(a, k) for k in range(len(a))), type(a[0][0])(0))


def _matmul(a, b):
    n, m, p = len(a), len(b), len(b[0])
    return [[sum((a[i][k] * b[k][j] for k in range(m)), type(a[0][0])(0)) for j in range(p)] for i in range(n)]


def matmul_exact(a, b):
    with dec.exact():
        return _matmul(a, b)


# ------------------------------------------------------- Gauss-Jordan + error


@dataclass(frozen=True)
class InverseWithError:
    """approx_inverse differs from the true inverse by <= delta entrywise."""

    approx_inverse: list
    delta: Decimal

    def residual_bound(self, m) -> Decimal:
        n = len(m)
        with dec.exact():
            mx = max(abs(dec.to_dec(x)) for row in m for x in row)
            return n * self.delta * mx


def _rgauss_once(m, inv_dp: int) -> InverseWithError:
    n = len(m)
    e = dec.ulp(inv_dp)
    t = lambda x: dec.truncate(x, inv_dp)  # noqa: E731
    up = lambda x: dec.round_up(x, inv_dp)  # noqa: E731
    with dec.exact():
        g = [[dec.to_dec(x) for x in row] + [Decimal(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
        delta = dec.ZERO
        free_rows, free_cols = list(range(n)), list(range(n))
        col_of_row = {}
        for _ in range(n):
            # full pivoting over the not-yet-used rows and columns
            r, c = max(((i, j) for i in free_rows for j in free_cols), key=lambda ij: abs(g[ij[0]][ij[1]]))
            p = g[r][c]
            if abs(p) <= delta:
                raise SingularMatrixError(f"pivot {p} does not exceed its error bound {delta}")
            piv_inv = dec.divide(dec.ONE, p, inv_dp)
            # |piv_inv - 1/p_true| <= eps + delta / ((|p| - delta)|p|); eps only if rounded
            d_piv = (e if p * piv_inv != 1 else dec.ZERO) + (
                dec.div_up(delta, (abs(p) - delta) * abs(p), inv_dp) if delta else dec.ZERO)
            row = g[r]
            scaled = [x * piv_inv for x in row]
            row = [t(x) for x in scaled]
            d_r = (e if row != scaled else dec.ZERO) + delta * abs(piv_inv) + (
                max(abs(x) for x in g[r]) + delta) * d_piv
            row[c] = dec.ONE
            g[r] = row
            rmax = max(abs(x) for x in row)
            colmax = max(abs(g[l][c]) for l in range(n) if l != r) if n > 1 else dec.ZERO
            rounded = False
            for l in range(n):
                if l == r:
                    continue
                f = g[l][c]
                if f:
                    exact_row = [x - f * y for x, y in zip(g[l], row)]
                    g[l] = [t(x) for x in exact_row]
                    rounded = rounded or g[l] != exact_row
                g[l][c] = dec.ZERO
            d_m = (e if rounded else dec.ZERO) + delta + delta * rmax + (colmax + delta) * d_r
            delta = up(max(d_m, d_r))
            free_rows.remove(r)
            free_cols.remove(c)
            col_of_row[r] = c
        inv = [None] * n
        for r, c in col_of_row.items():
            inv[c] = g[r][n:]
    return InverseWithError(inv, delta)


def rgauss(m, inv_dp: int, precision: int | None = None, retries: int = 2) -> InverseWithError:
    """Approximate inverse of a square Dec matrix with an entrywise error bound.

    If ``precision`` is given the result must also satisfy
    ``n delta max|M| <= 10**-precision``; otherwise the working precision
    is raised (first by doubling) and the elimination rerun.
    """
    if not m or any(len(row) != len(m) for row in m):
        raise ValueError("rgauss needs a square matrix")
    dp = inv_dp
    for attempt in range(retries + 1):
        res = _rgauss_once(m, dp)
        if precision is None or res.residual_bound(m) <= dec.ulp(precision):
            return res
        dp *= 2
    raise SingularMatrixError(f"inverse error bound did not reach 10^-{precision} at {dp // 2} places")


# ---------------------------------------------------------------- prisms


@dataclass
class Prism:
    center: tuple
    matrix: tuple
    status: Status = Status.UNTRIED
    n_cuts: int = 0
    cut_history: tuple = ()

    def __post_init__(self):
        self.center = tuple(self.center)
        self.matrix = tuple(tuple(r) for r in self.matrix)
        if len(self.center) != N or len(self.matrix) != N or any(len(r) != N for r in self.matrix):
            raise ValueError("prisms are 7-dimensional")

    @classmethod
    def box(cls, center, half_widths, **kw) -> "Prism":
        z = type(center[0])(0)
        m = [[half_widths[i] if i == j else z for j in range(N)] for i in range(N)]
        return cls(center, m, **kw)

    def radius(self, k: int):
        with dec.exact():
            return row_sum(self.matrix, k)

    def point(self, eta: Sequence[float]) -> np.ndarray:
        """Float coordinates of center + P eta (for sampling)."""
        return np.array([float(c) for c in self.center]) + np.array(
            [[float(x) for x in r] for r in self.matrix]
        ) @ np.asarray(eta, dtype=float)

    def to_float(self) -> "Prism":
        return replace(self, center=tuple(float(x) for x in self.center),
                       matrix=tuple(tuple(float(x) for x in r) for r in self.matrix))

    def is_worklist_form(self) -> bool:
        m = self.matrix
        return all(not m[i][j] for i in range(3, 7) for j in range(0, 5))


def truncate_prism(s: Prism, precision: int) -> Prism:
    """Truncate every matrix entry to ``precision`` places.

    Each coordinate of ``center + P eta`` moves by at most
    7 * 10**-precision for |eta| <= 1, so callers cover that with slack.
    """
    m = tuple(tuple(dec.truncate(x, precision) for x in r) for r in s.matrix)
    return replace(s, matrix=m)


# --------------------------------------------------------- ranges over S


def phase_ranges(center, p, bk):
    """Enclosures of v0, v1, v0+v1 and the three parameters over the prism."""
    with bk.context():
        r0 = sum((abs(x) for x in p[5]), bk.zero)
        r1 = sum((abs(x) for x in p[6]), bk.zero)
        rs = sum((abs(x + y) for x, y in zip(p[5], p[6])), bk.zero)
        v0r = bk.around(center[5], r0)
        v1r = bk.around(center[6], r1)
        sr = bk.around(center[5] + center[6], rs)
        pr = [bk.around(center[i], abs(p[i][i])) for i in PARAMS]
    return v0r, v1r, sr, pr


def prism_blocks(s: Prism, bk) -> BlockBounds:
    v0r, v1r, sr, pr = phase_ranges(s.center, s.matrix, bk)
    return block_bounds(v0r, v1r, sr, pr[0], pr[1], pr[2], bk)


# ---------------------------------------------------------------- fatteners


def _center_blocks(center, bk):
    _, _, _, _, _, v0, v1 = center
    a, b, c = center[:3]
    beta = [[bk.trunc(x) for x in r] for r in beta_block(v0, v1, a, b, c, bk)]
    gamma = [[bk.trunc(x) for x in r] for r in gamma_block(v0, v1, bk)]
    return beta, gamma


def fixed_form_matrix(p, beta_c, gamma_c, bk):
    """A with zero A_uu block and the remaining blocks matched to DG_c P."""
    z = bk.zero
    a = [[z] * N for _ in range(N)]
    with bk.context():
        for i in PARAMS:
            a[i][i] = p[i][i]
        for i in range(2):
            for k in PARAMS:
                a[3 + i][k] = p[5 + i][k]
                a[5 + i][k] = (gamma_c[i][k] * p[k][k] - p[3 + i][k]
                               + beta_c[i][0] * p[5][k] + beta_c[i][1] * p[6][k])
            for j in range(2):
                uv = p[5 + i][3 + j] + p[5 + i][5 + j]
                a[3 + i][5 + j] = uv
        for i in range(2):
            for j in range(2):
                a[5 + i][3 + j] = beta_c[i][0] * a[3][5 + j] + beta_c[i][1] * a[4][5 + j]
                a[5 + i][5 + j] = beta_c[i][0] * p[5][5 + j] + beta_c[i][1] * p[6][5 + j] - p[3 + i][5 + j]
        det = a[3][5] * a[4][6] - a[3][6] * a[4][5]
    if not det:
        raise SingularFattenerError("A_uv is singular")
    return a


def fixed_form_fatten(s: Prism, bk, blocks: BlockBounds | None = None):
    """Fixed-form choice of A and the resulting fattening factors w."""
    beta_c, gamma_c = _center_blocks(s.center, bk)
    a = fixed_form_matrix(s.matrix, beta_c, gamma_c, bk)
    img, err = g_abc_vec(s.center, bk)
    blocks = blocks or prism_blocks(s, bk)
    w = fattening_factors(s.matrix, a, blocks, err, bk)
    return a, w


def dg_times_p(center, p, bk):
    """DG at the centre applied to P, truncated (A for the column rotor)."""
    beta_c, gamma_c = _center_blocks(center, bk)
    z = bk.zero
    a = [[z] * N for _ in range(N)]
    with bk.context():
        for i in PARAMS:
            a[i][i] = p[i][i]
        for i in range(2):
            for k in range(N):
                a[3 + i][k] = p[5 + i][k]
                g = gamma_c[i][k] * p[k][k] if k < 3 else z
                a[5 + i][k] = bk.trunc(g - p[3 + i][k] + beta_c[i][0] * p[5][k] + beta_c[i][1] * p[6][k])
    return a


def _angle(x: np.ndarray, y: np.ndarray) -> float:
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        return math.pi / 2
    c = abs(float(x @ y)) / (nx * ny)
    return math.acos(min(1.0, c))


def column_rotor_fatten(a, min_angle: float = math.radians(27), bk=None, passes: int = 3):
    """Rotate the phase parts of columns 4-7 so no pair is nearly parallel.

    Each column's phase part (rows 4-7) is a 4-vector.  When two of them
    subtend less than ``min_angle`` (as lines), the shorter one is turned
    within the plane of the pair until the angle is exactly ``min_angle``;
    its length is kept.  Parameter columns are untouched.
    """
    cols = {k: np.array([float(a[i][k]) for i in PHASE]) for k in PHASE}
    changed = set()
    pairs = [(3, 4), (5, 6), (3, 5), (4, 6), (3, 6), (4, 5)]
    for _ in range(passes):
        moved = False
        for i, j in pairs:
            x, y = cols[i], cols[j]
            if _angle(x, y) >= min_angle - 1e-12:
                continue
            long_k, short_k = (i, j) if np.linalg.norm(x) >= np.linalg.norm(y) else (j, i)
            lv, sv = cols[long_k], cols[short_k]
            ln, sn = np.linalg.norm(lv), np.linalg.norm(sv)
            if sn == 0:
                continue
            e1 = lv / ln
            if float(sv @ e1) < 0:
                e1 = -e1
            perp = sv - float(sv @ e1) * e1
            pn = np.linalg.norm(perp)
            if pn < 1e-14 * sn:
                # exactly parallel: pick the coordinate axis least aligned with e1
                k = int(np.argmin(np.abs(e1)))
                perp = np.zeros(4)
                perp[k] = 1.0
                perp -= float(perp @ e1) * e1
                pn = np.linalg.norm(perp)
            e2 = perp / pn
            cols[short_k] = sn * (math.cos(min_angle) * e1 + math.sin(min_angle) * e2)
            changed.add(short_k)
            moved = True
        if not moved:
            break
    out = [list(r) for r in a]
    for k in changed:
        for n_i, i in enumerate(PHASE):
            x = float(cols[k][n_i])
            out[i][k] = bk.num(x) if bk is not None else x
    return out


# ---------------------------------------------------------------- the lemma


def _y_matrix(p, a, blocks: BlockBounds, bk):
    """Interval 4x7 matrix Y with (A^-1 DG P)_phase = B Y."""
    iv = bk.point
    beta, gamma = blocks.beta, blocks.gamma
    y = []
    with bk.context():
        for i in range(2):
            y.append([iv(p[5 + i][k] - (a[3 + i][k] if k < 3 else bk.zero)) for k in range(N)])
        for i in range(2):
            row = []
            for k in range(N):
                t = beta[i][0] * p[5][k] + beta[i][1] * p[6][k] - p[3 + i][k]
                if k < 3:
                    t = t + gamma[i][k] * p[k][k] - a[5 + i][k]
                row.append(t)
            y.append(row)
    return y


def fattening_factors(p, a, blocks: BlockBounds, center_err, bk, inverse=None):
    """Upper bounds w_j on the row sums of A^-1 DG_x P over S plus centre error.

    ``center_err`` bounds each phase coordinate of the computed image
    centre.  Returns a list of 7 backend numbers (w_p = 1).
    """
    m = [[a[i][j] for j in PHASE] for i in PHASE]
    b, d_n = inverse if inverse is not None else bk.inverse(m)
    y = _y_matrix(p, a, blocks, bk)
    w = [bk.one] * 3
    with bk.context():
        ymag = sum((y[l][k].mag for l in range(4) for k in range(N)), bk.zero)
        for j in range(4):
            bj = b[j]
            total = bk.zero
            for k in range(N):
                acc = bk.point(bk.zero)
                for l in range(4):
                    if bj[l]:
                        acc = acc + y[l][k] * bj[l]
                total = total + acc.mag
            bsum = sum((abs(x) for x in bj), bk.zero)
            total = total + d_n * ymag + (bsum + 4 * d_n) * center_err
            w.append(bk.up(total))
    return w


@dataclass
class ImageBound:
    prism: Prism
    w: list
    a: list
    blocks: BlockBounds


def bound_image(s: Prism, bk, fattener: str = "rotor", min_angle: float = math.radians(27),
                blocks: BlockBounds | None = None) -> ImageBound:
    """A prism containing G(s).

    ``fattener`` is "fixed" or "rotor".  Raises SingularMatrixError when
    the chosen A cannot be inverted with a usable error bound.
    """
    img, err = g_abc_vec(s.center, bk)
    with bk.context():
        center = tuple(img[:5]) + tuple(bk.trunc(x) for x in img[5:])
        err = err + (bk.eps if bk.rigorous else bk.zero)
    blocks = blocks or prism_blocks(s, bk)
    if fattener == "fixed":
        beta_c, gamma_c = _center_blocks(s.center, bk)
        a = fixed_form_matrix(s.matrix, beta_c, gamma_c, bk)
        if bk.rigorous:
            a = [[bk.trunc(x) for x in r] for r in a]
    elif fattener == "rotor":
        a = column_rotor_fatten(dg_times_p(s.center, s.matrix, bk), min_angle, bk)
    else:
        raise ValueError(f"unknown fattener {fattener!r}")
    try:
        w = fattening_factors(s.matrix, a, blocks, err, bk)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from None
    with bk.context():
        pm = [[a[i][k] * w[k] if k >= 3 else a[i][k] for k in range(N)] for i in range(N)]
    return ImageBound(Prism(center, pm, status=s.status, n_cuts=s.n_cuts, cut_history=s.cut_history),
                      w, a, blocks)


# ---------------------------------------------------------------- 1-D lift


def bound_lift_1d(center, radius, omega, eps, bk):
    """Interval containing phi(I), phi(x) = x + omega + eps/(2 pi) sin(2 pi x).

    The one-dimensional form of the image-bounding lemma: with
    A = trunc(phi'(c)) r, the image lies in phi(c) + A w [-1, 1] where
    w = |A|^-1 (sup |phi'(I)| r + delta_c).  Returns (centre, radius).
    """
    from .special import PI_ERR, TWO_PI

    with bk.context():
        x = TWO_PI * center
        x_err = 2 * abs(center) * PI_ERR
        # 1/(2 pi) to precision, plus its error
        k = bk.div_up(bk.one, TWO_PI)
        k_err = bk.eps + PI_ERR
        s = bk.sin(x)
        img = center + omega + eps * k * s
        delta_c = abs(eps) * (k * (bk.trig_err + x_err) + k_err) + bk.eps
        img_t = bk.trunc(img)
        delta_c = delta_c + abs(img - img_t)
        slope = bk.one + eps * bk.cos(x)
        a = bk.trunc(slope * radius)
        xr = bk.around(x, TWO_PI * radius + 2 * abs(center + radius) * PI_ERR + x_err)
        dphi = bk.one + bk.around(bk.zero, abs(eps) * (bk.trig_err + x_err)) + bk.cos_iv(xr) * eps
        if a == 0:
            raise SingularFattenerError("zero slope at the centre")
        w = bk.up(bk.div_up(dphi.mag * radius + delta_c, abs(a)))
        return img_t, abs(a) * w


# ---------------------------------------------------------------- text form

_VERSION = "prism-v1"


def prism_to_lines(s: Prism) -> list[str]:
    hist = ",".join(s.cut_history) if s.cut_history else "-"
    lines = [f"{_VERSION} {s.status.value} {s.n_cuts} {hist}",
             "center " + " ".join(dec.fmt(x) for x in s.center)]
    lines += ["row " + " ".join(dec.fmt(x) for x in r) for r in s.matrix]
    return lines


class PrismParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def prism_from_lines(lines: Sequence[str], first_lineno: int = 1) -> Prism:
    if len(lines) != 2 + N:
        raise PrismParseError(first_lineno, f"expected {2 + N} lines per prism, got {len(lines)}")
    head = lines[0].split()
    if len(head) != 4 or head[0] != _VERSION:
        raise PrismParseError(first_lineno, f"bad prism header {lines[0]!r}")
    try:
        status = Status(head[1])
        n_cuts = int(head[2])
    except ValueError as exc:
        raise PrismParseError(first_lineno, str(exc)) from None
    hist = () if head[3] == "-" else tuple(head[3].split(","))

    def nums(k, tag):
        parts = lines[k].split()
        if not parts or parts[0] != tag or len(parts) != N + 1:
            raise PrismParseError(first_lineno + k, f"expected '{tag}' and {N} numbers")
        try:
            return [dec.parse(x) for x in parts[1:]]
        except Exception:
            raise PrismParseError(first_lineno + k, "malformed number") from None

    center = nums(1, "center")
    rows = [nums(2 + i, "row") for i in range(N)]
    return Prism(center, rows, status=status, n_cuts=n_cuts, cut_history=hist)


__all__ = [
    "Status", "Prism", "InverseWithError", "SingularMatrixError", "SingularFattenerError",
    "row_sum", "mat_sum", "matmul_exact", "rgauss", "truncate_prism", "phase_ranges",
    "prism_blocks", "fixed_form_matrix", "fixed_form_fatten", "dg_times_p",
    "column_rotor_fatten", "fattening_factors", "bound_image", "ImageBound", "bound_lift_1d",
    "prism_to_lines", "prism_from_lines", "PrismParseError",
]

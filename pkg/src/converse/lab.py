"""Approximately minimizing periodic states of the 4-D symplectic maps.

A (p, q) state is a list of lift points x_0 .. x_q in R^2 with
x_q = x_0 + p.  Its action is sum_j H(x_j, x_{j+1}) with
H(x, x') = |x' - x|^2 / 2 - eps V(x); minimizing states are found by
Newton's method on the Euler-Lagrange equations, continued in eps from
the unperturbed state.  Everything here is plain double precision.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import optimize, sparse
from scipy.sparse.linalg import spsolve
from scipy.spatial import cKDTree

from .maps import Perturbation, grad_potential, hess_potential, potential

RENORM = 1e6
GRAD_TARGET = 1e-6


@dataclass(frozen=True)
class State:
    p: tuple
    q: int
    x: np.ndarray  # shape (q, 2): x_0 .. x_{q-1}

    @property
    def points(self) -> np.ndarray:
        """x_0 .. x_q, closing point included."""
        return np.vstack([self.x, self.x[0] + np.asarray(self.p, dtype=float)])

    def label(self) -> str:
        return f"({self.p[0]},{self.p[1]})/{self.q}"


@dataclass(frozen=True)
class OrbitQuality:
    shadow: float
    grad_size: float


class ConvergenceError(RuntimeError):
    def __init__(self, msg: str, state: State | None = None):
        super().__init__(msg)
        self.state = state


def uniform_state(p, q: int, x0=(0.0, 0.0)) -> State:
    j = np.arange(q)[:, None]
    return State(tuple(int(v) for v in p), int(q),
                 np.asarray(x0, dtype=float) + j * np.asarray(p, dtype=float) / q)


def _vgrad(x, kind):
    return np.array([grad_potential(pt, kind) for pt in x])


def _vpot(x, kind):
    return np.array([potential(pt, kind) for pt in x])


def action(state: State, kind: Perturbation, eps: float) -> float:
    pts = state.points
    d = np.diff(pts, axis=0)
    return float(0.5 * np.sum(d * d) - eps * np.sum(_vpot(state.x, kind)))


def el_gradient(state: State, kind: Perturbation, eps: float) -> np.ndarray:
    """dL/dx_j for j < q, with x_q = x_0 + p and x_{-1} = x_{q-1} - p."""
    x, p = state.x, np.asarray(state.p, dtype=float)
    nxt = np.vstack([x[1:], x[:1] + p])
    prv = np.vstack([x[-1:] - p, x[:-1]])
    return 2 * x - prv - nxt - eps * _vgrad(x, kind)


def grad_size(state: State, kind: Perturbation, eps: float) -> float:
    g = el_gradient(state, kind, eps)
    return float(np.sqrt(np.sum(g * g) / state.q))


def hessian(state: State, kind: Perturbation, eps: float, periodic: bool = True):
    """Sparse 2q x 2q Hessian: blocks 2I - eps V_j, -I off the diagonal and in the corners."""
    q = state.q
    rows, cols, vals = [], [], []
    for j in range(q):
        blk = 2 * np.eye(2) - eps * hess_potential(state.x[j], kind)
        for r in range(2):
            for c in range(2):
                rows.append(2 * j + r)
                cols.append(2 * j + c)
                vals.append(blk[r, c])
        for k in (j - 1, j + 1):
            if not periodic and not 0 <= k < q:
                continue
            k %= q
            for r in range(2):
                rows.append(2 * j + r)
                cols.append(2 * k + r)
                vals.append(-1.0)
    return sparse.csc_matrix((vals, (rows, cols)), shape=(2 * q, 2 * q))


def newton_min(state: State, kind: Perturbation, eps: float, target: float = GRAD_TARGET,
               max_iter: int = 50) -> State:
    """Newton's method on the Euler-Lagrange equations, with step halving."""
    cur = state
    g = el_gradient(cur, kind, eps)
    size = grad_size(cur, kind, eps)
    for _ in range(max_iter):
        if size < target:
            return cur
        h = hessian(cur, kind, eps)
        if eps == 0:
            # translations are a null direction; pin x_0, the gradient is orthogonal to them
            step = np.zeros(2 * cur.q)
            if cur.q > 1:
                step[2:] = spsolve(h[2:, 2:], g.ravel()[2:])
        else:
            with np.errstate(all="ignore"):
                step = spsolve(h, g.ravel())
        if not np.all(np.isfinite(step)):
            raise ConvergenceError("singular Hessian; try gradient_flow instead", cur)
        t = 1.0
        while t > 1e-6:
            trial = replace(cur, x=cur.x - t * step.reshape(-1, 2))
            ts = grad_size(trial, kind, eps)
            if ts < size:
                break
            t /= 2
        else:
            raise ConvergenceError(f"Newton stalled at grad_size {size:.3e}", cur)
        cur, size = trial, ts
        g = el_gradient(cur, kind, eps)
    if size < target:
        return cur
    raise ConvergenceError(f"no convergence in {max_iter} Newton steps", cur)


def gradient_flow(state: State, kind: Perturbation, eps: float, target: float = GRAD_TARGET,
                  tol: float = 1e-10, max_steps: int = 200000) -> State:
    """Integrate dx/dtau = -dL/dx with an adaptive Euler/Heun pair.

    A step is accepted only when the Euler/Heun difference is below
    ``tol`` plus a thousandth of the step itself, and the action does not
    increase.  The flow heads for minima rather than saddles, so it is
    also the way to reach a true minimizer from a rough start.
    """
    cur = state
    act = action(cur, kind, eps)
    h = 0.1
    g = el_gradient(cur, kind, eps)
    for _ in range(max_steps):
        if float(np.sqrt(np.sum(g * g) / cur.q)) < target:
            return cur
        x1 = cur.x - h * g
        g1 = el_gradient(replace(cur, x=x1), kind, eps)
        x2 = cur.x - 0.5 * h * (g + g1)
        err = float(np.max(np.abs(x2 - x1)))
        trial = replace(cur, x=x2)
        ta = action(trial, kind, eps)
        # the action may not rise by more than its own round-off
        noise = 1e-15 * cur.q * max(1.0, abs(act))
        if err <= tol + 1e-3 * float(np.max(np.abs(x2 - cur.x))) and ta <= act + noise:
            cur, act = trial, ta
            g = el_gradient(cur, kind, eps)
            h = min(h * 1.5, 0.45)
        else:
            h /= 2
            if h < 1e-14:
                raise ConvergenceError("step size underflow", cur)
    raise ConvergenceError(f"no convergence in {max_steps} steps", cur)


def seed_point(kind: Perturbation) -> np.ndarray:
    """Maximum of V, i.e. the minimum of the perturbation -eps V."""
    g = np.linspace(0, 1, 61)[:-1]
    best = max(((potential((a, b), kind), a, b) for a in g for b in g))
    res = optimize.minimize(lambda y: -potential(y, kind), best[1:],
                            jac=lambda y: -grad_potential(y, kind), method="BFGS", options={"gtol": 1e-12})
    return np.asarray(res.x) % 1.0


def seed_state(p, q: int, kind: Perturbation, budget: int = 400_000) -> State:
    """Uniform (p, q) state translated to maximize the orbit average of V.

    That translation is the eps -> 0 limit of the minimizer.  For long
    states the average is nearly flat, so once a grid search would cost
    more than ``budget`` potential evaluations the orbit is simply
    started at the maximum of V.
    """
    n = 40
    if q * n * n > budget:
        return uniform_state(p, q, seed_point(kind))
    offsets = np.arange(q)[:, None] * np.asarray(p, dtype=float) / q

    def mean_v(y):
        return float(np.mean([potential(pt, kind) for pt in y + offsets]))

    g = np.arange(n) / n
    best = max((mean_v(np.array([a, b])), a, b) for a in g for b in g)
    res = optimize.minimize(lambda y: -mean_v(y), best[1:], method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-15})
    return uniform_state(p, q, np.asarray(res.x) % 1.0)


def continuation(p, q: int, kind: Perturbation, schedule: Sequence[float], jitter: float = 0.0,
                 seed: int = 0, target: float = GRAD_TARGET) -> list[State]:
    """Minimizing states for each eps in ``schedule``, each seeded by the last.

    ``jitter`` displaces every seed point at random to break the
    internal periodicity of states like n p / n q.  Newton converges to
    the nearest critical point, which for short states at large eps can
    be a saddle; ``gradient_flow`` is the remedy there.
    """
    st = seed_state(p, q, kind)
    if jitter:
        rng = np.random.default_rng(seed)
        st = replace(st, x=st.x + rng.uniform(-jitter, jitter, st.x.shape))
    if len(schedule) == 0:
        return [st]
    out = []
    for eps in schedule:
        try:
            st = newton_min(st, kind, float(eps), target=target)
        except ConvergenceError as exc:
            st = gradient_flow(exc.state or st, kind, float(eps), target=target)
        out.append(st)
    return out


# ---------------------------------------------------------------- quality


def momenta(state: State, kind: Perturbation, eps: float) -> np.ndarray:
    """p_j = -dH/dx(x_j, x_{j+1}) for j = 0 .. q."""
    pts = state.points
    nxt = np.vstack([pts[1:], pts[1:2] + np.asarray(state.p, dtype=float)])
    return nxt - pts + eps * _vgrad(pts, kind)


def phase_step(x, p, kind: Perturbation, eps: float):
    """The map F(x, p) generated by H."""
    pn = p - eps * grad_potential(x, kind)
    return x + pn, pn


def quality(state: State, kind: Perturbation, eps: float) -> OrbitQuality:
    pts, mom = state.points, momenta(state, kind, eps)
    worst = 0.0
    for j in range(state.q):
        xn, pn = phase_step(pts[j], mom[j], kind, eps)
        d = np.concatenate([pts[j + 1] - xn, mom[j + 1] - pn])
        worst = max(worst, float(np.linalg.norm(d)))
    return OrbitQuality(worst, grad_size(state, kind, eps))


def shadow_expanded(state: State, kind: Perturbation, eps: float) -> float:
    """Same quantity as ``quality().shadow`` written out by components."""
    pts, mom = state.points, momenta(state, kind, eps)
    g = _vgrad(pts[:-1], kind)
    pn = mom[:-1] - eps * g
    xn = pts[:-1] + pn
    s = np.sum((pts[1:] - xn) ** 2 + (mom[1:] - pn) ** 2, axis=1)
    return float(np.sqrt(np.max(s)))


def phase_jacobian(x, kind: Perturbation, eps: float) -> np.ndarray:
    """DF at (x, p) in (x0, x1, p0, p1) order; it does not depend on p."""
    h = eps * hess_potential(x, kind)
    i = np.eye(2)
    return np.block([[i - h, i], [-h, i]])


# ---------------------------------------------------------------- Lyapunov


def _gram_schmidt(v: np.ndarray):
    """Modified Gram-Schmidt on the columns; returns (Q, norms)."""
    q = v.copy()
    n = np.zeros(v.shape[1])
    for i in range(v.shape[1]):
        for k in range(i):
            q[:, i] -= (q[:, k] @ q[:, i]) * q[:, k]
        n[i] = np.linalg.norm(q[:, i])
        q[:, i] /= n[i]
    return q, n


def lyapunov(points: Sequence, jacobian: Callable, n_vectors: int | None = None,
             periods: int = 1, warmup: int = 0, renorm: float = RENORM) -> np.ndarray:
    """Lyapunov exponents along a periodic orbit, largest first.

    ``points`` are the q orbit points and ``jacobian(point)`` the tangent
    map there.  The frame is carried step by step and re-orthonormalized
    whenever a vector grows beyond ``renorm``; ``warmup`` periods are run
    first and their growth discarded.
    """
    pts = list(points)
    dim = jacobian(pts[0]).shape[0]
    k = n_vectors or dim
    frame = np.eye(dim)[:, :k]
    logs = np.zeros(k)
    for rep in range(warmup + periods):
        for pt in pts:
            frame = jacobian(pt) @ frame
            if np.max(np.linalg.norm(frame, axis=0)) > renorm:
                frame, n = _gram_schmidt(frame)
                if rep >= warmup:
                    logs += np.log(n)
        if rep == warmup - 1:
            frame, _ = _gram_schmidt(frame)
    frame, n = _gram_schmidt(frame)
    logs += np.log(n)
    return np.sort(logs / (periods * len(pts)))[::-1]


def std_map_jacobian(k: float) -> Callable:
    """Tangent map of p' = p - k/2pi sin 2pi x, x' = x + p' in (x, p) order."""
    def jac(pt):
        c = k * math.cos(2 * math.pi * pt[0])
        return np.array([[1 - c, 1.0], [-c, 1.0]])

    return jac


def state_lyapunov(state: State, kind: Perturbation, eps: float, periods: int = 4,
                   warmup: int = 3, **kw) -> np.ndarray:
    """Exponents of a periodic state; a few warmup periods align the frame first."""
    return lyapunov(state.x, lambda pt: phase_jacobian(pt, kind, eps), periods=periods,
                    warmup=warmup, **kw)


# ---------------------------------------------------------------- diagnostics


def _torus_delta(d: np.ndarray) -> np.ndarray:
    d = np.mod(d, 1.0)
    return np.minimum(d, 1.0 - d)


def smoothness_pairs(state: State, kind: Perturbation, eps: float, m: int = 800):
    """(|dp| / |dx|, |dx|) for the m closest pairs of points on the torus."""
    q = state.q
    theta = np.mod(state.x, 1.0)
    mom = momenta(state, kind, eps)[:q]
    want = min(m, q * (q - 1) // 2)
    if want == 0:
        return []
    tree = cKDTree(theta, boxsize=1.0 + 1e-12)
    kk = min(q, want + 1)
    dist, idx = tree.query(theta, k=kk)
    pairs = {}
    for i in range(q):
        for d, j in zip(np.atleast_1d(dist[i]), np.atleast_1d(idx[i])):
            if j != i and d > 0:
                key = (min(i, j), max(i, j))
                pairs[key] = d
    best = sorted(pairs.items(), key=lambda kv: (kv[1], kv[0]))[:want]
    out = []
    for (i, j), _ in best:
        dx = float(np.linalg.norm(_torus_delta(state.x[i] - state.x[j])))
        dp = float(np.linalg.norm(mom[i] - mom[j]))
        out.append((dp / dx, dx))
    return out


def deviation_curve(state: State) -> np.ndarray:
    """Torus distance between x_j and x_0 + (j/q) p, per j."""
    j = np.arange(state.q)[:, None]
    ref = state.x[0] + j * np.asarray(state.p, dtype=float) / state.q
    return np.linalg.norm(_torus_delta(state.x - ref), axis=1)


def deviation(state: State) -> float:
    return float(np.max(deviation_curve(state)))


# ---------------------------------------------------------------- output


def quality_line(state: State, q: OrbitQuality) -> str:
    return f"{state.label()} shadow {q.shadow:.3e} grad_size {q.grad_size:.3e}"


def write_csv(path: str, header: Iterable[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])


def orbit_rows(state: State, kind: Perturbation, eps: float):
    mom = momenta(state, kind, eps)
    th = np.mod(state.x, 1.0)
    for j in range(state.q):
        yield (j, float(th[j, 0]), float(th[j, 1]), float(mom[j, 0]), float(mom[j, 1]))


ORBIT_HEADER = ("j", "theta0", "theta1", "p0", "p1")
SMOOTH_HEADER = ("L", "dx")
DEVIATION_HEADER = ("j", "deviation")
LYAPUNOV_HEADER = ("i", "exponent")


__all__ = [
    "State", "OrbitQuality", "ConvergenceError", "uniform_state", "action", "el_gradient",
    "grad_size", "hessian", "newton_min", "gradient_flow", "seed_point", "seed_state", "continuation",
    "momenta", "phase_step", "quality", "shadow_expanded", "phase_jacobian", "lyapunov",
    "std_map_jacobian", "state_lyapunov", "smoothness_pairs", "deviation", "deviation_curve",
    "quality_line", "write_csv", "orbit_rows",
]

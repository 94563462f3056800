"""The subdivide-and-test driver for non-existence proofs.

Each work item is a starting prism ``S_0 = box x {x*} x R``: a box of
parameters, the fixed first point x*, and a rectangle R of candidate
second points.  A prism is discarded only after the rigorous pass shows
that no orbit through it can be minimizing; otherwise it is halved.
"""
from __future__ import annotations

import math
import os
import time
from collections import Counter, deque
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Callable

import numpy as np

from . import dec
from .backend import FloatBackend, RigorousBackend
from .cones import (CRITERIA, GlobalBounds, SuiteVacuous, beta_eigen_bounds,
                    eigen_suite_step, global_bounds_4d, initial_stats, starting_point,
                    suite_success)
from .dec import RigorError
from .inputs import InputSpec
from .maps import AbcParams, eig_beta, g_abc_float
from .prism import (Prism, SingularMatrixError, Status, bound_image, prism_blocks,
                    prism_from_lines, prism_to_lines, PrismParseError)

AXES = {"a": 0, "b": 1, "c": 2, "v0": 5, "v1": 6}
# order used to break ties between equal cut scores
_TIE_ORDER = ("v0", "v1", "a", "b", "c")


@dataclass
class ProofConfig:
    dp: int = 35
    safety_dp: int = 5
    max_depth: int = 30
    stubborn: bool = False
    terse: bool = False
    max_steps: int = 25
    min_angle_deg: float = 27.0
    backup_path: str | None = None
    backup_every: int = 25
    graphics_path: str | None = None
    start: str = "least-lambda"
    symmetry: bool = True
    stop_after: int | None = None
    log: Callable[[str], None] | None = None

    @property
    def precision(self) -> int:
        return self.dp + self.safety_dp

    @property
    def max_error(self) -> Decimal:
        return dec.ulp(self.dp)


@dataclass
class OrbitResult:
    success: bool
    steps: int
    winner: str | None = None
    reason: str = ""
    axis: str = "v0"
    wins: Counter = field(default_factory=Counter)


# ---------------------------------------------------------------- helpers


def cut_scores(p) -> dict:
    """How much each starting direction contributes to the v-rows of a prism."""
    def col(k):
        return sum(abs(float(p[r][k])) for r in (5, 6))

    return {name: col(k) for name, k in AXES.items()}


def choose_axis(p, can_cut: dict | None = None) -> str:
    scores = cut_scores(p)
    allowed = [n for n in _TIE_ORDER if (can_cut is None or can_cut.get(n, True))]
    best = max(allowed, key=lambda n: (scores[n], -_TIE_ORDER.index(n)))
    return best


def refine_prism(s: Prism, axis: str) -> tuple[Prism, Prism]:
    """Halve a starting prism along one of a, b, c, v0, v1."""
    k = AXES[axis]
    h = s.matrix[k][k]
    with dec.exact():
        half = h * Decimal("0.5") if isinstance(h, Decimal) else h / 2
        out = []
        for sign, tag in ((-1, "-"), (1, "+")):
            c = list(s.center)
            c[k] = c[k] + sign * half
            m = [list(r) for r in s.matrix]
            m[k][k] = half
            out.append(Prism(c, m, Status.UNTRIED, s.n_cuts + 1, s.cut_history + (axis + tag,)))
    return out[0], out[1]


def param_box(s: Prism) -> AbcParams:
    c, m = s.center, s.matrix
    return AbcParams(c[0], c[1], c[2], m[0][0], m[1][1], m[2][2])


def v_rect(s: Prism):
    """((lo0, hi0), (lo1, hi1)) of the candidate second point, as Dec."""
    with dec.exact():
        return tuple((s.center[k] - s.matrix[k][k], s.center[k] + s.matrix[k][k]) for k in (5, 6))


def _floatify(s: Prism) -> Prism:
    return s.to_float()


# ---------------------------------------------------------------- report


@dataclass
class ProofReport:
    verdict: str
    params: AbcParams
    quick: int
    semi: int
    rigorous: int
    successes: int
    deepest: int
    longest_semi: int
    longest_success: int
    by_trace: int
    by_lambda: int
    wins: dict
    symmetric: int
    elapsed: float
    failed_history: tuple = ()

    def percentages(self) -> dict:
        total = sum(self.wins.values())
        return {k: (100.0 * self.wins.get(k, 0) / total if total else 0.0) for k in CRITERIA}


def _sci(x) -> str:
    return f"{float(x):.14e}"


def format_report(spec: InputSpec, rep: ProofReport, region, timing: bool = True) -> str:
    p = spec.params
    out = ["Parameters : "]
    for name, c, d in zip("abc", p.centers, p.widths):
        out.append(f"{name} : {_sci(c)} \t {_sci(d)} ")
    out += ["", "Initial region : "]
    for k, (c, h) in enumerate(region):
        out.append(f"v[{k}] : {_sci(c)} \t {_sci(h)} ")
    out += ["", "Comments :", ""]
    out += list(spec.comments)
    out += ["", "+" * 48]
    lo = [float(c - d) for c, d in zip(p.centers, p.widths)]
    hi = [float(c + d) for c, d in zip(p.centers, p.widths)]
    if rep.verdict == "no-tori":
        out.append("I find no invariant tori for the range of parameters :")
    else:
        out.append("I could not rule out invariant tori for the range of parameters :")
    for name, l, h in zip("abc", lo, hi):
        out.append(f"{l:.6f} < {name} < {h:.6f} ")
    if rep.verdict == "partial":
        out.append(f"A prism cut {len(rep.failed_history)} times resisted every test: "
                   f"{' '.join(rep.failed_history) or '(initial prism)'}")
    out.append("")
    out.append(f"Did {rep.quick} quick checks, {rep.semi} semi-rigorous bounding tries,")
    out.append(f"and {rep.rigorous} rigorous bounding tries. ")
    out.append(f"The most deeply refined prism was cut {rep.deepest} times. ")
    out.append(f"The longest semi-rigorous orbit ran for {rep.longest_semi} iterations, ")
    out.append(f"the longest successful orbit, {rep.longest_success} iterations. ")
    out.append(f"Of the {rep.successes} successful prisms, {rep.by_trace} fell to the trace criterion, ")
    out.append(f"{rep.by_lambda} to the least eigenvalue test. ")
    if rep.symmetric:
        out.append(f"{rep.symmetric} prisms were skipped as mirror images. ")
    pc = rep.percentages()
    out.append("The best upper bound on the least eigenvalue came from ")
    out.append(f"the maxBlam criterion {pc['maxBlam']:.1f}% of the time, ")
    out.append(f"the minBlam criterion {pc['minBlam']:.1f}% of the time, ")
    out.append(f"and from the trace criterion {pc['trace']:.1f}% of the time. ")
    if timing:
        out += ["", f"This investigation took {rep.elapsed:.2f} seconds. "]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- engine


class ProofRun:
    """State of one proof attempt; see :meth:`run`."""

    def __init__(self, spec: InputSpec, cfg: ProofConfig | None = None):
        self.spec = spec
        self.cfg = cfg or ProofConfig()
        self.rbk = RigorousBackend(self.cfg.dp, self.cfg.safety_dp)
        self.fbk = FloatBackend()
        self.region = spec.region(self.cfg.precision)
        self.x_star = starting_point(spec.params, self.cfg.start)
        self.worklist: deque[Prism] = deque([self._initial_prism()])
        self.done: list[Prism] = []
        self.counts = Counter()
        self.wins = Counter()
        self.deepest = 0
        self.longest_semi = 0
        self.longest_success = 0
        self.failed: list[Prism] = []
        self.elapsed_before = 0.0
        self.processed = 0
        self._gb: dict = {}
        self._sym_ok = self._symmetry_possible()

    # -- setup

    def _initial_prism(self) -> Prism:
        p = self.spec.params
        (c0, h0), (c1, h1) = self.region
        center = (p.a_c, p.b_c, p.c_c, self.x_star[0], self.x_star[1], c0, c1)
        widths = (p.da, p.db, p.dc, dec.ZERO, dec.ZERO, h0, h1)
        return Prism.box(center, widths)

    def _symmetry_possible(self) -> bool:
        (c0, h0), (c1, h1) = self.region
        return (self.cfg.symmetry and self.x_star[0] == self.x_star[1]
                and c0 == c1 and h0 == h1)

    def global_bounds(self, s: Prism, bk) -> GlobalBounds:
        box = param_box(s)
        key = (bk.rigorous, box.centers, box.widths)
        gb = self._gb.get(key)
        if gb is None:
            gb = global_bounds_4d(box, bk)
            self._gb[key] = gb
        return gb

    # -- tests

    def is_symmetric_copy(self, s: Prism) -> bool:
        """True when s lies on or above the diagonal and its mirror is kept.

        Needs a = b over the whole box, x* on the diagonal and a region
        symmetric under v0 <-> v1.
        """
        if not self._sym_ok:
            return False
        c, m = s.center, s.matrix
        if c[0] != c[1] or m[0][0] != m[1][1]:
            return False
        (lo0, hi0), (lo1, hi1) = v_rect(s)
        return lo1 >= hi0

    def quick_try(self, s: Prism) -> OrbitResult:
        """Follow the single orbit (x*, centre) in floats with point bounds."""
        cfg = self.cfg
        gb = self.global_bounds(s, self.fbk)
        x = np.array([float(v) for v in s.center])
        a, b, c = x[:3]
        jac = np.array([[float(v) for v in r] for r in s.matrix])
        st = initial_stats(gb)
        for j in range(cfg.max_steps + 1):
            if j == 0:
                v0, v1 = x[3], x[4]
            else:
                v0, v1 = x[5], x[6]
            tr, lm, lp = eig_beta(v0, v1, a, b, c)
            try:
                st = eigen_suite_step((tr, lp, lm), st, gb, self.fbk)
            except SuiteVacuous:
                break
            if suite_success(st, gb):
                return OrbitResult(True, j, st.winner, axis=choose_axis(jac))
            if j >= 1:
                # tangent map of the step x_j -> x_{j+1}, applied to the shape
                from .maps import dg_abc

                jac = np.array(dg_abc(tuple(x), self.fbk)) @ jac
                x = g_abc_float(x)
        return OrbitResult(False, cfg.max_steps, reason="no certificate", axis=choose_axis(jac))

    def follow(self, s: Prism, bk) -> OrbitResult:
        """Image-bounding orbit test; ``bk`` decides rigorous or float."""
        cfg = self.cfg
        gb = self.global_bounds(s, bk)
        if not bk.rigorous:
            s = _floatify(s)
        wins = Counter()
        with bk.context():
            pr = [bk.around(s.center[i], s.matrix[i][i]) for i in range(3)]
            x0, x1 = s.center[3], s.center[4]
            first = (bk.sin_iv(bk.point(x0)), bk.sin_iv(bk.point(x1)), bk.sin_iv(bk.point(x0 + x1)))
        st = initial_stats(gb)
        cur = s
        half_turn = bk.pi
        try:
            st = eigen_suite_step(beta_eigen_bounds(*first, *pr, bk), st, gb, bk)
            wins[st.winner] += 1
            won = suite_success(st, gb)
            if won:
                return OrbitResult(True, 0, won, wins=wins)
            for j in range(1, cfg.max_steps + 1):
                blocks = prism_blocks(cur, bk)
                st = eigen_suite_step(beta_eigen_bounds(blocks.sin0, blocks.sin1, blocks.sin01, *pr, bk),
                                      st, gb, bk)
                wins[st.winner] += 1
                won = suite_success(st, gb)
                if won:
                    return OrbitResult(True, j, won, wins=wins, axis=choose_axis(cur.matrix))
                if st.ub_lam_minus >= gb.lam_max:
                    return OrbitResult(False, j, reason="bound lost", wins=wins, axis=choose_axis(cur.matrix))
                if j == cfg.max_steps:
                    break
                if max(cur.radius(5), cur.radius(6)) > half_turn:
                    return OrbitResult(False, j, reason="prism too wide", wins=wins,
                                       axis=choose_axis(cur.matrix))
                fat = "fixed" if j == 1 else "rotor"
                cur = bound_image(cur, bk, fat, math.radians(cfg.min_angle_deg), blocks=blocks).prism
        except SuiteVacuous:
            return OrbitResult(False, 0, reason="suite vacuous", wins=wins, axis=choose_axis(cur.matrix))
        except (SingularMatrixError, RigorError, np.linalg.LinAlgError) as exc:
            return OrbitResult(False, 0, reason=f"{type(exc).__name__}: {exc}", wins=wins,
                               axis=choose_axis(cur.matrix))
        return OrbitResult(False, cfg.max_steps, reason="step budget", wins=wins, axis=choose_axis(cur.matrix))

    def try_prism(self, s: Prism) -> OrbitResult:
        return self.follow(s, self.fbk)

    def rtry_prism(self, s: Prism) -> OrbitResult:
        return self.follow(s, self.rbk)

    # -- main loop

    def _log(self, msg: str):
        if self.cfg.log:
            self.cfg.log(msg)

    def _split(self, s: Prism, axis: str) -> bool:
        """Queue the halves of s; False when the depth limit is hit."""
        if s.n_cuts + 1 > self.cfg.max_depth:
            s.status = Status.MAYBE
            self.failed.append(s)
            self.done.append(s)
            return False
        left, right = refine_prism(s, axis)
        self.worklist.appendleft(right)
        self.worklist.appendleft(left)
        return True

    def step(self) -> bool:
        """Process one prism; False when the run must stop."""
        s = self.worklist.popleft()
        s.status = Status.ACTIVE
        self.processed += 1
        self.deepest = max(self.deepest, s.n_cuts)
        if self.is_symmetric_copy(s):
            s.status = Status.SYMMTRC
            self.counts["symmetric"] += 1
            self.done.append(s)
            return True
        self.counts["quick"] += 1
        q = self.quick_try(s)
        if not q.success:
            return self._split(s, q.axis) or self.cfg.stubborn
        self.counts["semi"] += 1
        f = self.try_prism(s)
        self.longest_semi = max(self.longest_semi, f.steps)
        if not f.success:
            return self._split(s, f.axis) or self.cfg.stubborn
        self.counts["rigorous"] += 1
        r = self.rtry_prism(s)
        self.wins.update(r.wins)
        if r.success:
            s.status = Status.NO_TORI
            self.done.append(s)
            self.counts["success"] += 1
            self.counts["by_trace" if r.winner == "trace" else "by_lambda"] += 1
            self.longest_success = max(self.longest_success, r.steps)
            if self.cfg.terse:
                self._log(f"prism {' '.join(s.cut_history) or '(initial)'} has no minimizing orbits "
                          f"({r.steps} iterations, {r.winner})")
            return True
        return self._split(s, r.axis) or self.cfg.stubborn

    def run(self) -> ProofReport:
        t0 = time.perf_counter()
        stopped = False
        since_backup = 0
        while self.worklist:
            if self.cfg.stop_after is not None and self.processed >= self.cfg.stop_after:
                stopped = True
                break
            ok = self.step()
            since_backup += 1
            if self.cfg.backup_path and since_backup >= self.cfg.backup_every:
                self.elapsed_before += time.perf_counter() - t0
                t0 = time.perf_counter()
                self.backup(self.cfg.backup_path)
                since_backup = 0
            if not ok:
                break
        self.elapsed_before += time.perf_counter() - t0
        if self.cfg.backup_path:
            self.backup(self.cfg.backup_path)
        if self.cfg.graphics_path:
            from .graphics import emit_graphics

            emit_graphics(self.done, self.region, self.cfg.graphics_path)
        return self.report(interrupted=stopped)

    def report(self, interrupted: bool = False) -> ProofReport:
        if self.failed:
            verdict = "partial"
        elif self.worklist or interrupted:
            verdict = "interrupted"
        else:
            verdict = "no-tori"
        c = self.counts
        return ProofReport(
            verdict=verdict, params=self.spec.params, quick=c["quick"], semi=c["semi"],
            rigorous=c["rigorous"], successes=c["success"], deepest=self.deepest,
            longest_semi=self.longest_semi, longest_success=self.longest_success,
            by_trace=c["by_trace"], by_lambda=c["by_lambda"],
            wins={k: self.wins.get(k, 0) for k in CRITERIA}, symmetric=c["symmetric"],
            elapsed=self.elapsed_before,
            failed_history=self.failed[0].cut_history if self.failed else (),
        )

    # -- persistence

    def backup(self, path: str) -> None:
        lines = ["converse-backup v1"]
        lines.append("spec " + " ".join(dec.fmt(x) for x in (*self.spec.params.centers, *self.spec.params.widths)))
        lines.append("angles " + " ".join(dec.fmt(x) for pair in self.spec.angles for x in pair))
        lines.append(f"comments {len(self.spec.comments)}")
        lines += ["# " + c for c in self.spec.comments]
        cfg = self.cfg
        lines.append(f"config {cfg.dp} {cfg.safety_dp} {cfg.max_depth} {int(cfg.stubborn)} {cfg.max_steps} "
                     f"{cfg.min_angle_deg!r} {cfg.start} {int(cfg.symmetry)}")
        lines.append("xstar " + " ".join(dec.fmt(x) for x in self.x_star))
        c = self.counts
        keys = ("quick", "semi", "rigorous", "success", "by_trace", "by_lambda", "symmetric")
        lines.append("counts " + " ".join(f"{k}={c[k]}" for k in keys))
        lines.append("wins " + " ".join(f"{k}={self.wins.get(k, 0)}" for k in CRITERIA))
        lines.append(f"stats {self.deepest} {self.longest_semi} {self.longest_success} {self.processed} "
                     f"{self.elapsed_before!r}")
        for tag, items in (("pending", list(self.worklist)), ("done", self.done), ("failed", self.failed)):
            lines.append(f"{tag} {len(items)}")
            for s in items:
                lines += prism_to_lines(s)
        tmp = f"{path}.tmp"
        with open(tmp, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, path)

    @classmethod
    def restore(cls, path: str, cfg: ProofConfig | None = None) -> "ProofRun":
        """Rebuild a run from a backup; ``cfg`` may override paths and logging."""
        with open(path) as fh:
            lines = fh.read().splitlines()
        return _parse_backup(lines, cfg)


class BackupError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def _parse_backup(lines, cfg_override):
    from .inputs import InputSpec

    pos = 0

    def take(tag):
        nonlocal pos
        if pos >= len(lines):
            raise BackupError(pos + 1, f"expected '{tag}', found end of file")
        parts = lines[pos].split(" ")
        if parts[0] != tag:
            raise BackupError(pos + 1, f"expected '{tag}', found {lines[pos][:40]!r}")
        pos += 1
        return parts[1:]

    try:
        if take("converse-backup") != ["v1"]:
            raise BackupError(1, "unknown backup version")
        sp = [dec.parse(x) for x in take("spec")]
        ang = [dec.parse(x) for x in take("angles")]
        ncom = int(take("comments")[0])
        comments = []
        for _ in range(ncom):
            ln = lines[pos]
            if not ln.startswith("# "):
                raise BackupError(pos + 1, "expected a comment line")
            comments.append(ln[2:])
            pos += 1
        cf = take("config")
        xs = [dec.parse(x) for x in take("xstar")]
        counts = dict(kv.split("=") for kv in take("counts"))
        wins = dict(kv.split("=") for kv in take("wins"))
        stats = take("stats")
    except BackupError:
        raise
    except (ValueError, IndexError, ArithmeticError) as exc:
        raise BackupError(pos + 1 if pos < len(lines) else pos, f"malformed field: {exc}") from None
    spec = InputSpec(AbcParams(*sp), ((ang[0], ang[1]), (ang[2], ang[3])), comments)
    cfg = cfg_override or ProofConfig()
    cfg.dp, cfg.safety_dp, cfg.max_depth = int(cf[0]), int(cf[1]), int(cf[2])
    cfg.stubborn, cfg.max_steps, cfg.min_angle_deg = bool(int(cf[3])), int(cf[4]), float(cf[5])
    cfg.start, cfg.symmetry = cf[6], bool(int(cf[7]))
    run = ProofRun.__new__(ProofRun)
    run.spec, run.cfg = spec, cfg
    run.rbk = RigorousBackend(cfg.dp, cfg.safety_dp)
    run.fbk = FloatBackend()
    run.region = spec.region(cfg.precision)
    run.x_star = (xs[0], xs[1])
    run.counts = Counter({k: int(v) for k, v in counts.items()})
    run.wins = Counter({k: int(v) for k, v in wins.items()})
    run.deepest, run.longest_semi, run.longest_success, run.processed = (int(x) for x in stats[:4])
    run.elapsed_before = float(stats[4])
    run._gb = {}
    run._sym_ok = run._symmetry_possible()
    groups = {}
    for tag in ("pending", "done", "failed"):
        head = take(tag)
        try:
            n = int(head[0])
        except (ValueError, IndexError):
            raise BackupError(pos, f"malformed '{tag}' count") from None
        items = []
        for _ in range(n):
            chunk = lines[pos:pos + 9]
            try:
                items.append(prism_from_lines(chunk, pos + 1))
            except PrismParseError as exc:
                raise BackupError(exc.lineno, str(exc).split(": ", 1)[1]) from None
            pos += 9
        groups[tag] = items
    run.worklist = deque(groups["pending"])
    run.done = groups["done"]
    run.failed = groups["failed"]
    return run


def run_proof(spec: InputSpec, cfg: ProofConfig | None = None) -> ProofReport:
    return ProofRun(spec, cfg).run()


__all__ = [
    "ProofConfig", "ProofRun", "ProofReport", "OrbitResult", "run_proof", "refine_prism",
    "choose_axis", "cut_scores", "format_report", "BackupError", "param_box", "v_rect",
]

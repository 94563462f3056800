"""Command line: ``converse prove`` and ``converse orbits``.

Exit codes are 0 when every prism was eliminated, 2 for a partial or
interrupted run, and 1 for usage or I/O errors.
"""
from __future__ import annotations

import sys

import click
import numpy as np

from .engine import BackupError, ProofConfig, ProofRun, format_report
from .inputs import InputError, parse_input
from .maps import Perturbation

EXIT_PROVEN, EXIT_USAGE, EXIT_PARTIAL = 0, 1, 2

KINDS = {"trig": Perturbation.TRIG, "poly": Perturbation.POLY, "ff": Perturbation.FF}


@click.group()
def cli():
    """Converse KAM proofs and Birkhoff orbit numerics."""


@cli.command()
@click.argument("input_file", type=click.File("r"), required=False)
@click.option("-d", "depth", type=click.IntRange(0), default=30, show_default=True,
              help="Deepest allowed refinement.")
@click.option("-b", "backup", type=click.Path(dir_okay=False), help="Keep a restartable backup here.")
@click.option("-g", "graphics", default="off", show_default=True,
              help="Base name for the SVG and PostScript pictures, or 'off'.")
@click.option("-p", "dp", type=click.IntRange(10, 200), default=35, show_default=True,
              help="Decimal places carried by the rigorous arithmetic.")
@click.option("-s", "stubborn", is_flag=True, help="Keep going after a prism fails at the depth limit.")
@click.option("-t", "terse", is_flag=True, help="Print a line for every eliminated prism.")
@click.option("-r", "restore", type=click.Path(exists=True, dir_okay=False),
              help="Resume from a backup written by -b.")
@click.option("-o", "output", type=click.File("w"), default="-", help="Report destination.")
@click.option("--backup-every", type=click.IntRange(1), default=25, show_default=True)
@click.option("--max-steps", type=click.IntRange(1), default=25, show_default=True,
              help="Orbit steps tried per prism.")
@click.option("--stop-after", type=click.IntRange(0), default=None,
              help="Stop after this many prisms (for testing restores).")
@click.option("--no-time", is_flag=True, help="Leave the timing line out of the report.")
def prove(input_file, depth, backup, graphics, dp, stubborn, terse, restore, output, backup_every,
          max_steps, stop_after, no_time):
    """Look for a proof that no invariant tori exist; the input is read from INPUT_FILE or stdin."""
    lines = []
    cfg = ProofConfig(dp=dp, max_depth=depth, stubborn=stubborn, terse=terse, max_steps=max_steps,
                      backup_path=backup, backup_every=backup_every,
                      graphics_path=None if graphics == "off" else graphics,
                      stop_after=stop_after, log=lines.append)
    try:
        if restore:
            run = ProofRun.restore(restore, cfg)
            run.cfg.backup_path = backup or restore
        else:
            text = (input_file or click.get_text_stream("stdin")).read()
            run = ProofRun(parse_input(text), cfg)
    except (InputError, BackupError, OSError) as exc:
        raise click.ClickException(str(exc)) from None
    rep = run.run()
    for ln in lines:
        output.write(ln + "\n")
    output.write(format_report(run.spec, rep, run.region, timing=not no_time))
    output.flush()
    sys.exit(EXIT_PROVEN if rep.verdict == "no-tori" else EXIT_PARTIAL)


@cli.group()
def orbits():
    """Minimizing periodic states, their diagnostics and rotation vectors."""


def _schedule(eps_max: float, steps: int):
    if eps_max == 0:
        return [0.0]
    return list(np.linspace(eps_max / steps, eps_max, steps))


@orbits.command()
@click.option("--p0", type=int, required=True)
@click.option("--p1", type=int, required=True)
@click.option("-q", "q", type=click.IntRange(1), required=True)
@click.option("--kind", type=click.Choice(sorted(KINDS)), default="trig", show_default=True)
@click.option("--eps", "eps_max", type=click.FloatRange(0), required=True, help="Final perturbation size.")
@click.option("--steps", type=click.IntRange(1), default=15, show_default=True)
@click.option("--jitter", type=click.FloatRange(0), default=0.0)
@click.option("--seed", type=int, default=0)
@click.option("--orbit-csv", type=click.Path(dir_okay=False))
@click.option("--lyapunov-csv", type=click.Path(dir_okay=False))
@click.option("--smooth-csv", type=click.Path(dir_okay=False))
@click.option("--deviation-csv", type=click.Path(dir_okay=False))
def continuation(p0, p1, q, kind, eps_max, steps, jitter, seed, orbit_csv, lyapunov_csv, smooth_csv,
                 deviation_csv):
    """Follow the (p0,p1)/q minimizing state from eps = 0 up to --eps."""
    from . import lab

    k = KINDS[kind]
    sched = _schedule(eps_max, steps)
    try:
        states = lab.continuation((p0, p1), q, k, sched, jitter=jitter, seed=seed)
    except lab.ConvergenceError as exc:
        raise click.ClickException(str(exc)) from None
    for eps, st in zip(sched, states):
        click.echo(f"eps {eps:.6g} {lab.quality_line(st, lab.quality(st, k, eps))}")
    st, eps = states[-1], sched[-1]
    if orbit_csv:
        lab.write_csv(orbit_csv, lab.ORBIT_HEADER, lab.orbit_rows(st, k, eps))
    if lyapunov_csv:
        ex = lab.state_lyapunov(st, k, eps)
        lab.write_csv(lyapunov_csv, lab.LYAPUNOV_HEADER, ((i, float(v)) for i, v in enumerate(ex)))
    if smooth_csv:
        lab.write_csv(smooth_csv, lab.SMOOTH_HEADER, lab.smoothness_pairs(st, k, eps))
    if deviation_csv:
        dev = lab.deviation_curve(st)
        lab.write_csv(deviation_csv, lab.DEVIATION_HEADER, ((j, float(v)) for j, v in enumerate(dev)))


@orbits.command()
@click.argument("w0", required=False)
@click.argument("w1", required=False)
@click.option("--levels", type=click.IntRange(1), default=30, show_default=True)
@click.option("--spiral", is_flag=True, help="Use the spiral mean as the target.")
def farey(w0, w1, levels, spiral):
    """Farey-triangle approximations (p0 p1 q address) of the vector (W0, W1)."""
    from decimal import Decimal, InvalidOperation

    from .rotation import farey_triangle_approx, format_triple, spiral_mean

    if spiral:
        target = spiral_mean()
    elif w0 is None or w1 is None:
        raise click.UsageError("give W0 and W1, or --spiral")
    else:
        try:
            target = (Decimal(w0), Decimal(w1))
        except InvalidOperation:
            raise click.UsageError("W0 and W1 must be numbers") from None
    try:
        rows = farey_triangle_approx(*target, levels)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    for t, addr in rows:
        click.echo(format_triple(t, addr))


@orbits.command()
@click.argument("omega")
@click.option("-n", "n", type=click.IntRange(0), default=20, show_default=True)
def cfrac(omega, n):
    """Partial quotients of OMEGA."""
    from decimal import Decimal, InvalidOperation

    from .rotation import cfrac as _cfrac

    try:
        w = Decimal(omega)
    except InvalidOperation:
        raise click.UsageError("OMEGA must be a number") from None
    click.echo(" ".join(str(a) for a in _cfrac(w, n)))


def main(argv=None) -> int:
    """Entry point; maps click's error handling onto this tool's exit codes."""
    try:
        cli.main(args=argv, prog_name="converse", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    return EXIT_PROVEN


def prove_main(argv=None) -> int:
    return main(["prove", *(argv or [])])


def orbits_main(argv=None) -> int:
    return main(["orbits", *(argv or [])])


if __name__ == "__main__":
    sys.exit(main())

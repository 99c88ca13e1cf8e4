"""``kpp-speedlab`` command-line front end.

Commands: ``speed``, ``scan``, ``counterexample``, ``simulate``, ``verify``.
Every command takes ``--config FILE`` (flat ``key = value`` lines, flags win)
and ``--save-config FILE`` (writes the merged configuration).

Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 premise failure,
5 simulation domain overrun.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (CONFIRM_N, SEARCH_BUDGET, SEARCH_N, find_nonproportional_counterexample,
                          find_proportional_counterexample, scan_speed_vs_b)
from .config import RunConfig, build_flow, parse_bc, resolve_reaction
from .errors import SpeedLabError, ValidationError
from .frontsim import SimConfig, simulate_front, write_trajectory
from .geometry import make_grid
from .model import DiffusionSpec, ProblemSpec
from .numfmt import fmt
from .speed import minimal_speed

SPEED_N = 256
SIM_DEFAULTS = dict(alpha=1.0, beta=1.0, n=16, strip=240.0, nx=4800, tend=80.0)
DEFAULTS = {
    "speed": dict(alpha=1.0, beta=1.0, flow="zero", bc="periodic", length=1.0, n=SPEED_N),
    "scan": dict(flow="zero", bc="periodic", length=1.0, n=SPEED_N, param="b", points=25),
    "counterexample": dict(bc="periodic", length=1.0, n=SEARCH_N, n_confirm=CONFIRM_N,
                           budget=SEARCH_BUDGET, mode="proportional"),
    "simulate": dict(flow="zero", bc="periodic", length=1.0, cfl_safety=0.9, level=0.5, fit_window=0.5,
                     **SIM_DEFAULTS),
    "verify": dict(suite="quick"),
}
REQUIRED = {"scan": ("from", "to", "out"), "counterexample": ("flow",)}
CONFIRM_GAP = 0.03
# library field names that differ from the flag a user typed
FIELD_FLAGS = {"axial": "alpha", "transverse": "beta", "mu": "reaction", "coefficients": "reaction",
               "step_at": "strip"}


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------

def _add_problem(p: argparse.ArgumentParser, diffusion: bool) -> None:
    if diffusion:
        p.add_argument("--alpha", type=float, help="axial diffusion")
        p.add_argument("--beta", type=float, help="transverse diffusion")
    p.add_argument("--flow", help="zero | cosine:amplitude=A[:mode=K] | pwl:file=PATH")
    p.add_argument("--fprime0", type=float, help="f'(0); alone it selects the logistic f'(0) u (1-u)")
    p.add_argument("--reaction", help="logistic:mu=R | poly:coeffs=c0,c1,...")
    p.add_argument("--bc", help="neumann | periodic")
    p.add_argument("--length", type=float, help="cross-section length")
    p.add_argument("--n", type=int, help="cross-section cells")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kpp-speedlab",
                                     description="Minimal KPP front speeds in shear flows.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key = value configuration file (flags override it)")
        p.add_argument("--save-config", dest="save_config", help="write the merged configuration here")
        return p

    p = command("speed", "minimal speed for one diffusion matrix")
    _add_problem(p, diffusion=True)
    p.add_argument("--csv", help="also write a one-row CSV")

    p = command("scan", "c* of diag(1, b) over a geometric grid of b")
    _add_problem(p, diffusion=False)
    p.add_argument("--param", help="scanned parameter (only 'b')")
    p.add_argument("--from", dest="from", type=float, help="first grid value")
    p.add_argument("--to", type=float, help="last grid value")
    p.add_argument("--points", type=int, help="number of grid points")
    p.add_argument("--out", help="output CSV path")

    p = command("counterexample", "search for a diffusion-speed counterexample")
    _add_problem(p, diffusion=False)
    p.add_argument("--mode", help="proportional | nonproportional")
    p.add_argument("--delta", type=float, help="separation delta (default depends on mode)")
    p.add_argument("--n-confirm", dest="n_confirm", type=int, help="confirmation grid (0 disables)")
    p.add_argument("--budget", type=int, help="maximum doublings/halvings per search")
    p.add_argument("--csv", help="write the search trace as CSV")

    p = command("simulate", "time-domain front simulation vs the variational speed")
    _add_problem(p, diffusion=True)
    p.add_argument("--strip", type=float, help="strip length in x")
    p.add_argument("--nx", type=int, help="cells in x")
    p.add_argument("--tend", type=float, help="final time")
    p.add_argument("--traj", help="write the front trajectory CSV here")
    p.add_argument("--cfl-safety", dest="cfl_safety", type=float)
    p.add_argument("--level", type=float, help="tracked level (default 0.5)")
    p.add_argument("--fit-window", dest="fit_window", type=float, help="fraction of the run used in the fit")

    p = command("verify", "run the acceptance criteria")
    p.add_argument("--suite", help="quick | full")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    base = RunConfig.load(args.config, args.command) if args.config else RunConfig(args.command)
    skip = {"command", "config", "save_config"}
    cfg = base.merged({k: v for k, v in vars(args).items() if k not in skip})
    for key in REQUIRED.get(args.command, ()):
        if cfg.get(key) is None:
            raise ValidationError(f"missing required parameter {key}", key)
    if args.save_config:
        Path(args.save_config).write_text(cfg.emit(), encoding="utf-8")
    return cfg


class Params:
    """Config values with per-command defaults filled in."""

    def __init__(self, cfg: RunConfig):
        self._vals = {**DEFAULTS[cfg.command], **cfg.values}

    def __getattr__(self, key):
        return self._vals.get(key)


def _section(p: Params, n: int | None = None):
    return make_grid(parse_bc(p.bc), p.length, p.n if n is None else n)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (int, float)) else v for v in row])


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def cmd_speed(p: Params, out) -> int:
    cs = _section(p)
    spec = ProblemSpec(cs, DiffusionSpec(p.alpha, p.beta), build_flow(p.flow, cs),
                       resolve_reaction(p.reaction, p.fprime0))
    r = minimal_speed(spec)
    print(f"c_star={r.c_star:.12f} lambda_star={r.lambda_star:.12f} k={r.k_at_star:.12f} n={cs.n}", file=out)
    if p.csv:
        _write_csv(p.csv, ["alpha", "beta", "n", "c_star", "lambda_star", "k"],
                   [[p.alpha, p.beta, cs.n, r.c_star, r.lambda_star, r.k_at_star]])
    return 0


def cmd_scan(p: Params, out) -> int:
    if p.param != "b":
        raise ValidationError(f"only --param b is supported, got {p.param!r}", "param")
    if not (p._vals["from"] > 0 and p.to > 0):
        raise ValidationError("scan range must be positive", "from")
    if p._vals["from"] > p.to:
        raise ValidationError("scan range must satisfy from <= to", "from")
    if p.points < 1 or (p.points > 1 and p._vals["from"] == p.to):
        raise ValidationError("points must be >= 1 and the range non-degenerate when points > 1", "points")
    cs = _section(p)
    flow = build_flow(p.flow, cs)
    grid = np.geomspace(p._vals["from"], p.to, p.points)
    rows = scan_speed_vs_b(flow, resolve_reaction(p.reaction, p.fprime0), cs, grid)
    _write_csv(p.out, ["b", "c_star", "lambda_star", "status"],
               [[r.b, r.c_star, r.lambda_star, r.status] for r in rows])
    ok = sum(r.status == "ok" for r in rows)
    print(f"rows={len(rows)} ok={ok} failed={len(rows) - ok} out={p.out}", file=out)
    for r in rows:
        if r.status != "ok":
            print(f"warning: b={fmt(r.b)} failed: {r.error}", file=sys.stderr)
    return 0 if ok else 3


def cmd_counterexample(p: Params, out) -> int:
    cs = _section(p)
    flow = build_flow(p.flow, cs)
    reaction = resolve_reaction(p.reaction, p.fprime0)
    n_confirm = p.n_confirm or None
    if p.mode == "proportional":
        rep = find_proportional_counterexample(flow, reaction, cs, p.delta, n_confirm, p.budget)
        fields = [("delta", rep.delta), ("M1", rep.M1), ("epsilon1", rep.epsilon1),
                  ("speed_small_diffusion", rep.speed_small_diffusion),
                  ("speed_large_diffusion", rep.speed_large_diffusion), ("margin", rep.margin), ("n", rep.n)]
        if n_confirm:
            fields += [("n_confirm", rep.n_confirm), ("confirm_small", rep.confirm_small),
                       ("confirm_large", rep.confirm_large), ("confirm_margin", rep.confirm_margin)]
        summary = "margin>0" if rep.verified else "margin<=0 at confirmation"
    elif p.mode == "nonproportional":
        rep = find_nonproportional_counterexample(flow, reaction, cs, p.delta, n_confirm, p.budget)
        fields = [("delta", rep.delta), ("epsilon", rep.epsilon), ("M", rep.M), ("c_eps", rep.c_eps),
                  ("c_M", rep.c_M), ("margin", rep.margin), ("n", rep.n)]
        if n_confirm:
            fields += [("n_confirm", rep.n_confirm), ("confirm_eps", rep.confirm_eps),
                       ("confirm_M", rep.confirm_M), ("confirm_margin", rep.confirm_margin)]
        summary = "c_eps > c_M" if rep.verified else "c_eps <= c_M at confirmation"
    else:
        raise ValidationError(f"mode must be proportional or nonproportional, got {p.mode!r}", "mode")
    print(f"premise: {rep.premise}", file=out)
    for k, v in fields:
        print(f"{k}={fmt(v)}", file=out)
    print(f"verified={'yes' if rep.verified else 'no'} {summary}", file=out)
    if p.csv:
        _write_csv(p.csv, ["kind", "value", "c_star"], rep.trace)
    return 0 if rep.verified else 3


def cmd_simulate(p: Params, out) -> int:
    cs = _section(p)
    flow = build_flow(p.flow, cs)
    spec = ProblemSpec(cs, DiffusionSpec(p.alpha, p.beta), flow, resolve_reaction(p.reaction, p.fprime0))
    sim = SimConfig(p.strip, p.nx, p.tend, cfl_safety=p.cfl_safety, level=p.level, fit_window=p.fit_window)
    ref_spec = spec if cs.n >= SPEED_N else spec.with_grid(SPEED_N)
    c_var = minimal_speed(ref_spec).c_star
    res = simulate_front(spec, sim)
    gap = abs(res.measured_speed - c_var) / c_var
    if gap > CONFIRM_GAP:
        fine = spec.with_grid(2 * cs.n)
        conf = simulate_front(fine, SimConfig(p.strip, 2 * p.nx, p.tend, cfl_safety=p.cfl_safety,
                                              level=p.level, fit_window=p.fit_window))
        print(f"confirmation run at halved mesh widths: measured_speed={conf.measured_speed:.6f}", file=out)
        res, gap = conf, abs(conf.measured_speed - c_var) / c_var
    print(f"measured_speed={res.measured_speed:.6f} variational_c={c_var:.6f} gap_pct={100 * gap:.3f}", file=out)
    print(f"fit_residual={res.fit_residual:.3e} dt={res.dt_used:.3e} scheme={res.scheme} "
          f"u_min={res.u_min:.3e} u_max={res.u_max:.17g}", file=out)
    if not res.accepted:
        print("warning: fit residual above 1% of the measured speed; run longer", file=sys.stderr)
    if p.traj:
        write_trajectory(res, p.traj)
    return 0


def cmd_verify(p: Params, out) -> int:
    from .acceptance import SUITES, run_suite
    if p.suite not in SUITES:
        raise ValidationError(f"suite must be quick or full, got {p.suite!r}", "suite")
    rows = run_suite(p.suite, echo=lambda line: print(line, file=out, flush=True))
    passed = sum(r.passed for r in rows)
    print(f"{passed}/{len(rows)} criteria passed", file=out)
    return 0 if passed == len(rows) else 1


COMMANDS = {"speed": cmd_speed, "scan": cmd_scan, "counterexample": cmd_counterexample,
            "simulate": cmd_simulate, "verify": cmd_verify}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        params = Params(resolve_config(args))
        return COMMANDS[args.command](params, out)
    except SpeedLabError as exc:
        field_ = getattr(exc, "field", None)
        where = f" [{FIELD_FLAGS.get(field_, field_)}]" if field_ else ""
        print(f"error{where}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ValidationError.exit_code


if __name__ == "__main__":
    sys.exit(main())

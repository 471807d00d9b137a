"""Command-line entry points.

    lcflow simulate --config F [--checkpoint-out P] [--diag-out C]
    lcflow sweep    --config F --out D [--jobs N] [--force]
    lcflow diagnose --checkpoint P --config F --out C
    lcflow rate-fit --csv C

Exit codes: 0 success, 1 validation error (bad arguments, config, or input
files), 2 runtime failure (solver errors, output I/O).
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import load_config
from .diagnostics import make_record
from .errors import ConfigError, SimulationError
from .grid import make_grid
from .integrator import run
from .io import (read_checkpoint, read_sweep_csv, write_checkpoint,
                 write_diag_csv, write_rate_report, write_sweep_csv)
from .operators import SlipMatrixB
from .sweep import fit_rate, run_sweep


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the documented contract wants 1
    def error(self, message):
        raise ConfigError(message)


def _build_parser():
    p = _Parser(prog="lcflow",
                description="channel-flow liquid crystal simulator and "
                            "vanishing-viscosity harness")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run one simulation")
    s.add_argument("--config", required=True)
    s.add_argument("--checkpoint-out", default=None)
    s.add_argument("--diag-out", default=None)

    s = sub.add_parser("sweep", help="run the viscosity ladder experiment")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--force", action="store_true",
                   help="run ladder members below the resolution guard")

    s = sub.add_parser("diagnose", help="recompute diagnostics offline")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)

    s = sub.add_parser("rate-fit", help="fit slopes from an existing sweep CSV")
    s.add_argument("--csv", required=True)
    return p


def _cmd_simulate(args):
    cfg = load_config(args.config)
    try:
        state, records, nsteps = run(cfg)
        grid = make_grid(cfg)
        if args.diag_out:
            write_diag_csv(records, args.diag_out)
        if args.checkpoint_out:
            write_checkpoint(args.checkpoint_out, state, cfg, grid, nsteps)
    except (SimulationError, OSError) as exc:
        print(f"lcflow simulate: {exc}", file=sys.stderr)
        return 2
    last = records[-1]
    print(f"simulate: t = {state.t:.6g}, steps = {nsteps}, "
          f"records = {len(records)}, unit_dev = {last.unit_dev:.3e}, "
          f"div_res = {last.div_res:.3e}")
    return 0


def _cmd_sweep(args):
    cfg = load_config(args.config)
    if args.jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
    try:
        os.makedirs(args.out, exist_ok=True)
        result = run_sweep(cfg, jobs=args.jobs, force=args.force)
        write_sweep_csv(result, os.path.join(args.out, "sweep.csv"))
        text = write_rate_report(result, os.path.join(args.out,
                                                      "rate_report.txt"))
    except (SimulationError, OSError, ValueError) as exc:
        print(f"lcflow sweep: {exc}", file=sys.stderr)
        return 2
    print(text, end="")
    if result.failed:
        print("lcflow sweep: aborted with failed members, see report",
              file=sys.stderr)
        return 2
    return 0


def _cmd_diagnose(args):
    cfg = load_config(args.config)
    grid = make_grid(cfg)
    state, _, _ = read_checkpoint(args.checkpoint, grid)
    try:
        B = SlipMatrixB(cfg.b11, cfg.b12, cfg.b22)
        # offline recomputation has no previous step, so energy_residual
        # is reported as 0.0 by convention
        rec = make_record(state, cfg, grid, B)
        write_diag_csv([rec], args.out)
    except (SimulationError, OSError) as exc:
        print(f"lcflow diagnose: {exc}", file=sys.stderr)
        return 2
    print(f"diagnose: t = {state.t:.6g} -> {args.out}")
    return 0


def _cmd_rate_fit(args):
    rows = read_sweep_csv(args.csv)
    pts_l2 = [(r["eps"], r["err_u_l2sq"] + r["err_d_h1sq"]) for r in rows]
    pts_li = [(r["eps"], r["err_u_linf"] + r["err_d_w1inf"]) for r in rows]
    try:
        s1, i1, r1 = fit_rate(pts_l2)
        s2, i2, r2 = fit_rate(pts_li)
    except ValueError as exc:
        raise ConfigError(f"{args.csv}: {exc}") from exc
    print(f"l2 family   (err_u_l2sq + err_d_h1sq) : slope = {s1:.12g}  "
          f"intercept = {i1:.12g}  r^2 = {r1:.12g}")
    print(f"linf family (err_u_linf + err_d_w1inf): slope = {s2:.12g}  "
          f"intercept = {i2:.12g}  r^2 = {r2:.12g}")
    return 0


def cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "diagnose":
            return _cmd_diagnose(args)
        if args.command == "rate-fit":
            return _cmd_rate_fit(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, OSError) as exc:
        # everything reaching here failed before any real work started
        print(f"lcflow: {exc}", file=sys.stderr)
        return 1


def entry():
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    entry()

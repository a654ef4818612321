"""Command-line front end.

Subcommands: simulate, sweep-alpha, sweep-eps, contdep, separation, check.
Exit codes: 0 when the command (and its verdicts) pass, 2 when a study
verdict fails, 1 on usage, config or runtime errors.  All CSV output is
written with 17 significant digits so files round-trip to the exact
binary values.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

from . import experiments
from .config import build_scenario, parse_config
from .errors import ChRelaxError, ConfigError
from .stepper import run


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_report(report, outdir):
    """Write a study table (and its rate-fit summary when present) as CSV;
    returns the paths written."""
    os.makedirs(outdir, exist_ok=True)
    paths = []
    main = os.path.join(outdir, f"{report.study}_{report.digest}.csv")
    with open(main, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(report.columns)
        for row in report.rows:
            w.writerow([_fmt(v) for v in row])
    paths.append(main)
    if report.fit is not None:
        summary = os.path.join(outdir, f"{report.study}_{report.digest}_summary.csv")
        with open(summary, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["slope", "intercept", "residual", "verdict"])
            w.writerow([
                _fmt(report.fit.slope), _fmt(report.fit.intercept),
                _fmt(report.fit.residual), "pass" if report.passed else "fail",
            ])
        paths.append(summary)
    return paths


def _write_diagnostics(traj, outdir, digest):
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, f"diagnostics_{digest}.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "t", "mass_phi", "mass_sigma", "mass_v"])
        for k, t in enumerate(traj.step_times):
            w.writerow([k, _fmt(float(t)), _fmt(float(traj.mass_phi[k])),
                        _fmt(float(traj.mass_sigma[k])), _fmt(float(traj.mass_v[k]))])
    return path


def _dump_snapshots(traj, outdir, digest):
    rundir = os.path.join(outdir, digest)
    os.makedirs(rundir, exist_ok=True)
    stride = traj.record_every
    for idx, snap in enumerate(traj.snapshots):
        step = int(round(snap.t / traj.dt))
        for name in ("mu", "v", "phi", "sigma", "xi"):
            path = os.path.join(rundir, f"{name}_{step:06d}.csv")
            traj.grid.dump_field(getattr(snap, name), path)
    return rundir


def _simulate(cfg, outdir):
    sc = build_scenario(cfg)
    traj = run(sc.params, sc.potential, sc.controls, sc.init, sc.grid, sc.T,
               sc.scheme)
    digest = cfg.digest()
    path = _write_diagnostics(traj, outdir, digest)
    print(f"simulate: {len(traj.step_times) - 1} steps, diagnostics -> {path}")
    if cfg["output.dump_fields"]:
        rundir = _dump_snapshots(traj, outdir, digest)
        print(f"simulate: field snapshots -> {rundir}")
    return 0


def dispatch(argv):
    """Run one subcommand; returns the process exit code."""
    parser = _Parser(prog="chrelax", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "sweep-alpha", "sweep-eps", "contdep",
                 "separation", "check"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)

    try:
        ns = parser.parse_args(argv)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1

    try:
        with open(ns.config) as fh:
            cfg = parse_config(fh.read())
    except OSError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return 1
    except ConfigError as e:
        for issue in e.issues:
            print(f"error: {ns.config}: {issue}", file=sys.stderr)
        return 1

    outdir = ns.out if ns.out is not None else cfg["output.dir"]
    try:
        if ns.command == "simulate":
            return _simulate(cfg, outdir)
        if ns.command == "sweep-alpha":
            report = experiments.sweep_alpha(cfg, jobs=ns.jobs)
        elif ns.command == "sweep-eps":
            report = experiments.sweep_eps(cfg, jobs=ns.jobs)
        elif ns.command == "contdep":
            report = experiments.contdep(cfg, jobs=ns.jobs)
        elif ns.command == "separation":
            report = experiments.separation(cfg)
        else:
            report = experiments.invariant_suite(cfg, seed=ns.seed)
    except ChRelaxError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    for path in write_report(report, outdir):
        print(f"{report.study}: wrote {path}")
    for note in report.notes:
        print(f"{report.study}: note: {note}")
    print(report.summary())
    return 0 if report.passed else 2


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()

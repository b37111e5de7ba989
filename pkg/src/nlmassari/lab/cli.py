"""Command line entry point: ``nlmassari <subcommand> --config FILE``.

Exit status is 0 when every verdict passes, 2 when any fails and 1 on errors.
"""
from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, ExperimentConfig, load_config
from .experiments import run_experiment
from .report import emit

SUBCOMMANDS = ("sweep-s", "sweep-eps", "neumann-check", "curvature-check", "minimize")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlmassari", description="Nonlocal Massari and Allen-Cahn experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="INI file; defaults apply when omitted")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--format", choices=("csv", "json"), help="output format (overrides the config)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for independent sweep points")

    for name in SUBCOMMANDS:
        common(sub.add_parser(name))
    ce = sub.add_parser("counterexample")
    ce.add_argument("which", choices=("classical", "fractional"))
    common(ce)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    experiment = args.command if args.command != "counterexample" else f"counterexample-{args.which}"
    try:
        if args.config:
            cfg = load_config(args.config, experiment)
        else:
            cfg = ExperimentConfig(experiment=experiment)
        changes = {}
        if args.out:
            changes["out"] = args.out
        if args.format:
            changes["format"] = args.format
        cfg = cfg.with_(**changes)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        report = run_experiment(cfg, args.jobs)
        path = os.path.join(cfg.out, f"{report.name}.{cfg.format}")
        written = emit(report, cfg.format, path)
    except Exception as exc:  # noqa: BLE001 - every failure maps to exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for v in report.verdicts:
        tag = "info" if v.informational else ("PASS" if v.passed else "FAIL")
        print(f"[{tag}] {v.name}: value={v.value:.6g} tol={v.tolerance:.6g} {v.note}")
    for w in written:
        print(f"wrote {w}")
    return 0 if report.passed else 2


if __name__ == "__main__":
    sys.exit(main())

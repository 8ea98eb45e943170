"""Command-line entry point.

    stripwaves run --preset dn-verify --out runs/dn --seed 7
    stripwaves run --config experiment.ini --eps 0.2,0.1,0.05
    stripwaves report runs/dn

Exit codes: 0 success, 1 numerical failure (the failing monitor is
named), 2 configuration errors (including inadmissible initial data).
"""

import argparse
import sys

from .config import ConfigError, PRESETS, load_config
from .errors import AdmissibilityViolation, NonConvergence, StepRejected
from .presets import run_experiment
from .reporting import summary_report


def build_parser():
    ap = argparse.ArgumentParser(prog="stripwaves")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment preset")
    run.add_argument("--config", default=None, help="INI config file")
    run.add_argument("--preset", default=None, choices=PRESETS)
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--seed", default=None, type=int)
    run.add_argument("--eps", default=None,
                     help="comma-separated eps sweep list")
    run.add_argument("--quiet", action="store_true", default=None)

    rep = sub.add_parser("report", help="summarize a run directory")
    rep.add_argument("run_dir")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "report":
        summary = summary_report(args.run_dir)
        print(open(f"{args.run_dir}/summary.txt").read(), end="")
        return 0 if summary["verdict"] == "pass" else 1

    try:
        cfg = load_config(args.config, overrides={
            "preset": args.preset,
            "out": args.out,
            "seed": args.seed,
            "eps_list": args.eps,
            "quiet": args.quiet,
        })
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        code, checks = run_experiment(cfg)
    except (ConfigError, AdmissibilityViolation) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (NonConvergence, StepRejected) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 1
    summary_report(cfg.out)
    if code != 0:
        failing = [c["check"] for c in checks if not c["passed"]]
        print(f"failing checks: {', '.join(failing)}", file=sys.stderr)
    elif not cfg.quiet:
        print(f"all {len(checks)} checks passed; reports in {cfg.out}")
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: one subcommand per experiment, plus verify.

Exit codes: 0 success, 2 configuration error, 3 numeric abort,
4 verification failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, NumericError
from .experiments import EXPERIMENT_NAMES, load_config, resolve_spec, run, verify

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VERIFY = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ganlab",
        description="Deterministic desk-scale GAN experiments (CSV/JSON/SVG outputs).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENT_NAMES:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, help="experiment seed (mandatory if absent from config)")
        p.add_argument("--out", help="output directory (default: runs/<experiment>)")
        p.add_argument("--verify", action="store_true", help="verify the run after it finishes")
    v = sub.add_parser("verify", help="re-check a finished run directory")
    v.add_argument("run_dir")
    return parser


def _verify_and_report(run_dir) -> int:
    report = verify(run_dir)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_VERIFY


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        return _verify_and_report(args.run_dir)
    try:
        raw = load_config(args.config) if args.config else {}
        spec = resolve_spec(args.command, raw, seed=args.seed, out_dir=args.out)
        artifact = run(spec)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as e:
        print(f"numeric abort: {e} (partial logs preserved)", file=sys.stderr)
        return EXIT_NUMERIC
    for path in artifact.metrics_csvs + artifact.plots:
        print(path)
    if args.verify:
        return _verify_and_report(spec.out_dir)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())

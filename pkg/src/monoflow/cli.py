"""Command-line entry point: ``monoflow run|check|plot``."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import MonoflowError, UnknownColumn
from .harness.acceptance import SUITES, suite_run
from .harness.config import load_config, validate
from .harness.plotting import emit_plot
from .harness.presets import load_preset, preset_names
from .harness.runner import run_experiment


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="monoflow", description="Monotone-operator flow experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment config")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to a JSON config file")
    src.add_argument("--preset", choices=preset_names(), help="name of a shipped preset")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")

    check = sub.add_parser("check", help="run the acceptance suite")
    check.add_argument("--suite", required=True, choices=SUITES)
    check.add_argument("--json", dest="json_out", default=None, help="also write the summary to this path")

    plot = sub.add_parser("plot", help="plot two columns of a series CSV")
    plot.add_argument("--csv", required=True)
    plot.add_argument("--x", required=True)
    plot.add_argument("--y", required=True)
    plot.add_argument("--out", required=True)
    plot.add_argument("--log-x", action="store_true")
    plot.add_argument("--log-y", action="store_true")
    plot.add_argument("--title", default="")
    return parser


def _run(args) -> int:
    try:
        if args.preset:
            cfg = load_preset(args.preset)
        else:
            with open(args.config, encoding="utf-8") as fh:
                cfg = load_config(fh.read())
        validate(cfg)
    except (MonoflowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    art = run_experiment(cfg, args.out, seed=args.seed)
    if not art.ok:
        print(f"error: {art.report['error']['type']}: {art.report['error']['message']}", file=sys.stderr)
        return 1
    for c in art.report.get("certificates", []):
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}")
    print(f"wrote {art.report_path}")
    return 0


def _check(args) -> int:
    summary = suite_run(args.suite, echo=print)
    n_pass = sum(c["passed"] for c in summary["criteria"])
    print(f"{n_pass}/{len(summary['criteria'])} passed in {summary['seconds']:.1f} s")
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
    return 0 if summary["passed"] else 1


def _plot(args) -> int:
    try:
        emit_plot(args.csv, (args.x, args.y), args.out, log_x=args.log_x, log_y=args.log_y, title=args.title)
    except UnknownColumn as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    return {"run": _run, "check": _check, "plot": _plot}[args.command](args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

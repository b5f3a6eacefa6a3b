"""
taskreduce command line.

  taskreduce run CONFIG [-o key.path=value ...] [--output DIR]
  taskreduce validate CONFIG [-o ...]
  taskreduce plot-data RESULTS... --figure {fig2,fig3,fig4} --out CSV
  taskreduce props [--suite NAME ...] [--seed N]

Exit codes: 0 success, 1 validation, 2 compute failure, 3 property-suite failure.
Each subcommand prints a JSON summary to stdout.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from pydantic import ValidationError

from . import __version__
from .config import ConfigValidationError, experiment_digest, load_experiment
from .errors import ConfigurationError, TaskReduceError
from .plotdata import COLUMNS, emit_plot_data
from .props import SUITES, run_props
from .runner import run_experiment

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_COMPUTE = 2
EXIT_PROPS = 3


def _print(report: dict) -> None:
    print(json.dumps(report, indent=2, sort_keys=True))


def _validation_report(e: ConfigurationError) -> dict:
    if isinstance(e, ConfigValidationError):
        return {"ok": False, "path": e.path, "diagnostics": e.diagnostics}
    return {"ok": False, "diagnostics": [{"field": None, "message": str(e), "line": None}]}


# W11-BEGIN:commands
def cmd_validate(args) -> int:
    try:
        exp = load_experiment(args.config, args.override)
    except ConfigurationError as e:
        _print(_validation_report(e))
        return EXIT_VALIDATION
    _print({"ok": True, "name": exp.name, "kind": exp.kind, "config_digest": experiment_digest(exp)})
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        exp = load_experiment(args.config, args.override)
    except ConfigurationError as e:
        _print(_validation_report(e))
        return EXIT_VALIDATION
    try:
        summary = run_experiment(exp, args.output)
    except TaskReduceError as e:
        logger.error("%s: %s", type(e).__name__, e)
        _print({"ok": False, "error_type": type(e).__name__, "message": str(e)})
        return EXIT_COMPUTE
    _print({"ok": summary.ok, "output": str(summary.output), "records": summary.records,
            "errors": summary.errors, "config_digest": summary.manifest["config_digest"]})
    return EXIT_OK if summary.ok else EXIT_COMPUTE


def cmd_plot_data(args) -> int:
    try:
        warnings = emit_plot_data(args.results, args.figure, args.out)
    except (ValidationError, ValueError) as e:
        _print({"ok": False, "message": str(e)})
        return EXIT_VALIDATION
    except OSError as e:
        _print({"ok": False, "message": str(e)})
        return EXIT_COMPUTE
    _print({"ok": True, "out": args.out, "columns": list(COLUMNS[args.figure]), "warnings": warnings})
    return EXIT_OK


def cmd_props(args) -> int:
    report = run_props(tuple(args.suite) if args.suite else None, seed=args.seed, trials_scale=args.scale)
    _print(report.to_dict())
    for r in report.results:
        if not r.passed:
            logger.error("property failed: %s / %s: %s", r.suite, r.name, r.failure)
    return EXIT_OK if report.passed else EXIT_PROPS
# W11-END:commands


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="taskreduce", description="Task reductions and relative complexity.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, fn, helptext in (("run", cmd_run, "execute an experiment file"),
                               ("validate", cmd_validate, "validate an experiment file without computing")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config")
        p.add_argument("-o", "--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted-path override applied before validation (repeatable)")
        if name == "run":
            p.add_argument("--output", default=None, help="output directory (defaults to the config's)")
        p.set_defaults(func=fn)

    p = sub.add_parser("plot-data", help="shape result records into figure CSV")
    p.add_argument("results", nargs="+")
    p.add_argument("--figure", choices=sorted(COLUMNS), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot_data)

    p = sub.add_parser("props", help="run the invariant suites")
    p.add_argument("--suite", action="append", choices=SUITES, help="restrict to a suite (repeatable)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", type=float, default=1.0, help="multiply every property's trial count")
    p.set_defaults(func=cmd_props)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())

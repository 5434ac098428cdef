import argparse
import os
import sys
from typing import List, Optional

import pandas as pd

from app.estimation.report import format_report
from app.harness.config import load_config, validate_config
from app.harness.plot_data import PANELS, emit_plot_data
from app.harness.runner import run
from app.harness.selftest import run_selftest
from app.utils.errors import ConfigValidationError, QClockError
from app.utils.logger import setup_logger

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

EXAMPLE = """example:
  python -m app run configs/parity_sweep.toml --out results/parity
  python -m app selftest --shots 100
  python -m app emit results/parity/table.csv fig1d
"""


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m app",
        description="Optical-clock array simulator: experiments, self-test and plot data",
        formatter_class=argparse.RawTextHelpFormatter,
        epilog=EXAMPLE,
    )
    parser.add_argument("--strict", action="store_true", help="exit with code 2 when a run produced warnings")
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="run the experiment described by a TOML config")
    run_parser.add_argument("config", help="path to the experiment config")
    run_parser.add_argument("--seed", type=int, help="override the config's root seed")
    run_parser.add_argument("--shots", type=_positive_int, help="override shots per point")
    run_parser.add_argument("--out", dest="out_dir", help="output directory (default: config or settings)")

    test_parser = sub.add_parser("selftest", help="run the built-in invariant checks")
    test_parser.add_argument("--seed", type=int, help="root seed for the randomized checks")
    test_parser.add_argument("--shots", type=_positive_int, help="shots per simulated check")

    emit_parser = sub.add_parser("emit", help="write plot-ready data for one figure panel")
    emit_parser.add_argument("table", help="table.csv written by `run`")
    emit_parser.add_argument("figure_id", choices=sorted(PANELS), help="panel to emit")
    emit_parser.add_argument("--out", dest="out_dir", help="output directory (default: next to the table)")
    return parser


def _run(args) -> int:
    config = load_config(args.config)
    overrides = {key: value for key, value in (("seed", args.seed), ("shots", args.shots)) if value is not None}
    if overrides:
        config = validate_config({**config.model_dump(exclude_none=True), **overrides})
    result = run(config)
    paths = result.write(args.out_dir or config.output_path())
    sys.stdout.write(format_report(result.report))
    sys.stdout.write(f"table written to {paths['table']}\n")
    if result.warnings and args.strict:
        logger.error(f"{len(result.warnings)} warnings with --strict")
        return EXIT_RUNTIME
    return EXIT_OK


def _selftest(args) -> int:
    kwargs = {key: value for key, value in (("seed", args.seed), ("shots", args.shots)) if value is not None}
    summary = run_selftest(**kwargs)
    sys.stdout.write(summary.format())
    return EXIT_OK if summary.passed else EXIT_VALIDATION


def _emit(args) -> int:
    table = pd.read_csv(args.table, keep_default_na=True)
    out_dir = args.out_dir or os.path.dirname(os.path.abspath(args.table))
    for path in emit_plot_data(table, args.figure_id, out_dir):
        sys.stdout.write(f"{path}\n")
    return EXIT_OK


COMMANDS = {"run": _run, "selftest": _selftest, "emit": _emit}


def main(iargs: Optional[List[str]] = None) -> int:
    args = create_parser().parse_args(args=iargs)
    try:
        return COMMANDS[args.command](args)
    except ConfigValidationError as e:
        for error in e.errors:
            sys.stderr.write(f"config error: {error}\n")
        return EXIT_VALIDATION
    except (QClockError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

"""Command line interface for the benchmark harness"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from app import __version__
from app.core.config import settings
from app.core.errors import ArgumentError, ConfigError
from app.core.logging_config import logger
from app.models.experiment import ExperimentConfig
from app.services.engines import get_engine, list_engines
from app.services.harness import run_experiment, run_sweep
from app.services.reports import emit_budget_sweep, emit_error_table, emit_score_report, parse_weights
from app.services.results_store import load_records
from app.services.scoring import LEGACY_KINDS
from app.services.suite import build_suite


USAGE_ERRORS = (ConfigError, ArgumentError, FileNotFoundError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description="ARRDE benchmark harness")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run or resume a campaign")
    run.add_argument("config", type=Path, help="experiment TOML file")
    run.add_argument("--threads", type=int, default=None, help="parallel runs (overrides ARRDE_BENCH_THREADS)")
    run.add_argument("--output", type=Path, default=None, help="results directory override")

    score = sub.add_parser("score", help="score a results directory")
    score.add_argument("directory", type=Path)
    score.add_argument("--reference", default=None, help="algorithm whose W/T/L is reported")
    score.add_argument("--weights", default="desk", help="preset name or D=w pairs, e.g. 10=0.1,20=0.2")
    score.add_argument("--legacy", action="append", choices=LEGACY_KINDS, default=[], help="add a legacy score")
    score.add_argument("--write", action="store_true", help="also write report files into the directory")

    table = sub.add_parser("table", help="per-function best/mean/std error table")
    table.add_argument("directory", type=Path)
    table.add_argument("--write", action="store_true", help="also write table files into the directory")

    sweep = sub.add_parser("sweep", help="run a campaign for every [budget].sweep value")
    sweep.add_argument("config", type=Path)
    sweep.add_argument("--threads", type=int, default=None)
    sweep.add_argument("--output", type=Path, default=None)

    sub.add_parser("list-algorithms", help="registered engines")

    problems = sub.add_parser("list-problems", help="suite catalogue")
    problems.add_argument("--suite", default="desk")
    problems.add_argument("--dimension", type=int, default=10)
    problems.add_argument("--seed", type=int, default=0)
    return parser


def _run(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    result = run_experiment(config, threads=args.threads, directory=args.output)
    print(f"{len(result.records)} records in {result.directory} ({result.new_runs} new runs)")
    return 0


def _score(args) -> int:
    records = load_records(args.directory)
    _, text = emit_score_report(
        records,
        weights=parse_weights(args.weights),
        reference=args.reference,
        legacy=args.legacy,
        directory=args.directory if args.write else None,
    )
    print(text)
    return 0


def _table(args) -> int:
    records = load_records(args.directory)
    _, text = emit_error_table(records, directory=args.directory if args.write else None)
    print(text)
    return 0


def _sweep(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    results = run_sweep(config, threads=args.threads, directory=args.output)
    root = args.output if args.output is not None else config.output_dir(settings.base_dir)
    curves = emit_budget_sweep({nmd: r.records for nmd, r in results.items()}, config.weights, root)
    print(curves.to_string(index=False))
    return 0


def _list_algorithms(args) -> int:
    for name in list_engines():
        print(f"{name:10s} {get_engine(name).description}")
    return 0


def _list_problems(args) -> int:
    for problem in build_suite(args.suite, args.dimension, seed=args.seed):
        print(f"{problem.name:28s} {problem.category:12s} f*={problem.optimum_value:g}  {problem.description}")
    return 0


COMMANDS = {
    "run": _run,
    "score": _score,
    "table": _table,
    "sweep": _sweep,
    "list-algorithms": _list_algorithms,
    "list-problems": _list_problems,
}


def cli_main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point

    Returns:
        0 on success, 2 for usage/configuration errors, 1 for any other failure
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        return COMMANDS[args.command](args)
    except USAGE_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        logger.error(f"{args.command} failed: {str(e)}")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1

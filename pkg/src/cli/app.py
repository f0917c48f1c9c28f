"""
src/cli/app.py

Command-line front end.

    simulate  --scenario <A|B|C|D|file> --seed <u64> --out <dir> [--parallel k]
    validate  [--seed] [--replications] [--arrivals] [--parallel k]
    scenarios
    chart     --in <csv> --metric <W|MQL|PL|UTIL> --out <svg>

Exit codes: 0 success, 1 validation or runtime failure, 2 usage error.
"""

import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from src import __version__
from src.parsers.config_parser import ConfigError, parse_config
from src.tools.chart_generator import ChartGenerator
from src.tools.report_storage import ReportFormatError, emit_csv, load_csv, write_manifest, write_trace
from src.tools.router_model import METRICS, run_replication
from src.tools.scenarios import BUILTIN_IDS, ScenarioSpec, builtin_scenario, builtin_scenarios, run_scenario
from src.tools.validation_suite import run_validation
from src.tools.variates import MAX_SEED, replication_seed
from src.utils.log_config import setup_logging

logger = logging.getLogger(__name__)

# ================== CONFIG ==================
DEFAULT_SEED = 1
DEFAULT_OUT = "output"
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _seed_arg(text: str) -> int:
    try:
        seed = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned integer, got {text!r}") from None
    if not 0 <= seed <= MAX_SEED:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2^64), got {seed}")
    return seed


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="routerq",
        description="Tandem router queueing simulator (ACL node -> forwarding node)",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python run_cli.py simulate --scenario A --seed 7 --out output/A
  python run_cli.py simulate --scenario my_scenario.cfg --parallel 8
  python run_cli.py validate --arrivals 100000
  python run_cli.py chart --in output/A/scenario_A.csv --metric W --out output/A/W.svg
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Run a scenario and write CSV + manifest")
    sim.add_argument("--scenario", required=True, help="A|B|C|D or a scenario config file")
    sim.add_argument("--seed", type=_seed_arg, default=None, help="Base seed (default: $ROUTERQ_SEED or 1)")
    sim.add_argument("--out", default=DEFAULT_OUT, help="Output directory")
    sim.add_argument("--parallel", type=_positive_int, default=1, help="Worker processes")
    sim.add_argument("--replications", type=_positive_int, default=None, help="Override R")
    sim.add_argument("--arrivals", type=_positive_int, default=None, help="Override arrivals per replication")
    sim.add_argument("--trace", default=None,
                     help="Per-packet trace CSV of the first arm, first sweep point, replication 0")
    sim.add_argument("--quiet", action="store_true", help="No progress bars")

    val = sub.add_parser("validate", help="Run the oracle suite")
    val.add_argument("--seed", type=_seed_arg, default=None)
    val.add_argument("--replications", type=_positive_int, default=20)
    val.add_argument("--arrivals", type=_positive_int, default=1_000_000)
    val.add_argument("--moment-samples", type=_positive_int, default=10_000_000)
    val.add_argument("--parallel", type=_positive_int, default=1)
    val.add_argument("--quiet", action="store_true")

    sub.add_parser("scenarios", help="Print the built-in scenarios")

    chart = sub.add_parser("chart", help="Render one metric from a CSV as SVG")
    chart.add_argument("--in", dest="input", required=True, help="CSV written by simulate")
    chart.add_argument("--metric", required=True, help="|".join(METRICS))
    chart.add_argument("--out", required=True, help="SVG path")
    chart.add_argument("--total", action="store_true", help="Also plot the class total")
    return parser


def _base_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    env = os.getenv("ROUTERQ_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return _seed_arg(env)
    except argparse.ArgumentTypeError as e:
        raise UsageError(f"ROUTERQ_SEED: {e}") from None


def load_scenario(value: str) -> ScenarioSpec:
    if value.upper() in BUILTIN_IDS:
        return builtin_scenario(value)
    path = Path(value)
    if not path.is_file():
        raise UsageError(f"unknown scenario {value!r}: expected A|B|C|D or a config file")
    try:
        return parse_config(path.read_text(encoding="utf-8"))
    except ConfigError as e:
        raise UsageError(f"{path}: {e}") from None


# ================== COMMANDS ==================
def cmd_simulate(args) -> int:
    spec = load_scenario(args.scenario)
    overrides = {}
    if args.replications is not None:
        overrides["replications"] = args.replications
    if args.arrivals is not None:
        overrides["arrivals_per_replication"] = args.arrivals
    if overrides:
        spec = ScenarioSpec(**{**spec.model_dump(), **overrides})
    seed = _base_seed(args.seed)

    out_dir = Path(args.out)
    started = time.time()
    report = run_scenario(spec, seed, parallel=args.parallel, progress=not args.quiet)
    duration = time.time() - started

    csv_path = emit_csv(report, out_dir / f"scenario_{spec.id}.csv")
    write_manifest(report, spec, duration, out_dir / f"scenario_{spec.id}.manifest")

    if args.trace:
        arm = spec.arms()[0]
        records: List[dict] = []
        run_replication(
            spec.router_config(arm), spec.streams(arm, spec.lambda1_sweep[0]),
            replication_seed(seed, (0, 0)), spec.arrivals_per_replication,
            spec.warmup_fraction, trace=records,
        )
        write_trace(records, args.trace)

    logger.info(f"✅ Scenario {spec.id}: {csv_path} ({duration:.1f}s)")
    if report.failures:
        for failure in report.failures:
            logger.error(f"❌ Arm {failure['arm']}: {failure['error']}")
        return EXIT_FAILURE
    return EXIT_OK


def cmd_validate(args) -> int:
    results = run_validation(
        _base_seed(args.seed), replications=args.replications, arrivals=args.arrivals,
        moment_samples=args.moment_samples, parallel=args.parallel, progress=not args.quiet,
    )
    return EXIT_OK if all(r.success for r in results) else EXIT_FAILURE


def cmd_scenarios(args) -> int:
    for spec in builtin_scenarios():
        print(f"# Scenario {spec.id}: arms {', '.join(arm.label for arm in spec.arms())}")
        print(spec.to_config_text())
    return EXIT_OK


def cmd_chart(args) -> int:
    if args.metric not in METRICS:
        raise UsageError(f"unknown metric {args.metric!r}: expected {'|'.join(METRICS)}")
    try:
        report = load_csv(args.input)
    except (OSError, ReportFormatError) as e:
        raise UsageError(str(e)) from None
    ChartGenerator(include_total=args.total).emit_chart(report, args.metric, args.out)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "scenarios": cmd_scenarios,
    "chart": cmd_chart,
}


def cli_main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    if args.command in ("simulate", "validate"):
        setup_logging(name=args.command)

    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        logger.error(f"❌ {args.command} failed: {e}", exc_info=True)
        return EXIT_FAILURE

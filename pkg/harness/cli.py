"""
Command line:

    python harness/cli.py run --scenario scenarios/bus_stop.json --trace out.trace --metrics out.csv
    python harness/cli.py audit --trace out.trace --metrics out.csv
    python harness/cli.py batch --dir scenarios --out results

Exit codes: 0 success, 1 scenario error (or failed audit), 2 runtime invariant violation.
"""

import os
import sys

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import argparse
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import List, Optional, Tuple

from dotenv import load_dotenv
from tqdm import tqdm

from cost_metrics.metrics import read_metrics
from harness.audit import audit_trace
from harness.runner import run
from harness.scenario import MAX_SEED, Mode, ScenarioError, load_scenario
from sim_core.errors import InvariantViolation
from sim_core.trace import Trace

load_dotenv()

ENABLE_LOGGING = os.getenv("ENABLE_LOGGING", "false").lower() == "true"
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
logging.basicConfig(
    level=getattr(logging, LOG_LEVEL, logging.INFO) if ENABLE_LOGGING else logging.CRITICAL,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SCENARIO = 1
EXIT_INVARIANT = 2


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="injection-sim", description="Hybrid wireless injection simulator")
    commands = parser.add_subparsers(dest="command", required=True)

    run_cmd = commands.add_parser("run", help="Run one scenario")
    run_cmd.add_argument("--scenario", required=True, type=Path)
    run_cmd.add_argument("--seed", type=_seed, help="Override the scenario seed")
    run_cmd.add_argument("--mode", choices=[m.value for m in Mode], help="Override the scenario mode")
    run_cmd.add_argument("--trace", type=Path)
    run_cmd.add_argument("--metrics", type=Path)
    run_cmd.add_argument("--series", type=Path, help="Per-tick time series (.csv or .parquet)")
    run_cmd.add_argument("--no-baselines", action="store_true", help="Skip the pure-mode replays")

    audit_cmd = commands.add_parser("audit", help="Check a trace against its metrics")
    audit_cmd.add_argument("--trace", required=True, type=Path)
    audit_cmd.add_argument("--metrics", required=True, type=Path)

    batch_cmd = commands.add_parser("batch", help="Run and audit every scenario in a directory")
    batch_cmd.add_argument("--dir", type=Path, default=Path(os.getenv("SCENARIO_DIR", "scenarios")))
    batch_cmd.add_argument("--out", type=Path, default=Path(os.getenv("RESULTS_DIR", "results")))
    batch_cmd.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    return parser


# --- Commands ---


def run_command(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except (ScenarioError, OSError) as exc:
        logger.error(f"Scenario {args.scenario}: {exc}")
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO

    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.mode is not None:
        updates["mode"] = Mode(args.mode)
    if updates:
        scenario = scenario.model_copy(update=updates)

    try:
        result = run(
            scenario,
            trace_path=args.trace,
            metrics_path=args.metrics,
            series_path=args.series,
            baselines=not args.no_baselines,
        )
    except InvariantViolation as exc:
        logger.error(f"Run aborted: {exc}")
        print(f"invariant violated: {exc.invariant}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT

    metrics = result.metrics
    print(
        f"{scenario.name} [{metrics.mode}] cost={metrics.total_cost} "
        f"coverage={metrics.coverage:.3f} baseline_backbone={metrics.baseline_backbone_cost}"
    )
    return EXIT_OK


def audit_command(args: argparse.Namespace) -> int:
    try:
        trace = Trace.read(args.trace)
        metrics = read_metrics(args.metrics)
    except (OSError, ValueError) as exc:
        print(f"cannot read artifacts: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    report = audit_trace(trace, metrics)
    for mismatch in report.mismatches:
        print(mismatch)
    print("PASS" if report.passed else f"FAIL ({len(report.mismatches)} mismatches)")
    return EXIT_OK if report.passed else EXIT_SCENARIO


def run_and_audit(path: Path, out: Path) -> Tuple[str, int, List[str]]:
    """One batch entry; runs in a worker process and shares nothing."""
    try:
        scenario = load_scenario(path)
    except ScenarioError as exc:
        return path.name, EXIT_SCENARIO, [str(exc)]
    stem = out / path.stem
    try:
        result = run(
            scenario,
            trace_path=stem.with_suffix(".trace"),
            metrics_path=stem.with_suffix(".metrics.csv"),
            series_path=stem.with_suffix(".series.csv"),
        )
    except InvariantViolation as exc:
        return path.name, EXIT_INVARIANT, [str(exc)]
    report = audit_trace(result.trace, result.metrics)
    return path.name, EXIT_OK if report.passed else EXIT_SCENARIO, report.mismatches


def batch_command(args: argparse.Namespace) -> int:
    paths = sorted(args.dir.glob("*.json"))
    if not paths:
        print(f"no scenarios in {args.dir}", file=sys.stderr)
        return EXIT_SCENARIO
    args.out.mkdir(parents=True, exist_ok=True)

    worst = EXIT_OK
    with ProcessPoolExecutor(max_workers=max(1, args.workers)) as pool:
        futures = [pool.submit(run_and_audit, path, args.out) for path in paths]
        for future in tqdm(as_completed(futures), total=len(futures), desc="Scenarios"):
            name, status, problems = future.result()
            worst = max(worst, status)
            print(f"{name}: {'ok' if status == EXIT_OK else 'exit ' + str(status)}")
            for problem in problems:
                print(f"  {problem}")
    return worst


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return run_command(args)
    if args.command == "audit":
        return audit_command(args)
    return batch_command(args)


if __name__ == "__main__":
    sys.exit(main())

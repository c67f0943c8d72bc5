#!/usr/bin/env python3
"""
Edge-cloud continuum simulator - Main entry point

Validates scenarios, runs single simulations, runs the 2^3 factorial
experiment over the bundled topology and checks the toy example.
"""

import argparse
import logging
import sys
from pathlib import Path

import pandas as pd

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from config import DEFAULT_REPLICATIONS, DEFAULT_SEED, LOG_LEVEL, OUTPUT_DIR, TOY_SCENARIO_FILE
from src.experiment import ExperimentError, run_factorial, setup_from_overrides, write_experiment_outputs
from src.report import render_run, render_toy
from src.scenario import (
    ScenarioParseError,
    ScenarioValidationError,
    load_scenario,
    parse_scenario,
    read_scenario_document,
    validate,
)
from src.simulator import ledger_frame, simulate
from src.strategies import UnknownStrategyError, available_strategies, get_strategy
from src.utils import apply_overrides, get_project_root, resolve_scenario_path, save_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

# Toy golden outcome: task ids dropped per strategy
TOY_EXPECTED_DROPS = {"tetris": [], "proximity": ["APP3"]}


def configure_logging(verbose: bool = False):
    logging.basicConfig(
        level=logging.DEBUG if verbose else getattr(logging, LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.StreamHandler(sys.stderr),
        ],
    )


def _load(scenario_ref: str, overrides=()):
    """Read, override and parse a scenario without validating it."""
    path = resolve_scenario_path(scenario_ref)
    document = read_scenario_document(path)
    try:
        document = apply_overrides(document, overrides)
    except ValueError as e:
        raise ScenarioParseError(str(e)) from e
    return parse_scenario(document, name=path.stem)


def cmd_validate(scenario_path: str, overrides=()) -> int:
    """Print the violations of a scenario; 0 if there are none."""
    try:
        scenario = _load(scenario_path, overrides)
    except ScenarioParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    violations = validate(scenario)
    if not violations:
        print(f"{scenario.name}: valid ({len(scenario.nodes)} nodes, {len(scenario.links)} links, {len(scenario.tasks)} tasks)")
        return EXIT_OK

    print(f"{scenario.name}: {len(violations)} violation(s)")
    for violation in violations:
        print(f"  - {violation}")
    return EXIT_FAILURE


def cmd_run(scenario_path: str, strategy: str, seed: int, output_dir, overrides=()) -> int:
    """Simulate one scenario and write run.csv, ledger.csv and report.json."""
    try:
        placer = get_strategy(strategy)
        scenario = _load(scenario_path, overrides)
    except (UnknownStrategyError, ScenarioParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        report = simulate(scenario, placer, seed)
    except ScenarioValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        for violation in e.violations:
            print(f"  - {violation}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as e:
        logger.error(f"Simulation failed: {e}")
        return EXIT_FAILURE

    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    ledger_frame(report).to_csv(output_dir / "ledger.csv", index=False)
    pd.DataFrame([report.csv_row()]).to_csv(output_dir / "run.csv", index=False, float_format="%.6f")
    save_json(report.to_dict(), output_dir / "report.json")
    logger.info(f"Wrote run outputs to {output_dir}")

    print(render_run(report), end="")
    return EXIT_OK


def cmd_experiment(replications: int, seed_base: int, output_dir, jobs: int = 1, overrides=()) -> int:
    """Run the full factorial on the bundled topology and write its outputs."""
    if replications < 2:
        print("error: --replications must be >= 2", file=sys.stderr)
        return EXIT_USAGE
    try:
        setup = setup_from_overrides(overrides)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    seeds = [seed_base + i for i in range(replications)]
    try:
        report = run_factorial(replications, seeds, setup=setup, jobs=jobs)
    except ExperimentError as e:
        logger.error(str(e))
        return EXIT_FAILURE

    write_experiment_outputs(report, output_dir)
    summary = report.summary
    print(f"{len(report.rows)} runs written to {output_dir}")
    print(f"latency violation reduction (tetris vs proximity): {summary.latency_reduction:.1f}%")
    return EXIT_OK


def cmd_toy() -> int:
    """Run both strategies on the toy scenario; 0 iff the golden outcome is reproduced."""
    scenario = load_scenario(get_project_root() / TOY_SCENARIO_FILE)
    reports = {name: simulate(scenario, name) for name in TOY_EXPECTED_DROPS}
    print(render_toy(reports["tetris"], reports["proximity"]), end="")

    mismatches = []
    for name, expected in TOY_EXPECTED_DROPS.items():
        dropped = sorted(task_id for task_id, timing in reports[name].ledger.items() if timing.dropped)
        if dropped != expected:
            mismatches.append(f"{name}: expected drops {expected}, got {dropped}")

    if mismatches:
        print("\ngolden outcome NOT reproduced:")
        for line in mismatches:
            print(f"  - {line}")
        return EXIT_FAILURE
    print("\ngolden outcome reproduced")
    return EXIT_OK


def _seed(text: str) -> int:
    # argparse also runs this on the CONTINUUM_SIM_SEED default
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer (--seed or CONTINUUM_SIM_SEED), got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="continuum-sim", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    subcommands = parser.add_subparsers(dest="command", required=True)

    overrides = argparse.ArgumentParser(add_help=False)
    overrides.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override a scenario field by dotted path (repeatable)",
    )

    validate_cmd = subcommands.add_parser("validate", parents=[overrides], help="check a scenario file")
    validate_cmd.add_argument("--scenario", required=True, help="path or bundled name (toy, paper_topology)")

    run_cmd = subcommands.add_parser("run", parents=[overrides], help="simulate one scenario")
    run_cmd.add_argument("--scenario", required=True, help="path or bundled name (toy, paper_topology)")
    run_cmd.add_argument("--strategy", required=True, choices=available_strategies())
    run_cmd.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    run_cmd.add_argument("--output", default=OUTPUT_DIR)

    experiment_cmd = subcommands.add_parser("experiment", parents=[overrides], help="run the 2^3 factorial design")
    experiment_cmd.add_argument("--replications", type=int, default=DEFAULT_REPLICATIONS)
    experiment_cmd.add_argument("--seed-base", type=_seed, default=DEFAULT_SEED)
    experiment_cmd.add_argument("--output", default=OUTPUT_DIR)
    experiment_cmd.add_argument("--jobs", type=int, default=1)

    subcommands.add_parser("toy", help="check the toy example outcome")
    return parser


def main(argv=None) -> int:
    """Main execution flow."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    configure_logging(args.verbose)

    if args.command == "validate":
        return cmd_validate(args.scenario, args.overrides)
    if args.command == "run":
        return cmd_run(args.scenario, args.strategy, args.seed, args.output, args.overrides)
    if args.command == "experiment":
        return cmd_experiment(args.replications, args.seed_base, args.output, args.jobs, args.overrides)
    return cmd_toy()


if __name__ == "__main__":
    sys.exit(main())

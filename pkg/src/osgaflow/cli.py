#!/usr/bin/env python3
"""
Command Line Interface for OSGAFlow
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd

from . import __version__
from .benchmark import run_experiment, summary_profile
from .checks import run_invariant_checks
from .config import apply_overrides, load_config, preset_names
from .exceptions import ConfigError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

logger = logging.getLogger(__name__)


def setup_logging(verbose: bool = False, log_file: Optional[str] = None):
    """Setup logging configuration"""
    level = logging.DEBUG if verbose else logging.INFO
    handlers = [logging.StreamHandler(sys.stdout)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def run_experiment_command(args) -> int:
    """Run an experiment from a config file"""
    try:
        config = load_config(args.config)
        overrides = {
            "seed": args.seed,
            "max_iterations": args.max_iters,
            "max_seconds": args.max_seconds,
            "solvers": args.solvers,
        }
        config = apply_overrides(config, {k: v for k, v in overrides.items() if v is not None})
        config.validate()
    except ConfigError as e:
        print(f"Configuration error: {e}")
        return EXIT_CONFIG

    out_dir = Path(args.out_dir)
    print(f"Running OSGAFlow experiment: {config.family}")
    print(f"Solvers: {', '.join(sorted(config.solvers))}")
    print(f"Output directory: {out_dir}")

    try:
        result = run_experiment(config, out_dir, progress=not args.no_progress)
    except ConfigError as e:
        print(f"Configuration error: {e}")
        return EXIT_CONFIG

    print(f"✓ {len(result.trace_files)} trace files written")
    print(f"✓ Summary saved to {out_dir / 'summary.csv'}")
    if result.profile is not None:
        print(f"✓ Performance profile saved to {out_dir / 'profile.csv'}")

    print("\nExperiment Summary:")
    print("-" * 20)
    for _, row in result.summary.iterrows():
        if row["status"] == "ok":
            print(f"  {row['family']}_{int(row['instance']):02d} {row['solver']:>6}: "
                  f"best {row['best_objective']:.8g} after {int(row['iterations'])} "
                  f"iterations ({row['reason']})")
        else:
            print(f"  {row['family']}_{int(row['instance']):02d} {row['solver']:>6}: "
                  f"✗ {row['error']}")

    if result.failures:
        print(f"\n{result.failures} solver run(s) failed")
        return EXIT_FAILURE
    print("\nExperiment completed successfully!")
    return EXIT_OK


def run_profile_command(args) -> int:
    """Build a performance profile from an existing summary"""
    try:
        summary = pd.read_csv(args.summary)
    except (OSError, pd.errors.ParserError) as e:
        print(f"Error reading summary: {e}")
        return EXIT_FAILURE
    missing = {"family", "instance", "solver", "status", args.metric} - set(summary.columns)
    if missing:
        print(f"Error: summary lacks columns {sorted(missing)}")
        return EXIT_FAILURE

    profile = summary_profile(summary, metric=args.metric)
    if profile is None:
        print("Error: no performance profile could be built")
        return EXIT_FAILURE

    output = Path(args.output) if args.output else Path(args.summary).with_name("profile.csv")
    profile.to_csv(output, float_format="%.17g")
    print(f"✓ Performance profile saved to {output}")
    print("\nFraction of problems won (tau = 1):")
    for solver, value in profile.iloc[0].items():
        print(f"  {solver}: {value:.3f}")
    return EXIT_OK


def run_check_command(args) -> int:
    """Run the invariant suites"""
    table = run_invariant_checks(seed=args.seed if args.seed is not None else 0)
    for _, row in table.iterrows():
        mark = "✓" if row["passed"] else "✗"
        print(f"{mark} {row['check']}: {row['value']:.3g} (tolerance {row['tolerance']:g})")
    failed = int((~table["passed"]).sum())
    if failed:
        print(f"\n{failed} check(s) failed")
        return EXIT_FAILURE
    print("\nAll invariant checks passed!")
    return EXIT_OK


def _solver_list(value: str):
    return [s.strip() for s in value.split(",") if s.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="OSGAFlow - optimal subgradient algorithm and first-order baselines",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=f"""
Examples:
  osgaflow run configs/lasso.yaml --out-dir results --max-iters 200
  osgaflow run configs/tv_denoise.yaml --solvers osga,fista
  osgaflow profile results/summary.csv
  osgaflow check

Presets: {', '.join(preset_names())}
        """
    )

    parser.add_argument('--verbose', '-v', action='store_true', help='Verbose output')
    parser.add_argument('--log-file', help='Also write the log to this file')
    parser.add_argument('--version', action='version', version=f'OSGAFlow {__version__}')

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    run_parser = subparsers.add_parser('run', help='Run an experiment from a config file')
    run_parser.add_argument('config', help='Flat YAML config file')
    run_parser.add_argument('--out-dir', '-o', default='output',
                            help='Output directory for the CSV bundle')
    run_parser.add_argument('--seed', type=int, help='Random seed for reproducibility')
    run_parser.add_argument('--max-iters', type=int, help='Iteration budget per solver')
    run_parser.add_argument('--max-seconds', type=float, help='Wall-time budget per solver')
    run_parser.add_argument('--solvers', type=_solver_list,
                            help='Comma-separated solver list, e.g. osga,fista')
    run_parser.add_argument('--no-progress', action='store_true', help='Hide the progress bar')

    profile_parser = subparsers.add_parser('profile', help='Performance profile from a summary')
    profile_parser.add_argument('summary', help='summary.csv written by the run command')
    profile_parser.add_argument('--metric', default='best_objective',
                                help='Summary column to compare (smaller is better)')
    profile_parser.add_argument('--output', help='Profile CSV path (default: next to summary)')

    check_parser = subparsers.add_parser('check', help='Run the invariant suites')
    check_parser.add_argument('--seed', type=int, help='Seed for the random check instances')

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)

    setup_logging(args.verbose, args.log_file)

    if args.command == 'run':
        return run_experiment_command(args)
    elif args.command == 'profile':
        return run_profile_command(args)
    elif args.command == 'check':
        return run_check_command(args)
    else:
        parser.print_help()
        return EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(main())

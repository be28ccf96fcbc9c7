#!/usr/bin/env python3
"""
OSGAFlow - Main Entry Point

Quick start script comparing OSGA with the baselines on a lasso problem
"""

import sys
import os

import pandas as pd

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from osgaflow import BenchmarkRunner
from osgaflow.config import LassoConfig
from osgaflow.instances import build_instance


def main():
    """Run a quick demonstration of OSGAFlow"""
    print("OSGAFlow - Optimal Subgradient Algorithm")
    print("=" * 40)

    config = LassoConfig(m=200, n=400, density="dense", max_iterations=300,
                         record_wall_time=False)
    print(f"Solving a {config.m} x {config.n} lasso problem for {config.max_iterations} iterations...")

    runner = BenchmarkRunner(config)
    instance = build_instance(config)

    print("\nKey Results:")
    print("-" * 12)
    traces = {}
    eta = None
    for name in config.solvers:
        run = runner.execute(name, instance)
        if not run.ok:
            print(f"{name:>6}: failed ({run.error})")
            continue
        result = run.result
        traces[name] = result.trace["best_objective"]
        if name == "osga":
            eta = result.trace["eta"].iloc[-1]
        print(f"{name:>6}: best objective {result.f_best:.8g} "
              f"({result.forward_ops} forward / {result.adjoint_ops} adjoint operator calls)")

    if eta is not None:
        print(f"\nOSGA certified error factor eta = {eta:.3g}")

    output = "quick_lasso_traces.csv"
    pd.DataFrame(traces).to_csv(output)
    print(f"\n✓ Best-objective traces saved to '{output}'")

    print("\nTo explore more:")
    print("- Run 'osgaflow run configs/tv_denoise.yaml' for TV denoising")
    print("- Run 'osgaflow check' for the invariant self-checks")
    print("- Use 'osgaflow --help' for full CLI options")


if __name__ == "__main__":
    main()

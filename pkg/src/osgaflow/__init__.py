"""
OSGAFlow: optimal subgradient algorithm for multi-term affine composite problems

Implements OSGA together with the NSDSG, PGA, FISTA and NES83 baselines and a
benchmark harness for random linear systems, sparse spike recovery and
total-variation imaging.
"""

__version__ = "0.1.0"
__author__ = "OSGAFlow Development Team"

from .benchmark import BenchmarkRunner, ExperimentResult, run_experiment
from .config import ExperimentConfig, get_preset, load_config
from .core import CompositeProblem, OSGASolver, OsgaParams, Termination, osga_solve
from .exceptions import (
    ConfigError,
    DimensionError,
    InfeasiblePointError,
    OsgaFlowError,
    ProfileError,
    StepFailureError,
)

__all__ = [
    "BenchmarkRunner",
    "ExperimentResult",
    "run_experiment",
    "ExperimentConfig",
    "get_preset",
    "load_config",
    "CompositeProblem",
    "OSGASolver",
    "OsgaParams",
    "Termination",
    "osga_solve",
    "ConfigError",
    "DimensionError",
    "InfeasiblePointError",
    "OsgaFlowError",
    "ProfileError",
    "StepFailureError",
]

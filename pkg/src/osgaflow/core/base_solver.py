"""
Base solver class shared by OSGA and the baseline methods
"""

import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from ..exceptions import InfeasiblePointError
from .problems import CompositeProblem, OracleResult

logger = logging.getLogger(__name__)

# A trace sink receives one row per iteration plus the point the row describes.
TraceSink = Callable[[Dict[str, Any], np.ndarray], None]


@dataclass
class Termination:
    """Stopping rules; any subset may be active but at least one must be"""

    max_iterations: Optional[int] = None
    max_seconds: Optional[float] = None
    eta_tolerance: Optional[float] = None
    psi_target: Optional[float] = None

    def __post_init__(self):
        if all(v is None for v in (self.max_iterations, self.max_seconds,
                                   self.eta_tolerance, self.psi_target)):
            raise ValueError("At least one termination criterion must be active")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.max_seconds is not None and self.max_seconds < 0:
            raise ValueError("max_seconds must be >= 0")

    def reason(self, iteration: int, seconds: float, objective: float,
               eta: float = float("nan")) -> Optional[str]:
        """Name of the first criterion that fires, or None"""
        if self.psi_target is not None and objective <= self.psi_target:
            return "psi_target"
        if self.eta_tolerance is not None and eta <= self.eta_tolerance:
            return "eta_tolerance"
        if self.max_iterations is not None and iteration >= self.max_iterations:
            return "max_iterations"
        if self.max_seconds is not None and seconds >= self.max_seconds:
            return "max_seconds"
        return None


@dataclass
class SolveResult:
    """Outcome of one solver run"""

    solver: str
    x_best: np.ndarray
    f_best: float
    x_last: np.ndarray
    f_last: float
    iterations: int
    seconds: float
    forward_ops: int
    adjoint_ops: int
    reason: str
    trace: pd.DataFrame


class BaseSolver(ABC):
    """Abstract base class for first-order solvers driven by the composite oracle"""

    name = "base"

    def __init__(self, problem: CompositeProblem, random_state: Optional[int] = None,
                 log_every: int = 100):
        """
        Initialize base solver

        Args:
            problem: Composite problem to minimize
            random_state: Random seed for solvers that draw auxiliary points
            log_every: Emit a DEBUG progress line every this many iterations
        """
        self.problem = problem
        self.random_state = random_state
        self.rng = np.random.RandomState(random_state)
        self.log_every = max(1, int(log_every))
        self.trace_history: List[Dict[str, Any]] = []
        self._reset_counters()

    def _reset_counters(self) -> None:
        self.iteration = 0
        self.forward_ops = 0
        self.adjoint_ops = 0
        self.x_best: Optional[np.ndarray] = None
        self.f_best = float("inf")

    # Oracle wrappers keep the operator bookkeeping in one place

    def _count(self, result: OracleResult) -> OracleResult:
        self.forward_ops += result.forward_ops
        self.adjoint_ops += result.adjoint_ops
        return result

    def oracle_fg(self, x: np.ndarray) -> OracleResult:
        return self._count(self.problem.nfo_fg(x))

    def oracle_f(self, x: np.ndarray) -> OracleResult:
        return self._count(self.problem.nfo_f(x))

    def oracle_g(self, x: np.ndarray) -> OracleResult:
        return self._count(self.problem.nfo_g(x))

    def smooth_oracle(self, x: np.ndarray):
        value, gradient, fwd, adj = self.problem.smooth_value_and_gradient(x)
        self.forward_ops += fwd
        self.adjoint_ops += adj
        return value, gradient

    def _track_best(self, x: np.ndarray, value: float) -> None:
        # ties keep the incumbent
        if value < self.f_best:
            self.f_best = value
            self.x_best = np.array(x, copy=True)

    def _initial_value(self, x0: np.ndarray) -> float:
        result = self.oracle_f(x0)
        if not result.feasible:
            raise InfeasiblePointError(f"{self.name}: starting point is infeasible")
        return result.value

    @abstractmethod
    def initialize(self, x0: np.ndarray) -> None:
        """Initialize solver state at x0"""
        pass

    @abstractmethod
    def step(self) -> None:
        """Perform one iteration"""
        pass

    @property
    @abstractmethod
    def current_point(self) -> np.ndarray:
        """Point reported in the trace for the current iteration"""
        pass

    @property
    @abstractmethod
    def current_value(self) -> float:
        pass

    @property
    def eta(self) -> float:
        """Certified error factor when the method has one"""
        return float("nan")

    @property
    def step_parameter(self) -> float:
        return float("nan")

    def stop_reason(self) -> Optional[str]:
        """Solver-specific stopping rule checked before every iteration"""
        return None

    def _record(self, seconds: float, trace_sink: Optional[TraceSink]) -> None:
        row = {
            "iteration": self.iteration,
            "seconds": seconds,
            "objective": self.current_value,
            "best_objective": self.f_best,
            "eta": self.eta,
            "step": self.step_parameter,
            "fwd_ops": self.forward_ops,
            "adj_ops": self.adjoint_ops,
        }
        self.trace_history.append(row)
        if trace_sink is not None:
            trace_sink(row, self.current_point)

    def run(self, x0: np.ndarray, termination: Termination,
            trace_sink: Optional[TraceSink] = None) -> SolveResult:
        """
        Run the solver from x0 until a termination criterion fires

        Args:
            x0: Starting point in the problem domain
            termination: Stopping rules
            trace_sink: Optional callback receiving each trace row and its point

        Returns:
            SolveResult with best and last points and the trace DataFrame
        """
        self.reset()
        start = time.perf_counter()
        self.initialize(np.array(x0, dtype=float))
        self._record(time.perf_counter() - start, trace_sink)
        logger.info(f"{self.name}: started, initial objective {self.current_value:.6g}")

        while True:
            elapsed = time.perf_counter() - start
            reason = self.stop_reason() or termination.reason(
                self.iteration, elapsed, self.f_best, self.eta)
            if reason is not None:
                break
            self.step()
            self.iteration += 1
            self._record(time.perf_counter() - start, trace_sink)
            if self.iteration % self.log_every == 0:
                logger.debug(f"{self.name}: iteration {self.iteration}, "
                             f"best objective {self.f_best:.10g}")

        elapsed = time.perf_counter() - start
        logger.info(f"{self.name}: stopped after {self.iteration} iterations ({reason}), "
                    f"best objective {self.f_best:.10g}")
        return SolveResult(
            solver=self.name,
            x_best=self.x_best.copy(),
            f_best=self.f_best,
            x_last=np.array(self.current_point, copy=True),
            f_last=self.current_value,
            iterations=self.iteration,
            seconds=elapsed,
            forward_ops=self.forward_ops,
            adjoint_ops=self.adjoint_ops,
            reason=reason,
            trace=self.get_trace_df(),
        )

    def reset(self) -> None:
        """Reset solver to a clean state"""
        self.trace_history = []
        self.rng = np.random.RandomState(self.random_state)
        self._reset_counters()

    def get_trace_df(self) -> pd.DataFrame:
        """Get trace as pandas DataFrame"""
        if not self.trace_history:
            return pd.DataFrame()
        return pd.DataFrame(self.trace_history).set_index("iteration")

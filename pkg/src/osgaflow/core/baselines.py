"""
Baseline first-order solvers: NSDSG, PGA, FISTA and the subgradient-adapted NES83
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np

from ..exceptions import InfeasiblePointError, StepFailureError
from .base_solver import BaseSolver, SolveResult, Termination, TraceSink
from .problems import CompositeProblem
from .proximal import ProxOperator, StepConfig

logger = logging.getLogger(__name__)

MAX_BACKTRACKS = 60


def momentum_sequence(a: float) -> float:
    """a_{k+1} = (1 + sqrt(4 a_k^2 + 1)) / 2"""
    return 0.5 * (1.0 + math.sqrt(4.0 * a * a + 1.0))


def _secant_step(x0: np.ndarray, z: np.ndarray, g0: np.ndarray, gz: np.ndarray) -> float:
    dx = float(np.linalg.norm((x0 - z).ravel()))
    dg = float(np.linalg.norm((g0 - gz).ravel()))
    if dx == 0.0:
        raise ValueError("Auxiliary point must differ from the starting point")
    if dg == 0.0:
        raise ValueError("Subgradients at the starting and auxiliary points coincide")
    return dx / dg


def initial_step_estimate(problem: CompositeProblem, x0: np.ndarray, z: np.ndarray) -> float:
    """Secant step ||x0 - z|| / ||g(x0) - g(z)||, the reciprocal of the L0 estimate"""
    g0 = problem.nfo_g(x0).subgradient
    gz = problem.nfo_g(z).subgradient
    if g0 is None or gz is None:
        raise ValueError("Secant estimate needs feasible points")
    return _secant_step(np.asarray(x0, float), np.asarray(z, float), g0, gz)


class NSDSGSolver(BaseSolver):
    """Nonsummable diminishing subgradient method, step alpha0 / sqrt(k)"""

    name = "nsdsg"

    def __init__(self, problem: CompositeProblem, step: StepConfig,
                 random_state: Optional[int] = None, log_every: int = 100):
        super().__init__(problem, random_state, log_every)
        if step.kind != "diminishing":
            raise ValueError("NSDSG needs a diminishing step rule")
        self.alpha0 = step.alpha0

    def initialize(self, x0: np.ndarray) -> None:
        result = self.oracle_fg(x0)
        if not result.feasible:
            raise InfeasiblePointError(f"{self.name}: starting point is infeasible")
        self.x = x0
        self.value = result.value
        self.g = result.subgradient
        self.g_best = self.g
        self._track_best(x0, self.value)

    def step(self) -> None:
        k = self.iteration + 1
        self.x = self.x - (self.alpha0 / math.sqrt(k)) * self.g
        result = self.oracle_fg(self.x)
        if not result.feasible:
            # restart from the incumbent with the next, smaller step
            self.x, self.value, self.g = self.x_best.copy(), float("inf"), self.g_best
            return
        self.value, self.g = result.value, result.subgradient
        if self.value < self.f_best:
            self.g_best = self.g
        self._track_best(self.x, self.value)

    @property
    def current_point(self) -> np.ndarray:
        return self.x

    @property
    def current_value(self) -> float:
        return self.value

    @property
    def step_parameter(self) -> float:
        return self.alpha0 / math.sqrt(self.iteration + 1)


class PGASolver(BaseSolver):
    """Proximal gradient: x+ = prox_{reg/L}(x - grad f(x) / L)"""

    name = "pga"

    def __init__(self, problem: CompositeProblem, prox: ProxOperator, step: StepConfig,
                 random_state: Optional[int] = None, log_every: int = 100):
        super().__init__(problem, random_state, log_every)
        if step.kind != "lipschitz":
            raise ValueError(f"{self.name} needs a Lipschitz step rule")
        self.prox = prox
        self.L = step.L

    def _forward_backward(self, y: np.ndarray) -> np.ndarray:
        _, gradient = self.smooth_oracle(y)
        return self.prox.apply(y - gradient / self.L, 1.0 / self.L)

    def _evaluate(self, x: np.ndarray) -> float:
        return self.oracle_f(x).value_or_inf

    def initialize(self, x0: np.ndarray) -> None:
        self.x = x0
        self.value = self._initial_value(x0)
        self._track_best(x0, self.value)

    def step(self) -> None:
        self.x = self._forward_backward(self.x)
        self.value = self._evaluate(self.x)
        self._track_best(self.x, self.value)

    @property
    def current_point(self) -> np.ndarray:
        return self.x

    @property
    def current_value(self) -> float:
        return self.value

    @property
    def step_parameter(self) -> float:
        return 1.0 / self.L


class FISTASolver(PGASolver):
    """Forward-backward step at an extrapolated point with the a-sequence momentum"""

    name = "fista"

    def initialize(self, x0: np.ndarray) -> None:
        super().initialize(x0)
        self.y = x0.copy()
        self.a = 1.0

    def step(self) -> None:
        x_prev = self.x
        self.x = self._forward_backward(self.y)
        a_next = momentum_sequence(self.a)
        self.y = self.x + ((self.a - 1.0) / a_next) * (self.x - x_prev)
        self.a = a_next
        self.value = self._evaluate(self.x)
        self._track_best(self.x, self.value)


class NES83Solver(BaseSolver):
    """
    Nesterov's 1983 method driven by composite subgradients

    The step is found by backtracking: alpha shrinks by rho while the sufficient
    decrease test Psi(x_hat) <= Psi(y) - alpha/2 ||g_y||^2 fails.
    """

    name = "nes83"

    def __init__(self, problem: CompositeProblem, step: Optional[StepConfig] = None,
                 z: Optional[np.ndarray] = None, random_state: Optional[int] = None,
                 log_every: int = 100, max_backtracks: int = MAX_BACKTRACKS):
        super().__init__(problem, random_state, log_every)
        step = step or StepConfig.backtracking()
        if step.kind != "backtracking":
            raise ValueError("NES83 needs a backtracking step rule")
        self.rho = step.rho
        self.z = None if z is None else np.asarray(z, dtype=float)
        self.max_backtracks = int(max_backtracks)

    def _auxiliary_point(self, y0: np.ndarray) -> np.ndarray:
        if self.z is not None:
            return self.z
        spread = 1e-2 * max(1.0, float(np.max(np.abs(y0))))
        return y0 + spread * self.rng.standard_normal(y0.shape)

    def initialize(self, y0: np.ndarray) -> None:
        self.a = 0.0
        self.x = y0.copy()
        self.x_prev = y0.copy()
        self.y = y0.copy()

        start = self.oracle_fg(y0)
        if not start.feasible:
            raise InfeasiblePointError(f"{self.name}: starting point is infeasible")
        self.value = start.value
        self.psi_y, self.g_y = start.value, start.subgradient
        self._track_best(y0, self.value)

        z = self._auxiliary_point(y0)
        g_z = self.oracle_g(z).subgradient
        if g_z is None:
            raise ValueError("NES83 auxiliary point is infeasible")
        self.alpha = _secant_step(y0, z, self.g_y, g_z)

    def step(self) -> None:
        g_sq = float(np.vdot(self.g_y, self.g_y))
        alpha = self.alpha
        x_hat = self.y - alpha * self.g_y
        psi_hat = self.oracle_f(x_hat).value_or_inf
        shrinks = 0
        while psi_hat > self.psi_y - 0.5 * alpha * g_sq:
            if shrinks == self.max_backtracks:
                raise StepFailureError(self.iteration + 1,
                                       f"no sufficient decrease after {shrinks} step reductions")
            alpha *= self.rho
            x_hat = self.y - alpha * self.g_y
            psi_hat = self.oracle_f(x_hat).value_or_inf
            shrinks += 1

        self.x_prev, self.x = self.x, x_hat
        self.value, self.alpha = psi_hat, alpha
        self._track_best(self.x, self.value)

        a_next = momentum_sequence(self.a)
        self.y = self.x + (self.a - 1.0) * (self.x - self.x_prev) / a_next
        self.a = a_next
        at_y = self.oracle_fg(self.y)
        if at_y.feasible:
            self.psi_y, self.g_y = at_y.value, at_y.subgradient
        else:
            # extrapolated point left the domain: restart momentum at x
            self.y, self.a = self.x.copy(), 0.0
            self.x_prev = self.x.copy()
            restart = self.oracle_fg(self.y)
            self.psi_y, self.g_y = restart.value, restart.subgradient

    @property
    def current_point(self) -> np.ndarray:
        return self.x

    @property
    def current_value(self) -> float:
        return self.value

    @property
    def step_parameter(self) -> float:
        return self.alpha


def nsdsg_solve(problem: CompositeProblem, x0: np.ndarray, alpha0: float,
                termination: Termination,
                trace_sink: Optional[TraceSink] = None) -> Tuple[np.ndarray, SolveResult]:
    """Returns the best point seen and the run result"""
    result = NSDSGSolver(problem, StepConfig.diminishing(alpha0)).run(x0, termination, trace_sink)
    return result.x_best, result


def pga_solve(problem: CompositeProblem, prox: ProxOperator, L: float, x0: np.ndarray,
              termination: Termination,
              trace_sink: Optional[TraceSink] = None) -> Tuple[np.ndarray, SolveResult]:
    result = PGASolver(problem, prox, StepConfig.lipschitz(L)).run(x0, termination, trace_sink)
    return result.x_last, result


def fista_solve(problem: CompositeProblem, prox: ProxOperator, L: float, x0: np.ndarray,
                termination: Termination,
                trace_sink: Optional[TraceSink] = None) -> Tuple[np.ndarray, SolveResult]:
    result = FISTASolver(problem, prox, StepConfig.lipschitz(L)).run(x0, termination, trace_sink)
    return result.x_last, result


def nes83_solve(problem: CompositeProblem, x0: np.ndarray, z: Optional[np.ndarray] = None,
                rho: float = 0.5, termination: Optional[Termination] = None,
                trace_sink: Optional[TraceSink] = None,
                random_state: Optional[int] = None) -> Tuple[np.ndarray, SolveResult]:
    """Returns the last iterate x_k and the run result"""
    if termination is None:
        raise ValueError("A termination rule is required")
    solver = NES83Solver(problem, StepConfig.backtracking(rho), z=z, random_state=random_state)
    result = solver.run(x0, termination, trace_sink)
    return result.x_last, result

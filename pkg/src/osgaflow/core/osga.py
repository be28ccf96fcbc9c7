"""
Optimal SubGradient Algorithm (OSGA) for multi-term affine composite functions

The iteration keeps a linear relaxation gamma + <h, z> <= Psi(z), a best point x_b and
the error factor eta, which certifies Psi(x_b) - Psi* <= eta Q(x*). The step
parameter alpha is adapted by the parameter updating scheme (PUS) from the observed
progress ratio R = (eta - eta_bar) / (delta alpha eta).
"""

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from ..exceptions import InfeasiblePointError
from .base_solver import BaseSolver, SolveResult, Termination, TraceSink
from .linop import inner
from .problems import CompositeProblem
from .proxfun import QuadraticProx, default_prox


@dataclass(frozen=True)
class OsgaParams:
    """Global tuning parameters"""

    delta: float = 0.9
    alpha_max: float = 0.7
    kappa: float = 0.5
    kappa_prime: float = 0.5
    mu: float = 0.0
    psi_target: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0.0 < self.alpha_max < 1.0:
            raise ValueError(f"alpha_max must lie in (0, 1), got {self.alpha_max}")
        if not 0.0 < self.kappa_prime <= self.kappa:
            raise ValueError("Need 0 < kappa_prime <= kappa")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")


@dataclass(frozen=True)
class SolverState:
    """Live OSGA quantities"""

    x_b: np.ndarray
    psi_b: float
    h: np.ndarray
    gamma: float
    eta: float
    u: np.ndarray
    alpha: float
    iteration: int = 0
    forward_ops: int = 0
    adjoint_ops: int = 0
    stopped: Optional[str] = None


def osga_init(problem: CompositeProblem, Q: QuadraticProx, params: OsgaParams,
              x0: np.ndarray) -> SolverState:
    """Evaluate the starting point and build the first relaxation and subproblem solution"""
    x_b = np.array(x0, dtype=float)
    result = problem.nfo_fg(x_b)
    if not result.feasible:
        raise InfeasiblePointError("OSGA starting point is infeasible")
    psi_b = result.value

    h = result.subgradient - params.mu * Q.gradient(x_b)
    gamma = psi_b - params.mu * Q.value(x_b) - inner(h, x_b)
    solution = Q.solve_subproblem(gamma - psi_b, h)

    stopped = None
    if params.psi_target is not None and psi_b <= params.psi_target:
        stopped = "psi_target"
    return SolverState(
        x_b=x_b, psi_b=psi_b, h=h, gamma=gamma,
        eta=solution.e - params.mu, u=solution.u, alpha=params.alpha_max,
        forward_ops=result.forward_ops, adjoint_ops=result.adjoint_ops,
        stopped=stopped,
    )


def pus_update(state: SolverState, eta_bar: float, h_bar: np.ndarray, gamma_bar: float,
               u_bar: np.ndarray, params: OsgaParams) -> SolverState:
    """Parameter updating scheme: adapt alpha, accept (h, gamma, eta, u) on progress"""
    if state.eta <= 0:
        return state
    r = (state.eta - eta_bar) / (params.delta * state.alpha * state.eta)
    if r < 1:
        alpha = state.alpha * math.exp(-params.kappa)
    else:
        alpha = min(state.alpha * math.exp(min(params.kappa_prime * (r - 1.0), 50.0)),
                    params.alpha_max)

    if eta_bar < state.eta:
        return replace(state, alpha=alpha, h=h_bar, gamma=gamma_bar, eta=eta_bar, u=u_bar)
    return replace(state, alpha=alpha)


def osga_step(state: SolverState, problem: CompositeProblem, Q: QuadraticProx,
              params: OsgaParams) -> SolverState:
    """One OSGA iteration: one NFO-FG call, one NFO-F call, then PUS"""
    mu = params.mu
    x_b, psi_b, alpha = state.x_b, state.psi_b, state.alpha
    forward, adjoint = state.forward_ops, state.adjoint_ops

    x = x_b + alpha * (state.u - x_b)
    trial = problem.nfo_fg(x)
    forward += trial.forward_ops
    adjoint += trial.adjoint_ops
    if not trial.feasible:
        # no subgradient at x: keep x_b and shrink the step as for R < 1
        shrunk = replace(state, forward_ops=forward, adjoint_ops=adjoint,
                         iteration=state.iteration + 1)
        return pus_update(shrunk, state.eta, state.h, state.gamma, state.u, params)
    psi_x = trial.value

    g = trial.subgradient - mu * Q.gradient(x) if mu else trial.subgradient
    h_bar = state.h + alpha * (g - state.h)
    q_x = Q.value(x) if mu else 0.0
    gamma_bar = state.gamma + alpha * (psi_x - mu * q_x - inner(g, x) - state.gamma)

    x_b1, psi_b1 = (x, psi_x) if psi_x < psi_b else (x_b, psi_b)
    u1 = Q.solve_subproblem(gamma_bar - psi_b1, h_bar).u
    x1 = x_b + alpha * (u1 - x_b)
    check = problem.nfo_f(x1)
    forward += check.forward_ops
    adjoint += check.adjoint_ops
    psi_x1 = check.value_or_inf

    x_bb, psi_bb = (x1, psi_x1) if psi_x1 < psi_b1 else (x_b1, psi_b1)
    solution = Q.solve_subproblem(gamma_bar - psi_bb, h_bar)
    eta_bar = solution.e - mu

    committed = replace(state, x_b=x_bb, psi_b=psi_bb, iteration=state.iteration + 1,
                        forward_ops=forward, adjoint_ops=adjoint)
    if params.psi_target is not None and psi_bb <= params.psi_target:
        return replace(committed, stopped="psi_target")
    return pus_update(committed, eta_bar, h_bar, gamma_bar, solution.u, params)


class OSGASolver(BaseSolver):
    """OSGA driven through the common solver interface"""

    name = "osga"

    def __init__(self, problem: CompositeProblem, prox: Optional[QuadraticProx] = None,
                 params: Optional[OsgaParams] = None, random_state: Optional[int] = None,
                 log_every: int = 100):
        super().__init__(problem, random_state, log_every)
        self.prox = prox
        self.params = params or OsgaParams()
        self.state: Optional[SolverState] = None

    def initialize(self, x0: np.ndarray) -> None:
        if self.prox is None:
            self.prox = default_prox(x0)
        self.state = osga_init(self.problem, self.prox, self.params, x0)
        self._sync()

    def step(self) -> None:
        self.state = osga_step(self.state, self.problem, self.prox, self.params)
        self._sync()

    def _sync(self) -> None:
        self.forward_ops = self.state.forward_ops
        self.adjoint_ops = self.state.adjoint_ops
        self._track_best(self.state.x_b, self.state.psi_b)

    def stop_reason(self) -> Optional[str]:
        if self.state.stopped:
            return self.state.stopped
        if self.state.eta <= 0:
            return "eta_zero"
        return None

    @property
    def current_point(self) -> np.ndarray:
        return self.state.x_b

    @property
    def current_value(self) -> float:
        return self.state.psi_b

    @property
    def eta(self) -> float:
        return self.state.eta

    @property
    def step_parameter(self) -> float:
        return self.state.alpha


def osga_solve(problem: CompositeProblem, Q: Optional[QuadraticProx], params: OsgaParams,
               x0: np.ndarray, termination: Termination,
               trace_sink: Optional[TraceSink] = None) -> Tuple[np.ndarray, float, SolveResult]:
    """
    Run OSGA until a termination criterion fires

    Returns:
        (x_b, psi_b, result) where result carries the trace DataFrame
    """
    if params.psi_target is not None and termination.psi_target is None:
        termination = replace(termination, psi_target=params.psi_target)
    solver = OSGASolver(problem, Q, params)
    result = solver.run(x0, termination, trace_sink)
    return result.x_best, result.f_best, result

"""
Proximal operators and step-size rules used by the baseline solvers
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..exceptions import ConfigError
from .linop import Blur2DMap, DenseMap, DiagonalMap, IdentityMap, LinearMap, MaskMap
from .problems import ITV, L1, L2Sq, CompositeProblem, itv_value

# dual step of the projection scheme; 1/8 bounds ||grad||^2 for the 2-D stencil
CHAMBOLLE_TAU = 0.125


def prox_soft_threshold(y: np.ndarray, lam: float) -> np.ndarray:
    """argmin_x 1/2||x - y||^2 + lam ||x||_1"""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    y = np.asarray(y, dtype=float)
    return np.sign(y) * np.maximum(np.abs(y) - lam, 0.0)


def prox_l2sq(y: np.ndarray, lam: float) -> np.ndarray:
    """argmin_x 1/2||x - y||^2 + lam/2 ||x||^2"""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    return np.asarray(y, dtype=float) / (1.0 + lam)


def _gradient(X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # forward differences, zero on the last row / column (Neumann)
    gx = np.zeros_like(X)
    gy = np.zeros_like(X)
    gx[:-1, :] = X[1:, :] - X[:-1, :]
    gy[:, :-1] = X[:, 1:] - X[:, :-1]
    return gx, gy


def _divergence(px: np.ndarray, py: np.ndarray) -> np.ndarray:
    # negative adjoint of _gradient
    div = np.zeros_like(px)
    div[:-1, :] += px[:-1, :]
    div[1:, :] -= px[:-1, :]
    div[:, :-1] += py[:, :-1]
    div[:, 1:] -= py[:, :-1]
    return div


def tv_prox_objective(X: np.ndarray, Y: np.ndarray, lam: float) -> float:
    """Primal objective 1/2||X - Y||^2 + lam ||X||_ITV of the TV prox"""
    r = np.asarray(X, dtype=float) - np.asarray(Y, dtype=float)
    return 0.5 * float(np.vdot(r, r)) + lam * itv_value(X)


def chambolle_dual_energy(Y: np.ndarray, lam: float, px: np.ndarray, py: np.ndarray) -> float:
    """||Y - lam div p||^2, decreased by every projection step"""
    r = np.asarray(Y, dtype=float) - lam * _divergence(px, py)
    return float(np.vdot(r, r))


def prox_tv_chambolle(Y: np.ndarray, lam: float, chit: int,
                      return_dual: bool = False):
    """
    Approximate prox of lam ||.||_ITV by a fixed number of dual projection steps

    Args:
        Y: Image to denoise
        lam: Regularization weight
        chit: Number of inner iterations (exactly this many are run)
        return_dual: Also return the dual field (px, py)

    Returns:
        Y - lam div p, optionally with (px, py)
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    if chit < 1:
        raise ValueError("chit must be >= 1")
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValueError("TV prox needs a matrix argument")
    px = np.zeros_like(Y)
    py = np.zeros_like(Y)
    if lam == 0:
        return (Y.copy(), (px, py)) if return_dual else Y.copy()

    for _ in range(chit):
        gx, gy = _gradient(_divergence(px, py) - Y / lam)
        denom = 1.0 + CHAMBOLLE_TAU * np.sqrt(gx ** 2 + gy ** 2)
        px = (px + CHAMBOLLE_TAU * gx) / denom
        py = (py + CHAMBOLLE_TAU * gy) / denom

    X = Y - lam * _divergence(px, py)
    return (X, (px, py)) if return_dual else X


def _project_unit_ball(px: np.ndarray, py: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    norm = np.maximum(1.0, np.sqrt(px ** 2 + py ** 2))
    return px / norm, py / norm


def prox_tv_fgp(Y: np.ndarray, lam: float, chit: int,
                return_dual: bool = False):
    """
    Approximate prox of lam ||.||_ITV by accelerated gradient projection on the dual

    Each of the chit steps takes a 1/8 gradient step on ||Y - lam div p||^2 at an
    extrapolated field, projects every pixel pair onto the unit disc and updates the
    momentum with the t-sequence. Starts cold from p = 0.

    Returns:
        Y - lam div p, optionally with (px, py)
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    if chit < 1:
        raise ValueError("chit must be >= 1")
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValueError("TV prox needs a matrix argument")
    px = np.zeros_like(Y)
    py = np.zeros_like(Y)
    if lam == 0:
        return (Y.copy(), (px, py)) if return_dual else Y.copy()

    rx, ry = px, py
    t = 1.0
    for _ in range(chit):
        px_old, py_old = px, py
        gx, gy = _gradient(_divergence(rx, ry) - Y / lam)
        px, py = _project_unit_ball(rx + CHAMBOLLE_TAU * gx, ry + CHAMBOLLE_TAU * gy)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        momentum = (t - 1.0) / t_next
        rx = px + momentum * (px - px_old)
        ry = py + momentum * (py - py_old)
        t = t_next

    X = Y - lam * _divergence(px, py)
    return (X, (px, py)) if return_dual else X


@dataclass(frozen=True)
class StepConfig:
    """Step-size rule: lipschitz(L), diminishing(alpha0) or backtracking(rho)"""

    kind: str
    L: Optional[float] = None
    alpha0: Optional[float] = None
    rho: Optional[float] = None
    initial_rule: str = "secant"

    def __post_init__(self):
        if self.kind == "lipschitz":
            if self.L is None or not self.L > 0:
                raise ValueError("Lipschitz step needs L > 0")
        elif self.kind == "diminishing":
            if self.alpha0 is None or not self.alpha0 > 0:
                raise ValueError("Diminishing step needs alpha0 > 0")
        elif self.kind == "backtracking":
            if self.rho is None or not 0.0 < self.rho < 1.0:
                raise ValueError("Backtracking needs rho in (0, 1)")
        else:
            raise ValueError(f"Unknown step rule: {self.kind}")

    @classmethod
    def lipschitz(cls, L: float) -> "StepConfig":
        return cls("lipschitz", L=float(L))

    @classmethod
    def diminishing(cls, alpha0: float) -> "StepConfig":
        return cls("diminishing", alpha0=float(alpha0))

    @classmethod
    def backtracking(cls, rho: float = 0.5, initial_rule: str = "secant") -> "StepConfig":
        return cls("backtracking", rho=float(rho), initial_rule=initial_rule)


def lipschitz_column_bound(A: LinearMap) -> float:
    """L-hat = max_i ||a_i||^2 over the columns of a dense operator"""
    if not isinstance(A, DenseMap):
        raise TypeError("Column bound needs an explicit dense operator")
    return float(A.column_norms_squared().max())


def operator_norm_squared(A: LinearMap, iterations: int = 100, seed: int = 0) -> float:
    """
    Upper estimate of ||A||^2, the Lipschitz constant of grad 1/2||Ax - y||^2

    Exact for identity, mask and blur operators (norm one) and diagonal maps; power
    iteration on A*A otherwise, inflated by 1% to stay on the safe side.
    """
    if isinstance(A, (IdentityMap, MaskMap, Blur2DMap)):
        return 1.0
    if isinstance(A, DiagonalMap):
        return float(np.max(A.weights ** 2))
    rng = np.random.RandomState(seed)
    v = rng.standard_normal(A.domain.dims)
    estimate = 0.0
    for _ in range(iterations):
        v = v / np.linalg.norm(v.ravel())
        w = A.adjoint(A.apply(v))
        estimate = float(np.linalg.norm(w.ravel()))
        if estimate == 0.0:
            return 0.0
        v = w
    return 1.01 * estimate


class ProxOperator:
    """Proximal map of the regularizer part, x = prox_{step * reg}(y)"""

    KINDS = ("soft_threshold", "l2sq_shrink", "tv_chambolle", "tv_fgp", "elastic_net")
    TV_SOLVERS = {"chambolle": "tv_chambolle", "fgp": "tv_fgp"}

    def __init__(self, kind: str, lam: float = 0.0, lam2: float = 0.0, chit: int = 10):
        if kind not in self.KINDS:
            raise ValueError(f"Unknown proximal operator: {kind}")
        if lam < 0 or lam2 < 0:
            raise ValueError("Regularization weights must be >= 0")
        if chit < 1:
            raise ValueError("chit must be >= 1")
        self.kind = kind
        self.lam = float(lam)
        self.lam2 = float(lam2)
        self.chit = int(chit)

    @classmethod
    def soft_threshold(cls, lam: float) -> "ProxOperator":
        return cls("soft_threshold", lam)

    @classmethod
    def l2sq_shrink(cls, lam: float) -> "ProxOperator":
        return cls("l2sq_shrink", lam)

    @classmethod
    def tv_chambolle(cls, lam: float, chit: int = 10) -> "ProxOperator":
        return cls("tv_chambolle", lam, chit=chit)

    @classmethod
    def tv_fgp(cls, lam: float, chit: int = 10) -> "ProxOperator":
        return cls("tv_fgp", lam, chit=chit)

    @classmethod
    def elastic_net(cls, lam1: float, lam2: float) -> "ProxOperator":
        return cls("elastic_net", lam1, lam2)

    @classmethod
    def from_problem(cls, problem: CompositeProblem, chit: int = 10,
                     tv_solver: str = "fgp") -> "ProxOperator":
        """
        Derive the proximal map when every regularizer acts through the identity

        tv_solver picks the inner TV scheme: "fgp" (accelerated) or "chambolle".
        """
        if tv_solver not in cls.TV_SOLVERS:
            raise ConfigError(f"Unknown TV prox solver '{tv_solver}', "
                              f"expected one of {sorted(cls.TV_SOLVERS)}")
        l1 = l2 = tv = 0.0
        for reg, op in problem.reg_terms:
            if not isinstance(op, IdentityMap):
                raise ConfigError(f"No closed-form prox for {type(reg).__name__} behind {op!r}")
            if isinstance(reg, L1):
                l1 += reg.lam
            elif isinstance(reg, L2Sq):
                l2 += reg.lam
            elif isinstance(reg, ITV):
                tv += reg.lam
            else:
                raise ConfigError(f"No proximal operator available for {type(reg).__name__}")
        if tv and (l1 or l2):
            raise ConfigError("TV prox cannot be combined with other regularizers")
        if tv:
            return cls(cls.TV_SOLVERS[tv_solver], tv, chit=chit)
        if l1 and l2:
            return cls.elastic_net(l1, l2)
        if l2:
            return cls.l2sq_shrink(l2)
        return cls.soft_threshold(l1)

    def apply(self, y: np.ndarray, step: float) -> np.ndarray:
        if self.kind == "soft_threshold":
            return prox_soft_threshold(y, step * self.lam)
        if self.kind == "l2sq_shrink":
            return prox_l2sq(y, step * self.lam)
        if self.kind == "elastic_net":
            return prox_l2sq(prox_soft_threshold(y, step * self.lam), step * self.lam2)
        if self.kind == "tv_fgp":
            return prox_tv_fgp(y, step * self.lam, self.chit)
        return prox_tv_chambolle(y, step * self.lam, self.chit)

    def __repr__(self) -> str:
        return f"ProxOperator({self.kind}, lam={self.lam:g})"

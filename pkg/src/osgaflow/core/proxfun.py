"""
Quadratic prox-functions and the closed-form OSGA subproblem

For Q(z) = Q0 + sigma/2 ||z - z0||_D^2 the subproblem

    E(gamma, h) = sup_z  -(gamma + <h, z>) / Q(z)

has the maximizer U(gamma, h) = z0 - h / (e sigma D) where e = E(gamma, h) is the
largest root of Q0 e^2 + beta1 e + beta2 = 0 with beta1 = gamma + <h, z0> and
beta2 = -||h||_{*D}^2 / (2 sigma). Matrices are handled entrywise with the
Frobenius (trace) inner product.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..exceptions import DimensionError
from .linop import Shape, inner

MACHINE_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class SubproblemSolution:
    e: float
    u: np.ndarray


class QuadraticProx:
    """Prox-function Q0 + sigma/2 sum_k w_k (z_k - z0_k)^2"""

    def __init__(self, q0: float, sigma: float, center: np.ndarray,
                 weights: Optional[np.ndarray] = None):
        if not q0 > 0:
            raise ValueError(f"Q0 must be positive, got {q0}")
        if not sigma > 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        self.q0 = float(q0)
        self.sigma = float(sigma)
        self.center = np.array(center, dtype=float)
        if weights is not None:
            weights = np.array(weights, dtype=float)
            if weights.shape != self.center.shape:
                raise DimensionError(Shape.of(self.center), Shape.of(weights), "prox weights")
            if not np.all(weights > 0):
                raise ValueError("Preconditioner weights must be strictly positive")
        self.weights = weights

    @property
    def shape(self) -> Shape:
        return Shape.of(self.center)

    def _check(self, z: np.ndarray, what: str) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != self.center.shape:
            raise DimensionError(self.shape, Shape.of(z), what)
        return z

    def _weighted(self, d: np.ndarray) -> np.ndarray:
        return d if self.weights is None else self.weights * d

    def value(self, z: np.ndarray) -> float:
        d = self._check(z, "prox argument") - self.center
        return self.q0 + 0.5 * self.sigma * inner(self._weighted(d), d)

    def gradient(self, z: np.ndarray) -> np.ndarray:
        d = self._check(z, "prox argument") - self.center
        return self.sigma * self._weighted(d)

    def dual_norm_squared(self, h: np.ndarray) -> float:
        h = self._check(h, "dual vector")
        if self.weights is None:
            return inner(h, h)
        return float(np.sum(h * h / self.weights))

    def solve_subproblem(self, gamma: float, h: np.ndarray) -> SubproblemSolution:
        """Closed-form (E(gamma, h), U(gamma, h))"""
        h = self._check(h, "subproblem slope")
        h_norm_sq = self.dual_norm_squared(h)
        if h_norm_sq == 0.0:
            return SubproblemSolution(max(0.0, -gamma / self.q0), self.center.copy())

        beta1 = gamma + inner(h, self.center)
        beta2 = -h_norm_sq / (2.0 * self.sigma)
        root = np.sqrt(beta1 * beta1 - 4.0 * self.q0 * beta2)
        if beta1 > 0:
            e = -2.0 * beta2 / (beta1 + root)
        else:
            e = (-beta1 + root) / (2.0 * self.q0)
        e = float(e)

        scale = e * self.sigma
        step = h / scale if self.weights is None else h / (scale * self.weights)
        return SubproblemSolution(e, self.center - step)

    def __repr__(self) -> str:
        weighted = "identity" if self.weights is None else "diagonal"
        return f"QuadraticProx(q0={self.q0:g}, sigma={self.sigma:g}, {weighted}, {self.shape})"


def q_value(Q: QuadraticProx, z: np.ndarray) -> float:
    return Q.value(z)


def q_gradient(Q: QuadraticProx, z: np.ndarray) -> np.ndarray:
    return Q.gradient(z)


def solve_subproblem(Q: QuadraticProx, gamma: float, h: np.ndarray) -> SubproblemSolution:
    return Q.solve_subproblem(gamma, h)


def default_prox(x0: np.ndarray, q0: Optional[float] = None, sigma: float = 1.0,
                 weights: Optional[np.ndarray] = None) -> QuadraticProx:
    """
    Prox-function centred at the starting point

    Q0 defaults to 1/2 ||x0||_2 + eps (norm, not squared norm) unless overridden.
    """
    x0 = np.asarray(x0, dtype=float)
    if q0 is None:
        q0 = 0.5 * float(np.linalg.norm(x0.ravel())) + MACHINE_EPS
    return QuadraticProx(q0, sigma, x0, weights)


def distance_q0(x0: np.ndarray, x_estimate: np.ndarray) -> float:
    """Q0 = 1/2 ||x_estimate - x0||^2, floored at machine epsilon"""
    d = np.asarray(x_estimate, dtype=float) - np.asarray(x0, dtype=float)
    return max(0.5 * inner(d, d), MACHINE_EPS)

"""
Composite problems and the nonsmooth first-order oracle (NFO-FG, NFO-F, NFO-G)

A composite problem is

    Psi(x) = sum_i f_i(A_i x) + sum_j phi_j(W_j x)

with smooth terms f_i and possibly nonsmooth regularizers phi_j. The oracle applies
each operator once per call and reuses the mapped points for value and subgradient.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import DimensionError
from .linop import IdentityMap, LinearMap, Shape, as_shape


class SmoothTerm(ABC):
    """Convex differentiable term f_i"""

    @abstractmethod
    def value(self, v: np.ndarray) -> float:
        pass

    @abstractmethod
    def gradient(self, v: np.ndarray) -> np.ndarray:
        pass


class QuadraticLoss(SmoothTerm):
    """1/2 ||v - y||^2"""

    def __init__(self, target: np.ndarray):
        self.target = np.asarray(target, dtype=float)

    def value(self, v):
        r = v - self.target
        return 0.5 * float(np.vdot(r, r))

    def gradient(self, v):
        return v - self.target


class ScaledL2Sq(SmoothTerm):
    """lam/2 ||v||^2"""

    def __init__(self, lam: float):
        if lam < 0:
            raise ValueError("Coefficient must be nonnegative")
        self.lam = float(lam)

    def value(self, v):
        return 0.5 * self.lam * float(np.vdot(v, v))

    def gradient(self, v):
        return self.lam * v


class Regularizer(ABC):
    """Convex regularizer phi_j with a deterministic subgradient selection"""

    lam: float = 0.0

    def is_feasible(self, w: np.ndarray) -> bool:
        return True

    @abstractmethod
    def value(self, w: np.ndarray) -> float:
        pass

    @abstractmethod
    def subgradient(self, w: np.ndarray) -> np.ndarray:
        pass


def _check_lam(lam: float) -> float:
    if lam < 0:
        raise ValueError(f"Regularization parameter must be nonnegative, got {lam}")
    return float(lam)


def _check_kink(kink: float) -> float:
    if not -1.0 <= kink <= 1.0:
        raise ValueError(f"Kink selection must lie in [-1, 1], got {kink}")
    return float(kink)


def _sign(w: np.ndarray, kink: float) -> np.ndarray:
    s = np.sign(w)
    if kink != 0.0:
        s[w == 0] = kink
    return s


class L1(Regularizer):
    """lam ||w||_1"""

    def __init__(self, lam: float, kink: float = 0.0):
        self.lam = _check_lam(lam)
        self.kink = _check_kink(kink)

    def value(self, w):
        return self.lam * float(np.abs(w).sum())

    def subgradient(self, w):
        return self.lam * _sign(w, self.kink)


class L2Sq(Regularizer):
    """lam/2 ||w||^2"""

    def __init__(self, lam: float):
        self.lam = _check_lam(lam)

    def value(self, w):
        return 0.5 * self.lam * float(np.vdot(w, w))

    def subgradient(self, w):
        return self.lam * w


def _check_image(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or min(X.shape) < 2:
        raise DimensionError("matrix(m, n) with m, n >= 2", X.shape, "total variation")
    return X


def _differences(X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # vertical (m-1, n) and horizontal (m, n-1) forward differences
    return X[1:, :] - X[:-1, :], X[:, 1:] - X[:, :-1]


def _differences_adjoint(G0: np.ndarray, G1: np.ndarray, shape) -> np.ndarray:
    out = np.zeros(shape)
    out[1:, :] += G0
    out[:-1, :] -= G0
    out[:, 1:] += G1
    out[:, :-1] -= G1
    return out


def itv_value(X: np.ndarray) -> float:
    """Isotropic total variation with the one-sided boundary sums"""
    X = _check_image(X)
    D0, D1 = _differences(X)
    interior = np.sqrt(D0[:, :-1] ** 2 + D1[:-1, :] ** 2).sum()
    return float(interior + np.abs(D0[:, -1]).sum() + np.abs(D1[-1, :]).sum())


def itv_subgradient(X: np.ndarray) -> np.ndarray:
    """Chain-rule subgradient of itv_value; zero where a stencil norm vanishes"""
    X = _check_image(X)
    D0, D1 = _differences(X)
    a, b = D0[:, :-1], D1[:-1, :]
    r = np.sqrt(a ** 2 + b ** 2)
    safe = np.where(r > 0, r, 1.0)
    G0 = np.empty_like(D0)
    G1 = np.empty_like(D1)
    G0[:, :-1] = np.where(r > 0, a / safe, 0.0)
    G1[:-1, :] = np.where(r > 0, b / safe, 0.0)
    G0[:, -1] = np.sign(D0[:, -1])
    G1[-1, :] = np.sign(D1[-1, :])
    return _differences_adjoint(G0, G1, X.shape)


def atv_value(X: np.ndarray) -> float:
    """Anisotropic total variation"""
    X = _check_image(X)
    D0, D1 = _differences(X)
    return float(np.abs(D0).sum() + np.abs(D1).sum())


def atv_subgradient(X: np.ndarray, kink: float = 0.0) -> np.ndarray:
    X = _check_image(X)
    D0, D1 = _differences(X)
    return _differences_adjoint(_sign(D0, kink), _sign(D1, kink), X.shape)


class ITV(Regularizer):
    """lam ||X||_ITV"""

    def __init__(self, lam: float):
        self.lam = _check_lam(lam)

    def value(self, w):
        return self.lam * itv_value(w)

    def subgradient(self, w):
        return self.lam * itv_subgradient(w)


class ATV(Regularizer):
    """lam ||X||_ATV"""

    def __init__(self, lam: float, kink: float = 0.0):
        self.lam = _check_lam(lam)
        self.kink = _check_kink(kink)

    def value(self, w):
        return self.lam * atv_value(w)

    def subgradient(self, w):
        return self.lam * atv_subgradient(w, self.kink)


class Indicator(Regularizer):
    """Indicator of the box [lower, upper]; no bounds means the whole space"""

    def __init__(self, lower: Optional[float] = None, upper: Optional[float] = None):
        if lower is not None and upper is not None and lower > upper:
            raise ValueError("Empty box: lower bound exceeds upper bound")
        self.lower = lower
        self.upper = upper

    def is_feasible(self, w):
        if self.lower is not None and np.any(w < self.lower):
            return False
        if self.upper is not None and np.any(w > self.upper):
            return False
        return True

    def value(self, w):
        return 0.0

    def subgradient(self, w):
        return np.zeros_like(w)


@dataclass(frozen=True)
class OracleResult:
    """Oracle output; value is None and feasible is False outside dom Psi"""

    value: Optional[float]
    subgradient: Optional[np.ndarray]
    forward_ops: int
    adjoint_ops: int
    feasible: bool = True

    @property
    def value_or_inf(self) -> float:
        return self.value if self.feasible else float("inf")


SmoothPair = Tuple[SmoothTerm, LinearMap]
RegPair = Tuple[Regularizer, LinearMap]
SUBGRADIENT_RULES = ("sign", "min_norm")


def _min_norm_l1(x: np.ndarray, rest: np.ndarray, lam: float) -> np.ndarray:
    # rest + lam * sign(x), with the element of rest + lam [-1, 1] closest to 0 where x == 0
    out = rest + lam * np.sign(x)
    zero = x == 0
    out[zero] = np.sign(rest[zero]) * np.maximum(np.abs(rest[zero]) - lam, 0.0)
    return out


class CompositeProblem:
    """
    Ordered smooth and regularizer terms over a common domain

    subgradient_rule "sign" sums the per-term selections. "min_norm" replaces the
    selection of l1 terms acting through the identity, at zero coordinates, by the
    smallest element of the full subdifferential there.
    """

    def __init__(self, smooth_terms: Sequence[SmoothPair] = (),
                 reg_terms: Sequence[RegPair] = (), domain=None,
                 subgradient_rule: str = "sign"):
        if subgradient_rule not in SUBGRADIENT_RULES:
            raise ValueError(f"Unknown subgradient rule '{subgradient_rule}', "
                             f"expected one of {SUBGRADIENT_RULES}")
        self.subgradient_rule = subgradient_rule
        self.smooth_terms: Tuple[SmoothPair, ...] = tuple(smooth_terms)
        self.reg_terms: Tuple[RegPair, ...] = tuple(reg_terms)
        if not self.smooth_terms and not self.reg_terms:
            raise ValueError("A composite problem needs at least one term")

        operators = [op for _, op in self.smooth_terms + self.reg_terms]
        self.domain: Shape = as_shape(domain) if domain is not None else operators[0].domain
        for op in operators:
            if op.domain != self.domain:
                raise DimensionError(self.domain, op.domain, "operator domain")

    @property
    def n1(self) -> int:
        return len(self.smooth_terms)

    @property
    def n2(self) -> int:
        return len(self.reg_terms)

    def _check_point(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != self.domain.dims:
            raise DimensionError(self.domain, Shape.of(x), "oracle point")
        return x

    def _evaluate(self, x: np.ndarray, want_value: bool, want_subgradient: bool) -> OracleResult:
        x = self._check_point(x)
        forward = 0
        adjoint = 0
        value = 0.0
        subgradient = np.zeros(self.domain.dims) if want_subgradient else None

        # map every term once, check feasibility before any adjoint work
        mapped: List[np.ndarray] = []
        for _, op in self.smooth_terms:
            mapped.append(op.apply(x))
            forward += 1
        for reg, op in self.reg_terms:
            w = op.apply(x)
            forward += 1
            mapped.append(w)
            if not reg.is_feasible(w):
                return OracleResult(None, None, forward, adjoint, feasible=False)

        min_norm_lam = 0.0
        terms = [(f, op) for f, op in self.smooth_terms] + list(self.reg_terms)
        for (term, op), v in zip(terms, mapped):
            if want_value:
                value += term.value(v)
            if want_subgradient:
                if self._min_norm_term(term, op):
                    min_norm_lam += term.lam
                    adjoint += 1
                    continue
                slope = term.gradient(v) if isinstance(term, SmoothTerm) else term.subgradient(v)
                subgradient += op.adjoint(slope)
                adjoint += 1

        if want_subgradient and min_norm_lam > 0:
            subgradient = _min_norm_l1(x, subgradient, min_norm_lam)
        return OracleResult(value if want_value else None, subgradient, forward, adjoint)

    def _min_norm_term(self, term, op) -> bool:
        return (self.subgradient_rule == "min_norm" and isinstance(term, L1)
                and isinstance(op, IdentityMap))

    def nfo_fg(self, x: np.ndarray) -> OracleResult:
        """Function value and subgradient (NFO-FG)"""
        return self._evaluate(x, True, True)

    def nfo_f(self, x: np.ndarray) -> OracleResult:
        """Function value only (NFO-F); no adjoint applications"""
        return self._evaluate(x, True, False)

    def nfo_g(self, x: np.ndarray) -> OracleResult:
        """Subgradient only (NFO-G)"""
        return self._evaluate(x, False, True)

    def smooth_value_and_gradient(self, x: np.ndarray) -> Tuple[float, np.ndarray, int, int]:
        """Value and gradient of the smooth terms alone, with operator counts"""
        x = self._check_point(x)
        value = 0.0
        gradient = np.zeros(self.domain.dims)
        for f, op in self.smooth_terms:
            v = op.apply(x)
            value += f.value(v)
            gradient += op.adjoint(f.gradient(v))
        return value, gradient, self.n1, self.n1

    def __repr__(self) -> str:
        smooth = ", ".join(type(f).__name__ for f, _ in self.smooth_terms)
        regs = ", ".join(type(r).__name__ for r, _ in self.reg_terms)
        return f"CompositeProblem(smooth=[{smooth}], reg=[{regs}], domain={self.domain})"


def nfo_fg(problem: CompositeProblem, x: np.ndarray) -> OracleResult:
    return problem.nfo_fg(x)


def nfo_f(problem: CompositeProblem, x: np.ndarray) -> OracleResult:
    return problem.nfo_f(x)


def nfo_g(problem: CompositeProblem, x: np.ndarray) -> OracleResult:
    return problem.nfo_g(x)


# Problem builders


def least_squares_problem(A: LinearMap, y: np.ndarray,
                          regularizers: Sequence[Regularizer] = (),
                          subgradient_rule: str = "sign") -> CompositeProblem:
    """1/2 ||Ax - y||^2 plus regularizers acting on x directly"""
    identity = IdentityMap(A.domain)
    return CompositeProblem([(QuadraticLoss(y), A)], [(r, identity) for r in regularizers],
                            domain=A.domain, subgradient_rule=subgradient_rule)


def tikhonov_problem(A: LinearMap, y: np.ndarray, lam: float) -> CompositeProblem:
    return least_squares_problem(A, y, [L2Sq(lam)])


def lasso_problem(A: LinearMap, y: np.ndarray, lam: float,
                  subgradient_rule: str = "sign") -> CompositeProblem:
    return least_squares_problem(A, y, [L1(lam)], subgradient_rule)


def elastic_net_problem(A: LinearMap, b: np.ndarray, lam1: float, lam2: float,
                        W1: Optional[LinearMap] = None,
                        W2: Optional[LinearMap] = None,
                        subgradient_rule: str = "sign") -> CompositeProblem:
    """Scaled elastic net 1/2||Ax-b||^2 + lam1 ||W1 x||_1 + lam2/2 ||W2 x||^2"""
    W1 = W1 or IdentityMap(A.domain)
    W2 = W2 or IdentityMap(A.domain)
    return CompositeProblem([(QuadraticLoss(b), A)], [(L1(lam1), W1), (L2Sq(lam2), W2)],
                            domain=A.domain, subgradient_rule=subgradient_rule)


def tv_problem(A: LinearMap, Y: np.ndarray, lam: float, isotropic: bool = True) -> CompositeProblem:
    """1/2 ||A(X) - Y||_F^2 + lam TV(X) (analysis formulation)"""
    tv = ITV(lam) if isotropic else ATV(lam)
    return least_squares_problem(A, Y, [tv])

"""
Invariant suites run by the ``check`` command
"""

import logging
from typing import Callable, Dict, List, Tuple

import numpy as np
import pandas as pd
from scipy import optimize

from .core.linop import (
    Blur2DMap,
    DenseMap,
    DiagonalMap,
    IdentityMap,
    MaskMap,
    adjoint_consistency,
    compose,
    scale,
)
from .core.osga import OsgaParams, SolverState, osga_init, osga_step, pus_update
from .core.problems import elastic_net_problem, lasso_problem
from .core.proximal import chambolle_dual_energy, prox_tv_chambolle, tv_prox_objective
from .core.proxfun import QuadraticProx, default_prox

logger = logging.getLogger(__name__)

ADJOINT_TOLERANCE = 1e-10


def brute_force_subproblem(Q: QuadraticProx, gamma: float, h: np.ndarray,
                           starts: int = 8, seed: int = 0) -> Tuple[float, np.ndarray]:
    """
    Numerical maximizer of -(gamma + <h, z>) / Q(z) by multi-start BFGS

    The ratio is quasi-concave in z, so every local maximizer is global; several
    starts guard against flat regions far from the center.
    """
    rng = np.random.RandomState(seed)
    shape = Q.center.shape
    radius = 10.0 * np.linalg.norm(Q.center.ravel()) + 10.0

    def negative_ratio(z_flat):
        z = z_flat.reshape(shape)
        q = Q.value(z)
        linear = gamma + float(np.vdot(h, z))
        grad = (h * q - linear * Q.gradient(z)) / q ** 2
        return linear / q, grad.ravel()

    guesses = [Q.center.ravel(), (Q.center - h / (Q.sigma * max(1.0, np.abs(h).max()))).ravel()]
    guesses += [Q.center.ravel() + radius * rng.uniform(-1, 1, Q.center.size) / 4
                for _ in range(max(0, starts - 2))]
    best_value, best_z = np.inf, Q.center.copy()
    for z_start in guesses:
        res = optimize.minimize(negative_ratio, z_start, jac=True, method="BFGS",
                                options={"gtol": 1e-12, "maxiter": 2000})
        if res.fun < best_value:
            best_value, best_z = float(res.fun), res.x.reshape(shape)
    return -best_value, best_z


def _random_prox(rng: np.random.RandomState, n: int, weighted: bool) -> QuadraticProx:
    weights = rng.uniform(0.5, 2.0, n) if weighted else None
    return QuadraticProx(rng.uniform(0.1, 2.0), rng.uniform(0.5, 2.0),
                         rng.standard_normal(n), weights)


def check_adjoints(seed: int = 0) -> List[Dict]:
    rng = np.random.RandomState(seed)
    keep = rng.random_sample((7, 6)) < 0.6
    keep[0, 0] = True
    blur = Blur2DMap((7, 6), 2)
    operators = {
        "dense": DenseMap(rng.standard_normal((5, 8))),
        "identity": IdentityMap((4, 3)),
        "diagonal": DiagonalMap(rng.uniform(0.5, 2.0, 6)),
        "mask": MaskMap(keep),
        "blur2d_k1": Blur2DMap((8, 9), 1),
        "blur2d_k2": blur,
        "scaled": scale(-2.5, blur),
        "composition": compose(MaskMap(keep), blur),
    }
    return [
        {"check": f"adjoint_{name}", "value": adjoint_consistency(op, trials=10, seed=seed),
         "tolerance": ADJOINT_TOLERANCE}
        for name, op in operators.items()
    ]


def check_oracle_counts(seed: int = 0) -> List[Dict]:
    rng = np.random.RandomState(seed)
    A = DenseMap(rng.standard_normal((6, 4)))
    problem = elastic_net_problem(A, rng.standard_normal(6), 0.5, 0.3)
    x = rng.standard_normal(4)
    expected = problem.n1 + problem.n2
    rows = []
    for name, result, adjoints in (("nfo_fg", problem.nfo_fg(x), expected),
                                   ("nfo_f", problem.nfo_f(x), 0),
                                   ("nfo_g", problem.nfo_g(x), expected)):
        defect = abs(result.forward_ops - expected) + abs(result.adjoint_ops - adjoints)
        rows.append({"check": f"operator_counts_{name}", "value": float(defect),
                     "tolerance": 0.0})
    return rows


def check_subproblem(trials: int = 20, seed: int = 0) -> List[Dict]:
    rng = np.random.RandomState(seed)
    worst_e = 0.0
    worst_u = 0.0
    for trial in range(trials):
        Q = _random_prox(rng, 5, weighted=bool(trial % 2))
        gamma = rng.standard_normal()
        h = rng.standard_normal(5)
        solution = Q.solve_subproblem(gamma, h)
        e_ref, u_ref = brute_force_subproblem(Q, gamma, h, seed=trial)
        worst_e = max(worst_e, abs(solution.e - e_ref) / max(1.0, abs(e_ref)))
        worst_u = max(worst_u, np.abs(solution.u - u_ref).max() / max(1.0, np.abs(u_ref).max()))
    return [{"check": "subproblem_e_vs_brute_force", "value": worst_e, "tolerance": 1e-5},
            {"check": "subproblem_u_vs_brute_force", "value": worst_u, "tolerance": 1e-4}]


def check_pus(seed: int = 0) -> List[Dict]:
    params = OsgaParams()
    h = np.ones(3)
    state = SolverState(x_b=np.zeros(3), psi_b=1.0, h=h, gamma=0.0, eta=1.0,
                        u=np.zeros(3), alpha=0.5)
    # no progress: R = 0 shrinks alpha and keeps eta
    stalled = pus_update(state, 1.0, h, 0.0, np.zeros(3), params)
    # full progress: alpha grows but never past alpha_max
    improved = pus_update(state, 0.0, h, 0.0, np.zeros(3), params)
    return [
        {"check": "pus_shrink_on_stall",
         "value": abs(stalled.alpha - 0.5 * np.exp(-params.kappa)) + abs(stalled.eta - 1.0),
         "tolerance": 1e-15},
        {"check": "pus_alpha_capped",
         "value": max(0.0, improved.alpha - params.alpha_max) + abs(improved.eta),
         "tolerance": 0.0},
    ]


def step_image(size: int = 8) -> np.ndarray:
    """Bright lower-right block on a dark background with a smooth ripple"""
    rows, cols = np.mgrid[0:size, 0:size]
    block = ((rows >= size // 2) & (cols >= size // 2)).astype(float)
    return block + 0.1 * np.sin(rows + 2.0 * cols)


def check_chambolle(seed: int = 0) -> List[Dict]:
    rng = np.random.RandomState(seed)
    Y = rng.random_sample((8, 8))
    energies = []
    for chit in range(1, 21):
        _, (px, py) = prox_tv_chambolle(Y, 0.2, chit, return_dual=True)
        energies.append(chambolle_dual_energy(Y, 0.2, px, py))
    increase = max(0.0, float(np.max(np.diff(energies))))
    image = step_image(8)
    primal = [tv_prox_objective(prox_tv_chambolle(image, 0.2, chit), image, 0.2)
              for chit in range(1, 41)]
    primal_increase = max(0.0, float(np.max(np.diff(primal))))
    return [{"check": "chambolle_dual_energy_monotone", "value": increase, "tolerance": 1e-12},
            {"check": "chambolle_primal_monotone", "value": primal_increase, "tolerance": 1e-12}]


def check_osga_monotone(seed: int = 0, iterations: int = 200) -> List[Dict]:
    rng = np.random.RandomState(seed)
    A = DenseMap(rng.standard_normal((15, 25)))
    problem = lasso_problem(A, rng.standard_normal(15), 0.5)
    x0 = rng.standard_normal(25)
    params = OsgaParams()
    Q = default_prox(x0)
    state = osga_init(problem, Q, params, x0)
    psi_increase = eta_increase = 0.0
    for _ in range(iterations):
        nxt = osga_step(state, problem, Q, params)
        psi_increase = max(psi_increase, nxt.psi_b - state.psi_b)
        eta_increase = max(eta_increase, nxt.eta - state.eta)
        state = nxt
    return [{"check": "osga_best_value_monotone", "value": psi_increase, "tolerance": 0.0},
            {"check": "osga_eta_monotone", "value": eta_increase, "tolerance": 0.0}]


SUITES: Dict[str, Callable[[int], List[Dict]]] = {
    "adjoint": check_adjoints,
    "oracle": check_oracle_counts,
    "subproblem": check_subproblem,
    "pus": check_pus,
    "chambolle": check_chambolle,
    "osga": check_osga_monotone,
}


def run_invariant_checks(seed: int = 0) -> pd.DataFrame:
    """Run every suite; one row per check with its measured defect and tolerance"""
    rows = []
    for suite, check in SUITES.items():
        for row in check(seed):
            rows.append({"suite": suite, **row})
            logger.debug(f"{row['check']}: {row['value']:.3g} (tolerance {row['tolerance']:g})")
    table = pd.DataFrame(rows, columns=["suite", "check", "value", "tolerance"])
    table["passed"] = table["value"] <= table["tolerance"]
    logger.info(f"Invariant checks: {int(table['passed'].sum())}/{len(table)} passed")
    return table

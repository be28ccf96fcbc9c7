"""
Core solvers and problem algebra for OSGAFlow
"""

from .base_solver import BaseSolver, SolveResult, Termination
from .baselines import (
    FISTASolver,
    NES83Solver,
    NSDSGSolver,
    PGASolver,
    fista_solve,
    initial_step_estimate,
    nes83_solve,
    nsdsg_solve,
    pga_solve,
)
from .linop import (
    Blur2DMap,
    CompositionMap,
    DenseMap,
    DiagonalMap,
    IdentityMap,
    LinearMap,
    MaskMap,
    ScaledMap,
    Shape,
    adjoint_consistency,
    compose,
    scale,
)
from .osga import OSGASolver, OsgaParams, SolverState, osga_init, osga_solve, osga_step, pus_update
from .problems import (
    ATV,
    ITV,
    L1,
    L2Sq,
    CompositeProblem,
    Indicator,
    OracleResult,
    QuadraticLoss,
    ScaledL2Sq,
    elastic_net_problem,
    lasso_problem,
    least_squares_problem,
    nfo_f,
    nfo_fg,
    nfo_g,
    tikhonov_problem,
    tv_problem,
)
from .proximal import (
    ProxOperator,
    StepConfig,
    lipschitz_column_bound,
    operator_norm_squared,
    prox_l2sq,
    prox_soft_threshold,
    prox_tv_chambolle,
    prox_tv_fgp,
    tv_prox_objective,
)
from .proxfun import QuadraticProx, SubproblemSolution, default_prox, solve_subproblem

__all__ = [
    "BaseSolver", "SolveResult", "Termination",
    "FISTASolver", "NES83Solver", "NSDSGSolver", "PGASolver",
    "fista_solve", "initial_step_estimate", "nes83_solve", "nsdsg_solve", "pga_solve",
    "Blur2DMap", "CompositionMap", "DenseMap", "DiagonalMap", "IdentityMap", "LinearMap",
    "MaskMap", "ScaledMap", "Shape", "adjoint_consistency", "compose", "scale",
    "OSGASolver", "OsgaParams", "SolverState", "osga_init", "osga_solve", "osga_step",
    "pus_update",
    "ATV", "ITV", "L1", "L2Sq", "CompositeProblem", "Indicator", "OracleResult",
    "QuadraticLoss", "ScaledL2Sq", "elastic_net_problem", "lasso_problem",
    "least_squares_problem", "nfo_f", "nfo_fg", "nfo_g", "tikhonov_problem", "tv_problem",
    "ProxOperator", "StepConfig", "lipschitz_column_bound", "operator_norm_squared",
    "prox_l2sq", "prox_soft_threshold", "prox_tv_chambolle", "prox_tv_fgp",
    "tv_prox_objective",
    "QuadraticProx", "SubproblemSolution", "default_prox", "solve_subproblem",
]

"""
Benchmark harness: runs every configured solver on every generated instance
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
import yaml
from tqdm import tqdm

from .config import RANDOM_SYSTEM_FAMILIES, ExperimentConfig
from .core.base_solver import BaseSolver, SolveResult, Termination
from .core.baselines import FISTASolver, NES83Solver, NSDSGSolver, PGASolver
from .core.osga import OSGASolver, OsgaParams
from .core.proximal import (
    ProxOperator,
    StepConfig,
    lipschitz_column_bound,
    operator_norm_squared,
)
from .core.proxfun import default_prox, distance_q0
from .exceptions import ConfigError, OsgaFlowError, ProfileError
from .instances import ProblemInstance, build_instance
from .metrics import (
    TraceRecord,
    metric_isnr,
    metric_mse,
    metric_psnr,
    performance_profile,
    relative_point_error,
    relative_value_error,
    support_recovery,
    traces_to_frame,
)

logger = logging.getLogger(__name__)

COLUMN_BOUND_FAMILIES = RANDOM_SYSTEM_FAMILIES + ("spike_recovery",)

SUMMARY_COLUMNS = [
    "family", "instance", "solver", "status", "reason", "iterations",
    "final_objective", "best_objective", "isnr", "psnr", "mse", "support",
    "seconds", "fwd_ops", "adj_ops", "reference_objective", "reference_provenance", "error",
]
FLOAT_FORMAT = "%.17g"
RUN_ERRORS = (OsgaFlowError, FloatingPointError, ValueError, np.linalg.LinAlgError)


@dataclass
class SolverRun:
    """A finished (or failed) solver run with the points its trace rows describe"""

    solver: str
    result: Optional[SolveResult] = None
    points: List[np.ndarray] = field(default_factory=list)
    rows: List[Dict[str, Any]] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.result is not None


@dataclass
class ExperimentResult:
    """Tables and files produced by one experiment"""

    config: ExperimentConfig
    summary: pd.DataFrame
    profile: Optional[pd.DataFrame]
    trace_files: List[Path]
    out_dir: Optional[Path]

    @property
    def failures(self) -> int:
        return int((self.summary["status"] != "ok").sum())


class BenchmarkRunner:
    """
    Orchestrates instance generation, solver runs, reference optima and CSV output
    """

    def __init__(self, config: ExperimentConfig, out_dir: Optional[Union[str, Path]] = None,
                 progress: bool = False):
        """
        Initialize the runner

        Args:
            config: Validated experiment configuration
            out_dir: Directory for CSV output; nothing is written when None
            progress: Show a tqdm progress bar over the runs
        """
        self.config = config.validate()
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.progress = progress
        self.termination = self._termination(1)

    def _termination(self, factor: int) -> Termination:
        config = self.config
        max_iterations = None if config.max_iterations is None else config.max_iterations * factor
        max_seconds = config.max_seconds if config.record_wall_time else None
        if max_seconds is not None:
            max_seconds *= factor
        try:
            return Termination(max_iterations=max_iterations, max_seconds=max_seconds,
                               eta_tolerance=config.eta_tolerance)
        except ValueError as e:
            raise ConfigError(f"No usable termination criterion: {e}") from e

    def lipschitz_constant(self, instance: ProblemInstance) -> float:
        """Step constant for PGA/FISTA: scaled L-hat on dense operators, ||A||^2 otherwise"""
        if self.config.family in COLUMN_BOUND_FAMILIES:
            base = lipschitz_column_bound(instance.A)
        else:
            base = operator_norm_squared(instance.A, seed=instance.seed)
        return self.config.resolved_lipschitz_scale() * base

    def q0_estimate(self, instance: ProblemInstance) -> Optional[float]:
        """
        Q0 from the configured rule; None selects the norm rule 1/2||x0|| + eps

        "distance" centers on the ground truth, "backprojection" on A* applied to the
        observation.
        """
        rule = self.config.q0_rule
        if rule == "backprojection":
            return distance_q0(instance.x0, instance.A.adjoint(instance.observed))
        if rule == "distance":
            if instance.x_true is not None:
                return distance_q0(instance.x0, instance.x_true)
            logger.warning(f"{instance.name}: no estimate for the distance rule, "
                           f"using the norm rule for Q0")
        return None

    def make_solver(self, name: str, instance: ProblemInstance) -> BaseSolver:
        config = self.config
        problem = instance.problem
        if name == "osga":
            q0 = config.q0 if config.q0 is not None else self.q0_estimate(instance)
            params = OsgaParams(delta=config.delta, alpha_max=config.alpha_max,
                                kappa=config.kappa, kappa_prime=config.kappa_prime, mu=config.mu)
            return OSGASolver(problem, default_prox(instance.x0, q0=q0), params,
                              log_every=config.log_every)
        if name == "nsdsg":
            return NSDSGSolver(problem, StepConfig.diminishing(config.resolved_nsdsg_alpha0()),
                               log_every=config.log_every)
        if name in ("pga", "fista"):
            prox = ProxOperator.from_problem(problem, config.chit, config.tv_prox)
            step = StepConfig.lipschitz(self.lipschitz_constant(instance))
            cls = PGASolver if name == "pga" else FISTASolver
            return cls(problem, prox, step, log_every=config.log_every)
        if name == "nes83":
            return NES83Solver(problem, StepConfig.backtracking(config.nes83_rho),
                               random_state=instance.seed, log_every=config.log_every)
        raise ConfigError(f"Unknown solver '{name}'")

    def execute(self, name: str, instance: ProblemInstance,
                termination: Optional[Termination] = None) -> SolverRun:
        """Run one solver; errors are captured in the returned record"""
        run = SolverRun(name)

        def sink(row: Dict[str, Any], point: np.ndarray) -> None:
            run.rows.append(dict(row))
            run.points.append(np.array(point, copy=True))

        try:
            solver = self.make_solver(name, instance)
            run.result = solver.run(instance.x0, termination or self.termination, sink)
        except RUN_ERRORS as e:
            run.error = f"{type(e).__name__}: {e}"
            logger.error(f"{instance.name}/{name} failed: {run.error}")
        return run

    def reference_optimum(self, instance: ProblemInstance,
                          runs: Dict[str, SolverRun]) -> Tuple[Optional[np.ndarray], float, str]:
        """
        Reference Psi* from the best solver rerun with an extended budget

        Returns:
            (x_ref, f_ref, provenance); x_ref is None when every run failed
        """
        succeeded = sorted((r.result.f_best, name) for name, r in runs.items() if r.ok)
        if not succeeded:
            return None, float("nan"), "none"
        _, best_name = succeeded[0]
        factor = self.config.reference_factor
        extended = self.execute(best_name, instance, self._termination(factor))

        # (value, rank, provenance, point); the extended run wins ties
        candidates = [(r.result.f_best, 1, f"{name} run", r.result.x_best)
                      for name, r in sorted(runs.items()) if r.ok]
        if extended.ok:
            label = f"{best_name} x{factor} ({extended.result.iterations} iterations)"
            candidates.append((extended.result.f_best, 0, label, extended.result.x_best))
        f_ref, _, provenance, x_ref = min(candidates, key=lambda c: c[:3])
        return x_ref, f_ref, provenance

    def trace_records(self, instance: ProblemInstance, run: SolverRun,
                      x_ref: Optional[np.ndarray], f_ref: float) -> List[TraceRecord]:
        records = []
        f0 = run.rows[0]["objective"] if run.rows else float("nan")
        imaging = instance.degraded is not None
        for row, x in zip(run.rows, run.points):
            record = TraceRecord(
                iteration=int(row["iteration"]),
                seconds=float(row["seconds"]) if self.config.record_wall_time else 0.0,
                objective=float(row["objective"]),
                fwd_ops=int(row["fwd_ops"]),
                adj_ops=int(row["adj_ops"]),
            )
            if x_ref is not None:
                record.rel1 = relative_point_error(x, x_ref)
                record.rel2 = relative_value_error(record.objective, f_ref, f0)
            if instance.x_true is not None:
                record.mse = metric_mse(x, instance.x_true)
                if imaging:
                    record.isnr = metric_isnr(x, instance.degraded, instance.x_true)
                    record.psnr = metric_psnr(x, instance.x_true)
            records.append(record)
        return records

    def summary_row(self, instance: ProblemInstance, run: SolverRun, f_ref: float,
                    provenance: str) -> Dict[str, Any]:
        row: Dict[str, Any] = dict.fromkeys(SUMMARY_COLUMNS, float("nan"))
        row.update(family=instance.family, instance=instance.index, solver=run.solver,
                   reference_objective=f_ref, reference_provenance=provenance, error="")
        if not run.ok:
            row.update(status="failed", reason="error", iterations=len(run.rows) - 1 if run.rows else 0,
                       error=run.error, seconds=0.0, fwd_ops=0, adj_ops=0)
            return row

        result = run.result
        row.update(status="ok", reason=result.reason, iterations=result.iterations,
                   final_objective=result.f_last, best_objective=result.f_best,
                   seconds=result.seconds if self.config.record_wall_time else 0.0,
                   fwd_ops=result.forward_ops, adj_ops=result.adjoint_ops)
        x_true = instance.x_true
        if x_true is not None:
            row["mse"] = metric_mse(result.x_best, x_true)
            if instance.degraded is not None:
                row["isnr"] = metric_isnr(result.x_best, instance.degraded, x_true)
                row["psnr"] = metric_psnr(result.x_best, x_true)
            if instance.family == "spike_recovery":
                row["support"] = support_recovery(result.x_best, x_true)
        return row

    def _write_trace(self, instance: ProblemInstance, solver: str,
                     records: List[TraceRecord]) -> Path:
        path = self.out_dir / f"trace_{instance.family}_{instance.index:02d}_{solver}.csv"
        traces_to_frame(records).to_csv(path, index=False, float_format=FLOAT_FORMAT,
                                         na_rep="nan")
        return path

    def run(self) -> ExperimentResult:
        """Run the full experiment and write its CSV bundle"""
        config = self.config
        solvers = sorted(config.solvers)
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            with open(self.out_dir / "config.yaml", "w") as f:
                yaml.safe_dump(config.to_dict(), f, sort_keys=True)

        logger.info(f"Running {config.family}: {config.instances} instance(s), "
                    f"solvers {', '.join(solvers)}")
        start = time.perf_counter()
        summary_rows: List[Dict[str, Any]] = []
        trace_files: List[Path] = []
        bar = tqdm(total=config.instances * len(solvers), desc=config.family,
                   disable=not self.progress)

        for index in range(config.instances):
            instance = build_instance(config, index)
            runs: Dict[str, SolverRun] = {}
            for name in solvers:
                bar.set_postfix_str(f"{instance.name}/{name}")
                runs[name] = self.execute(name, instance)
                bar.update(1)

            x_ref, f_ref, provenance = self.reference_optimum(instance, runs)
            logger.info(f"{instance.name}: reference objective {f_ref:.10g} ({provenance})")
            for name in solvers:
                run = runs[name]
                if run.rows and self.out_dir is not None:
                    records = self.trace_records(instance, run, x_ref, f_ref)
                    trace_files.append(self._write_trace(instance, name, records))
                summary_rows.append(self.summary_row(instance, run, f_ref, provenance))
        bar.close()

        summary = pd.DataFrame(summary_rows, columns=SUMMARY_COLUMNS)
        profile = summary_profile(summary)
        if self.out_dir is not None:
            summary.to_csv(self.out_dir / "summary.csv", index=False,
                           float_format=FLOAT_FORMAT, na_rep="nan")
            if profile is not None:
                profile.to_csv(self.out_dir / "profile.csv", float_format=FLOAT_FORMAT)

        result = ExperimentResult(config, summary, profile, trace_files, self.out_dir)
        logger.info(f"Finished {config.family} in {time.perf_counter() - start:.1f}s, "
                    f"{result.failures} failed run(s)")
        return result


def summary_profile(summary: pd.DataFrame, metric: str = "best_objective",
                    tau_grid=None) -> Optional[pd.DataFrame]:
    """Performance profile over (family, instance) problems; failed runs count as +inf"""
    if summary.empty:
        return None
    values = summary[metric].where(summary["status"] == "ok", np.inf).astype(float)
    table = (summary.assign(_metric=values.fillna(np.inf))
             .pivot_table(index=["family", "instance"], columns="solver", values="_metric",
                          aggfunc="min"))
    table = table.reindex(sorted(table.columns), axis=1)
    try:
        return performance_profile(table, tau_grid)
    except ProfileError as e:
        logger.warning(f"No performance profile: {e}")
        return None


def run_experiment(config: ExperimentConfig, out_dir: Optional[Union[str, Path]] = None,
                   progress: bool = False) -> ExperimentResult:
    """Run every configured solver on every instance and write traces, summary and profile"""
    return BenchmarkRunner(config, out_dir, progress).run()

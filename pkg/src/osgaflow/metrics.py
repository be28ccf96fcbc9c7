"""
Reconstruction metrics, trace records and performance profiles
"""

from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from .exceptions import DimensionError, ProfileError

TRACE_COLUMNS = ["iteration", "seconds", "objective", "rel1", "rel2", "isnr", "psnr", "mse",
                 "fwd_ops", "adj_ops"]

PSNR_PEAKS = {"unit": 1.0, "byte": 255.0}


def _same_shape(a: np.ndarray, b: np.ndarray, what: str):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(a.shape, b.shape, what)
    return a, b


def _norm(v: np.ndarray) -> float:
    return float(np.linalg.norm(v.ravel()))


def metric_isnr(X: np.ndarray, Y: np.ndarray, X0: np.ndarray) -> float:
    """Improvement in SNR of the reconstruction X over the observation Y, in dB"""
    X, X0 = _same_shape(X, X0, "ISNR")
    Y, _ = _same_shape(Y, X0, "ISNR")
    error = _norm(X - X0)
    if error == 0.0:
        return float("inf")
    return 20.0 * np.log10(_norm(Y - X0) / error)


def metric_psnr(X: np.ndarray, X0: np.ndarray, scale: str = "unit") -> float:
    """Peak SNR in dB; +inf for an exact reconstruction"""
    if scale not in PSNR_PEAKS:
        raise ValueError(f"scale must be one of {list(PSNR_PEAKS)}, got '{scale}'")
    X, X0 = _same_shape(X, X0, "PSNR")
    error = _norm(X - X0)
    if error == 0.0:
        return float("inf")
    return 20.0 * np.log10(PSNR_PEAKS[scale] * np.sqrt(X0.size) / error)


def metric_mse(x: np.ndarray, x0: np.ndarray) -> float:
    x, x0 = _same_shape(x, x0, "MSE")
    d = (x - x0).ravel()
    return float(np.dot(d, d) / d.size)


def relative_point_error(x: np.ndarray, x_star: np.ndarray) -> float:
    """||x - x*|| / ||x*||"""
    x, x_star = _same_shape(x, x_star, "relative error")
    scale = _norm(x_star)
    if scale == 0.0:
        return _norm(x)
    return _norm(x - x_star) / scale


def relative_value_error(f: float, f_star: float, f0: float) -> float:
    """(f - f*) / (f0 - f*); zero when the start is already optimal"""
    if f0 == f_star:
        return 0.0
    return (f - f_star) / (f0 - f_star)


def support_recovery(x: np.ndarray, x_true: np.ndarray, threshold: float = 0.5) -> float:
    """Fraction of the true support where |x| reaches the threshold"""
    x, x_true = _same_shape(x, x_true, "support recovery")
    support = x_true != 0
    if not support.any():
        return 1.0
    return float(np.mean(np.abs(x[support]) >= threshold))


@dataclass
class TraceRecord:
    """One row of a trace file"""

    iteration: int
    seconds: float
    objective: float
    rel1: float = float("nan")
    rel2: float = float("nan")
    isnr: float = float("nan")
    psnr: float = float("nan")
    mse: float = float("nan")
    fwd_ops: int = 0
    adj_ops: int = 0

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def traces_to_frame(records: Sequence[TraceRecord]) -> pd.DataFrame:
    """Trace records in the fixed CSV column order"""
    return pd.DataFrame([r.to_dict() for r in records], columns=TRACE_COLUMNS)


def default_tau_grid(points: int = 50, tau_max: float = 10.0) -> np.ndarray:
    return np.unique(np.concatenate([[1.0], np.geomspace(1.0, tau_max, points)]))


def performance_profile(table: pd.DataFrame,
                        tau_grid: Optional[Sequence[float]] = None) -> pd.DataFrame:
    """
    Dolan-More performance profiles

    Args:
        table: Metric per problem (rows) and solver (columns), smaller is better;
            failed runs are +inf
        tau_grid: Ratios at which the curves are evaluated (default 1..10)

    Returns:
        DataFrame indexed by tau with one column per solver holding rho_s(tau)
    """
    if table is None or table.size == 0:
        raise ProfileError("Performance profile needs at least one problem and one solver")
    values = table.to_numpy(dtype=float)
    if np.isnan(values).any():
        raise ProfileError("Performance profile table contains NaN; encode failures as +inf")
    if (values <= 0).any():
        raise ProfileError("Performance profile metrics must be positive")

    taus = np.asarray(default_tau_grid() if tau_grid is None else tau_grid, dtype=float)
    best = values.min(axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        ratios = np.where(np.isfinite(values), values / best, np.inf)
    n_problems = values.shape[0]
    curves = {
        solver: [float(np.sum(ratios[:, j] <= tau)) / n_problems for tau in taus]
        for j, solver in enumerate(table.columns)
    }
    profile = pd.DataFrame(curves, index=pd.Index(taus, name="tau"))
    return profile

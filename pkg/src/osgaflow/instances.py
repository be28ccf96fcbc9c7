"""
Problem instance generators for the experiment families
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from PIL import Image
from scipy import linalg

from .config import ExperimentConfig
from .core.linop import Blur2DMap, DenseMap, IdentityMap, LinearMap, MaskMap
from .core.problems import (
    CompositeProblem,
    elastic_net_problem,
    lasso_problem,
    tikhonov_problem,
    tv_problem,
)

logger = logging.getLogger(__name__)


def gen_random_system(m: int, n: int, density: str = "dense", seed: int = 0,
                      p: float = 0.05) -> Tuple[DenseMap, np.ndarray, np.ndarray]:
    """
    Random linear system in the style of rand / sprand

    Dense entries are uniform on [0, 1); sparse entries are nonzero with probability p,
    with uniform values. The right-hand side y and start x0 follow the same pattern.

    Returns:
        (A, y, x0)
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    if density not in ("dense", "sparse"):
        raise ValueError(f"density must be 'dense' or 'sparse', got '{density}'")
    rng = np.random.RandomState(seed)

    def draw(shape):
        values = rng.random_sample(shape)
        if density == "sparse":
            values = values * (rng.random_sample(shape) < p)
        return values

    A = draw((m, n))
    y = draw(m)
    x0 = draw(n)
    return DenseMap(A), y, x0


def gen_spike_signal(n: int, k: int, seed: int = 0) -> np.ndarray:
    """Vector with exactly k entries of +-1 at uniformly chosen positions"""
    if k < 0 or k > n:
        raise ValueError(f"Need 0 <= k <= n, got k={k}, n={n}")
    rng = np.random.RandomState(seed)
    x = np.zeros(n)
    positions = rng.choice(n, size=k, replace=False)
    x[positions] = np.where(rng.random_sample(k) < 0.5, -1.0, 1.0)
    return x


def gen_sensing_matrix(m: int, n: int, seed: int = 0) -> DenseMap:
    """Standard Gaussian m x n matrix with orthonormalized rows"""
    if m > n:
        raise ValueError(f"Rows can only be orthonormal when m <= n, got m={m}, n={n}")
    rng = np.random.RandomState(seed)
    G = rng.standard_normal((m, n))
    Q, _ = linalg.qr(G.T, mode="economic")
    return DenseMap(Q.T)


def add_noise(y_clean: np.ndarray, snr_db: Optional[float] = None,
              variance: Optional[float] = None, seed: int = 0) -> np.ndarray:
    """
    Additive white Gaussian noise at a given SNR (dB) or with a given variance

    Signal power is the mean square of y_clean. An infinite SNR or a zero variance
    returns an unchanged copy.
    """
    if snr_db is not None and variance is not None:
        raise ValueError("Give either snr_db or variance, not both")
    y_clean = np.asarray(y_clean, dtype=float)
    if snr_db is not None:
        if np.isinf(snr_db):
            return y_clean.copy()
        signal_power = float(np.mean(y_clean ** 2))
        variance = signal_power / 10.0 ** (snr_db / 10.0)
    if variance is None or variance == 0:
        return y_clean.copy()
    if variance < 0:
        raise ValueError("Noise variance must be nonnegative")
    rng = np.random.RandomState(seed)
    return y_clean + np.sqrt(variance) * rng.standard_normal(y_clean.shape)


# (intensity, semi-axis x, semi-axis y, center x, center y, rotation in degrees)
SHEPP_LOGAN_ELLIPSES = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
)


def make_phantom(size: int = 64) -> np.ndarray:
    """Modified Shepp-Logan head phantom on [-1, 1]^2 with values in [0, 1]"""
    if size < 8:
        raise ValueError("Phantom size must be >= 8")
    grid = np.arange(size) * (2.0 / (size - 1.0))
    y = (1.0 - grid)[:, None]
    x = (grid - 1.0)[None, :]
    image = np.zeros((size, size))
    for intensity, a, b, x0, y0, angle in SHEPP_LOGAN_ELLIPSES:
        theta = np.deg2rad(angle)
        dx, dy = x - x0, y - y0
        xr = dx * np.cos(theta) + dy * np.sin(theta)
        yr = -dx * np.sin(theta) + dy * np.cos(theta)
        image[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += intensity
    return np.clip(image, 0.0, 1.0)


def read_image(path: Union[str, Path]) -> np.ndarray:
    """Read a grayscale image (PGM, PNG, ...) scaled to [0, 1]; color images are converted"""
    try:
        with Image.open(path) as img:
            if img.mode.startswith("I"):
                return np.asarray(img, dtype=float) / 65535.0
            return np.asarray(img.convert("L"), dtype=float) / 255.0
    except (OSError, Image.DecompressionBombError) as e:
        raise ValueError(f"Cannot read image {path}: {e}") from e


def write_image(path: Union[str, Path], image: np.ndarray) -> None:
    """Write an image with values in [0, 1] as 8-bit grayscale; the suffix picks the format"""
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ValueError("Grayscale images are 2-D")
    pixels = np.rint(np.clip(image, 0.0, 1.0) * 255).astype(np.uint8)
    Image.fromarray(pixels, mode="L").save(path)


def inpainting_mask(shape: Tuple[int, int], missing_fraction: float = 0.4,
                    seed: int = 0) -> np.ndarray:
    """Boolean keep-pattern dropping a uniform random fraction of the pixels"""
    if not 0.0 <= missing_fraction < 1.0:
        raise ValueError("missing_fraction must lie in [0, 1)")
    total = int(np.prod(shape))
    rng = np.random.RandomState(seed)
    dropped = rng.choice(total, size=int(round(missing_fraction * total)), replace=False)
    keep = np.ones(total, dtype=bool)
    keep[dropped] = False
    return keep.reshape(shape)


@dataclass
class ProblemInstance:
    """Generated problem with its starting point and ground truth"""

    family: str
    index: int
    seed: int
    problem: CompositeProblem
    A: LinearMap
    observed: np.ndarray
    x0: np.ndarray
    lam: float
    x_true: Optional[np.ndarray] = None
    degraded: Optional[np.ndarray] = None  # observation mapped to the image domain
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def name(self) -> str:
        return f"{self.family}_{self.index:02d}"


def _random_system_instance(config: ExperimentConfig, index: int, seed: int) -> ProblemInstance:
    A, y, x0 = gen_random_system(config.m, config.n, config.density, seed, config.sparse_p)
    lam = config.lam
    if config.lam_factor is not None:
        lam = config.lam_factor * float(np.max(np.abs(A.adjoint(y))))
    if config.family == "tikhonov":
        problem = tikhonov_problem(A, y, lam)
    elif config.family == "lasso":
        problem = lasso_problem(A, y, lam, config.subgradient_rule)
    else:
        problem = elastic_net_problem(A, y, lam, config.lam2,
                                      subgradient_rule=config.subgradient_rule)
    return ProblemInstance(config.family, index, seed, problem, A, y, x0, lam,
                           metadata={"density": config.density})


def _spike_instance(config: ExperimentConfig, index: int, seed: int) -> ProblemInstance:
    A = gen_sensing_matrix(config.m, config.n, seed)
    x_true = gen_spike_signal(config.n, config.spikes, seed + 1)
    y = add_noise(A.apply(x_true), config.noise_snr_db, config.noise_variance, seed + 2)
    factor = 0.1 if config.lam_factor is None else config.lam_factor
    lam = factor * float(np.max(np.abs(A.adjoint(y))))
    problem = lasso_problem(A, y, lam, config.subgradient_rule)
    return ProblemInstance(config.family, index, seed, problem, A, y, np.zeros(config.n), lam,
                           x_true=x_true, metadata={"lam_factor": factor})


def _imaging_instance(config: ExperimentConfig, index: int, seed: int) -> ProblemInstance:
    if config.image_path is not None:
        image = read_image(config.image_path)
    else:
        image = make_phantom(config.image_size)
    shape = image.shape

    if config.family == "tv_denoise":
        A: LinearMap = IdentityMap(shape)
    elif config.family == "tv_inpaint":
        A = MaskMap(inpainting_mask(shape, config.missing_fraction, seed))
    else:
        A = Blur2DMap(shape, config.blur_half_width)

    observed = add_noise(A.apply(image), config.noise_snr_db, config.noise_variance, seed + 1)
    degraded = A.adjoint(observed) if config.family == "tv_inpaint" else observed
    problem = tv_problem(A, observed, config.lam, isotropic=config.isotropic)
    return ProblemInstance(config.family, index, seed, problem, A, observed, degraded.copy(),
                           config.lam, x_true=image, degraded=degraded,
                           metadata={"image": config.image_path or "phantom"})


def build_instance(config: ExperimentConfig, index: int = 0) -> ProblemInstance:
    """Generate instance number index of the configured family"""
    seed = config.seed + 1000 * index
    if config.family in ("tikhonov", "lasso", "elastic_net"):
        instance = _random_system_instance(config, index, seed)
    elif config.family == "spike_recovery":
        instance = _spike_instance(config, index, seed)
    else:
        instance = _imaging_instance(config, index, seed)
    logger.debug(f"Built {instance.name}: {instance.problem!r}, lam={instance.lam:.6g}")
    return instance

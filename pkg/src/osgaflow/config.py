"""
Configuration classes for the experiment families
"""

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

from .exceptions import ConfigError

FAMILIES = ("tikhonov", "lasso", "elastic_net", "tv_denoise", "tv_inpaint", "tv_deblur",
            "spike_recovery")
SOLVERS = ("osga", "nsdsg", "pga", "fista", "nes83")
RANDOM_SYSTEM_FAMILIES = ("tikhonov", "lasso", "elastic_net")
IMAGING_FAMILIES = ("tv_denoise", "tv_inpaint", "tv_deblur")
Q0_RULES = ("norm", "distance", "backprojection")
SUBGRADIENT_RULES = ("sign", "min_norm")
TV_PROX_SOLVERS = ("fgp", "chambolle")


@dataclass
class ExperimentConfig:
    """Base configuration class for experiment parameters"""

    family: str = "lasso"
    instances: int = 1
    seed: int = 42

    # Random linear systems (m x n) and spike recovery
    m: int = 500
    n: int = 1000
    density: str = "dense"  # "dense" or "sparse"
    sparse_p: float = 0.05
    spikes: int = 30

    # Regularization
    lam: float = 1.0
    lam2: float = 0.0
    lam_factor: Optional[float] = None  # lam = lam_factor * ||A* y||_inf when set
    isotropic: bool = True
    subgradient_rule: str = "sign"  # "sign" or "min_norm" at l1 kinks

    # Images
    image_size: int = 64
    image_path: Optional[str] = None
    missing_fraction: float = 0.4
    blur_half_width: int = 4

    # Noise: SNR in dB or a fixed variance, never both
    noise_snr_db: Optional[float] = None
    noise_variance: Optional[float] = None

    # Solvers and termination
    solvers: List[str] = field(default_factory=lambda: list(SOLVERS))
    max_iterations: Optional[int] = 500
    max_seconds: Optional[float] = None
    eta_tolerance: Optional[float] = None
    reference_factor: int = 10
    record_wall_time: bool = True
    log_every: int = 100

    # OSGA
    delta: float = 0.9
    alpha_max: float = 0.7
    kappa: float = 0.5
    kappa_prime: float = 0.5
    mu: float = 0.0
    q0_rule: str = "norm"  # "norm", "distance" or "backprojection"
    q0: Optional[float] = None

    # Baselines
    nsdsg_alpha0: Optional[float] = None
    lipschitz_scale: Optional[float] = None
    nes83_rho: float = 0.5
    chit: int = 10
    tv_prox: str = "fgp"  # "fgp" or "chambolle"

    def resolved_nsdsg_alpha0(self) -> float:
        if self.nsdsg_alpha0 is not None:
            return self.nsdsg_alpha0
        return 1e-4 if self.density == "sparse" else 1e-7

    def resolved_lipschitz_scale(self) -> float:
        if self.lipschitz_scale is not None:
            return self.lipschitz_scale
        if self.family == "spike_recovery":
            return 1e2
        if self.family not in RANDOM_SYSTEM_FAMILIES:
            return 1.0
        return 1e2 if self.density == "sparse" else 1e4

    def validate(self) -> "ExperimentConfig":
        """Check ranges and names; raises ConfigError"""
        if self.family not in FAMILIES:
            raise ConfigError(f"Unknown family '{self.family}', expected one of {FAMILIES}")
        unknown = [s for s in self.solvers if s not in SOLVERS]
        if unknown:
            raise ConfigError(f"Unknown solvers {unknown}, expected a subset of {SOLVERS}")
        if not self.solvers:
            raise ConfigError("At least one solver is required")
        if min(self.m, self.n, self.instances, self.image_size) < 1:
            raise ConfigError("Dimensions and instance counts must be positive")
        if self.density not in ("dense", "sparse"):
            raise ConfigError(f"density must be 'dense' or 'sparse', got '{self.density}'")
        if not 0.0 < self.sparse_p <= 1.0:
            raise ConfigError("sparse_p must lie in (0, 1]")
        if self.lam < 0 or self.lam2 < 0 or (self.lam_factor is not None and self.lam_factor < 0):
            raise ConfigError("Regularization parameters must be nonnegative")
        if self.noise_snr_db is not None and self.noise_variance is not None:
            raise ConfigError("Give either noise_snr_db or noise_variance, not both")
        if self.noise_variance is not None and self.noise_variance < 0:
            raise ConfigError("noise_variance must be nonnegative")
        if not 0.0 <= self.missing_fraction < 1.0:
            raise ConfigError("missing_fraction must lie in [0, 1)")
        if self.family == "spike_recovery" and (self.spikes > self.n or self.m > self.n):
            raise ConfigError("Spike recovery needs spikes <= n and m <= n")
        if self.family in IMAGING_FAMILIES and self.image_path is None and self.image_size < 8:
            raise ConfigError("Phantom images need image_size >= 8")
        if all(v is None for v in (self.max_iterations, self.max_seconds, self.eta_tolerance)):
            raise ConfigError("At least one termination criterion must be set")
        if self.q0_rule not in Q0_RULES:
            raise ConfigError(f"q0_rule must be one of {Q0_RULES}, got '{self.q0_rule}'")
        if self.subgradient_rule not in SUBGRADIENT_RULES:
            raise ConfigError(f"subgradient_rule must be one of {SUBGRADIENT_RULES}, "
                              f"got '{self.subgradient_rule}'")
        if self.tv_prox not in TV_PROX_SOLVERS:
            raise ConfigError(f"tv_prox must be one of {TV_PROX_SOLVERS}, got '{self.tv_prox}'")
        if self.reference_factor < 1 or self.chit < 1:
            raise ConfigError("reference_factor and chit must be >= 1")
        if not 0.0 < self.nes83_rho < 1.0:
            raise ConfigError("nes83_rho must lie in (0, 1)")
        return self

    def to_dict(self) -> Dict[str, Any]:
        """Convert config to dictionary"""
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class TikhonovConfig(ExperimentConfig):
    """Ridge regression 1/2||Ax - y||^2 + lam/2 ||x||^2 on a random system"""

    family: str = "tikhonov"


@dataclass
class LassoConfig(ExperimentConfig):
    """l2-l1 problem on a sparse random system"""

    family: str = "lasso"
    density: str = "sparse"


@dataclass
class ElasticNetConfig(ExperimentConfig):
    family: str = "elastic_net"
    lam2: float = 1.0


@dataclass
class TVDenoiseConfig(ExperimentConfig):
    """Isotropic TV denoising of a noisy phantom"""

    family: str = "tv_denoise"
    lam: float = 0.05
    noise_snr_db: Optional[float] = 15.0
    max_iterations: Optional[int] = 50
    nsdsg_alpha0: Optional[float] = 1e-2


@dataclass
class TVInpaintConfig(ExperimentConfig):
    """TV inpainting with 40% of the pixels missing"""

    family: str = "tv_inpaint"
    lam: float = 0.09
    max_iterations: Optional[int] = 100
    nsdsg_alpha0: Optional[float] = 1e-2


@dataclass
class TVDeblurConfig(ExperimentConfig):
    """TV deblurring of a 9x9 uniform blur at 40 dB"""

    family: str = "tv_deblur"
    lam: float = 0.05
    noise_snr_db: Optional[float] = 40.0
    max_iterations: Optional[int] = 100
    nsdsg_alpha0: Optional[float] = 1e-2


@dataclass
class SpikeRecoveryConfig(ExperimentConfig):
    """Sparse +-1 spikes observed through orthonormal Gaussian rows"""

    family: str = "spike_recovery"
    lam_factor: Optional[float] = 0.1
    noise_variance: Optional[float] = 1e-6
    max_iterations: Optional[int] = 200
    nsdsg_alpha0: Optional[float] = 1e-1
    subgradient_rule: str = "min_norm"
    q0_rule: str = "backprojection"


PRESETS = {
    "tikhonov": TikhonovConfig,
    "lasso": LassoConfig,
    "elastic_net": ElasticNetConfig,
    "tv_denoise": TVDenoiseConfig,
    "tv_inpaint": TVInpaintConfig,
    "tv_deblur": TVDeblurConfig,
    "spike_recovery": SpikeRecoveryConfig,
}

# Large and small-lambda variants of the family presets
PRESET_OVERRIDES: Dict[str, Dict[str, Any]] = {
    "tikhonov_large": {"base": "tikhonov", "m": 5000, "n": 10000, "lam": 1.0},
    "lasso_large": {"base": "lasso", "m": 5000, "n": 10000, "lam": 1.0, "density": "dense"},
    "spike_recovery_small_lambda": {"base": "spike_recovery", "lam_factor": 0.001},
}


def preset_names() -> List[str]:
    return sorted(list(PRESETS) + list(PRESET_OVERRIDES))


def get_preset(name: str) -> ExperimentConfig:
    """Fresh config for a named preset"""
    if name in PRESETS:
        return PRESETS[name]()
    if name in PRESET_OVERRIDES:
        overrides = dict(PRESET_OVERRIDES[name])
        base = PRESETS[overrides.pop("base")]()
        return replace(base, **overrides)
    raise ConfigError(f"Unknown preset '{name}', expected one of {preset_names()}")


def _coerce_solvers(value: Any) -> List[str]:
    if isinstance(value, str):
        return [s.strip() for s in value.split(",") if s.strip()]
    if isinstance(value, (list, tuple)):
        return [str(s).strip() for s in value]
    raise ConfigError(f"solvers must be a list or a comma-separated string, got {value!r}")


def apply_overrides(config: ExperimentConfig, overrides: Dict[str, Any]) -> ExperimentConfig:
    """Copy of config with the given fields replaced; unknown keys raise ConfigError"""
    names = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(overrides) - names)
    if unknown:
        raise ConfigError(f"Unknown configuration keys: {unknown}")
    overrides = dict(overrides)
    if "solvers" in overrides:
        overrides["solvers"] = _coerce_solvers(overrides["solvers"])
    return replace(config, **overrides)


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Load a flat YAML mapping of ExperimentConfig fields

    An optional ``preset`` key selects the starting preset; all other keys override it.
    """
    path = Path(path)
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Malformed config file {path}: {e}") from e

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a key: value mapping")
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"Config file must be flat, nested keys: {nested}")

    data = dict(data)
    preset = data.pop("preset", None)
    if preset is not None:
        base = get_preset(str(preset))
    elif "family" in data and data["family"] in PRESETS:
        base = get_preset(data["family"])
    else:
        base = ExperimentConfig()
    return apply_overrides(base, data).validate()

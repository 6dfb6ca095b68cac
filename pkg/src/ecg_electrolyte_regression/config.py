"""Typed experiment configuration.

Configuration files are TOML documents with a top-level ``version`` key and one
section per concern::

    version = 1

    [generator]
    electrolyte = "potassium"
    n_patients = 2000
    seed = 0

    [backbone]
    channels = [16, 32, 32, 64]

    [training]
    epochs = 30

Generator fields left unset are filled from the electrolyte preset.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import dataclass
from enum import Enum
from functools import cache
from math import factorial, pi
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy import integrate
from scipy.stats import norm

from ecg_electrolyte_regression.errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

CONFIG_VERSION = 1
WORKERS_ENV_VAR = "ECG_ELECTROLYTE_WORKERS"


class ElectrolyteKind(str, Enum):
    """Blood analytes the pipeline can be configured for."""

    POTASSIUM = "potassium"
    CALCIUM = "calcium"
    SODIUM = "sodium"
    CREATININE = "creatinine"


@dataclass(frozen=True)
class ElectrolytePreset:
    """Population statistics and generator defaults for one analyte."""

    mean: float
    sd: float
    unit: str
    hypo: float | None
    hyper: float | None
    t_wave_gain: float
    qt_gain: float
    label_noise_sd: float
    log_normal: bool = False


PRESETS: dict[ElectrolyteKind, ElectrolytePreset] = {
    ElectrolyteKind.POTASSIUM: ElectrolytePreset(
        mean=3.99,
        sd=0.50,
        unit="mmol/l",
        hypo=3.5,
        hyper=5.5,
        t_wave_gain=0.30,
        qt_gain=-0.030,
        label_noise_sd=0.10,
    ),
    ElectrolyteKind.CALCIUM: ElectrolytePreset(
        mean=2.29,
        sd=0.13,
        unit="mmol/l",
        hypo=2.0,
        hyper=2.75,
        t_wave_gain=0.0,
        qt_gain=-0.12,
        label_noise_sd=0.03,
    ),
    ElectrolyteKind.SODIUM: ElectrolytePreset(
        mean=138.93,
        sd=3.82,
        unit="mmol/l",
        hypo=130.0,
        hyper=150.0,
        t_wave_gain=0.0,
        qt_gain=0.001,
        label_noise_sd=1.0,
    ),
    # No clinical thresholds: binary tasks fall back to mean +/- 2 sd.
    ElectrolyteKind.CREATININE: ElectrolytePreset(
        mean=90.55,
        sd=71.00,
        unit="umol/l",
        hypo=None,
        hyper=None,
        t_wave_gain=0.001,
        qt_gain=0.0,
        label_noise_sd=5.0,
        log_normal=True,
    ),
}


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GeneratorConfig(_Section):
    """Synthetic corpus generator parameters.

    Attributes:
        electrolyte: Analyte whose statistics and thresholds are emulated.
        concentration_mean: Population mean concentration.
        concentration_sd: Population sd of the concentration.
        concentration_floor: Physiologic floor applied to sampled values.
        t_wave_gain: T-wave amplitude change (mV) per unit concentration.
        qt_gain: QT interval change (s) per unit concentration.
        label_noise_sd: Irreducible lab-measurement noise sd.
        ecg_noise_sd: Additive white noise sd on the ECG (mV).
        baseline_wander_amplitude: Baseline wander amplitude (mV).
        baseline_wander_frequency: Baseline wander frequency (Hz).
        powerline_amplitude: Powerline hum amplitude (mV).
        powerline_frequency: Powerline frequency (Hz).
        n_patients: Number of synthetic patients.
        draws_per_patient: Inclusive range of lab draws per patient window.
        fs: Sampling rate of generated records (Hz).
        duration_s: Record duration in seconds.
        age_sd_inflation: Relative sd increase reached at age 100.
        seed: Master seed; fully determines the corpus.
    """

    electrolyte: ElectrolyteKind
    concentration_mean: float
    concentration_sd: float = Field(gt=0)
    concentration_floor: float = Field(gt=0)
    t_wave_gain: float
    qt_gain: float
    label_noise_sd: float = Field(ge=0)
    ecg_noise_sd: float = Field(default=0.02, ge=0)
    baseline_wander_amplitude: float = Field(default=0.3, ge=0)
    baseline_wander_frequency: float = Field(default=0.3, gt=0)
    powerline_amplitude: float = Field(default=0.05, ge=0)
    powerline_frequency: float = Field(default=50.0, gt=0)
    n_patients: int = Field(ge=1)
    draws_per_patient: tuple[int, int] = (1, 3)
    fs: float = Field(default=500.0, gt=0)
    duration_s: float = Field(default=10.0, gt=0)
    age_sd_inflation: float = Field(default=0.5, ge=0)
    seed: int

    @model_validator(mode="before")
    @classmethod
    def _fill_from_preset(cls, data: Any) -> Any:
        if not isinstance(data, dict) or "electrolyte" not in data:
            return data
        try:
            preset = PRESETS[ElectrolyteKind(data["electrolyte"])]
        except ValueError:
            return data
        filled = dict(data)
        filled.setdefault("concentration_mean", preset.mean)
        filled.setdefault("concentration_sd", preset.sd)
        filled.setdefault("concentration_floor", 0.1 * filled["concentration_mean"])
        filled.setdefault("t_wave_gain", preset.t_wave_gain)
        filled.setdefault("qt_gain", preset.qt_gain)
        filled.setdefault("label_noise_sd", preset.label_noise_sd)
        return filled

    @model_validator(mode="after")
    def _check_draws(self) -> GeneratorConfig:
        low, high = self.draws_per_patient
        if low < 1 or high < low:
            raise ValueError(f"draws_per_patient must satisfy 1 <= low <= high, got {low}, {high}")
        return self

    @property
    def preset(self) -> ElectrolytePreset:
        return PRESETS[self.electrolyte]

    @property
    def bayes_optimal_mae(self) -> float:
        """Best achievable MAE on noise-free ECGs.

        Noise-free ECGs reveal the true concentration, so the remaining error is
        the distance between it and the window median of the noisy lab draws.
        Test splits hold one record per patient, so window sizes are weighted
        uniformly over ``draws_per_patient``. A single draw gives
        ``label_noise_sd * sqrt(2 / pi)``.
        """
        low, high = self.draws_per_patient
        factors = [median_abs_noise(n) for n in range(low, high + 1)]
        return float(self.label_noise_sd * sum(factors) / len(factors))


@cache
def median_abs_noise(n_draws: int) -> float:
    """E|median of ``n_draws`` standard normal draws|.

    Odd windows integrate the density of the middle order statistic; even
    windows integrate the joint density of the two middle ones.
    """
    if n_draws < 1:
        raise ConfigError(f"A lab window needs at least one draw, got {n_draws}")
    if n_draws == 1:
        return (2.0 / pi) ** 0.5
    m = n_draws // 2
    if n_draws % 2:
        coef = factorial(n_draws) / factorial(m) ** 2
        value, _ = integrate.quad(
            lambda x: x * coef * (norm.cdf(x) * norm.sf(x)) ** m * norm.pdf(x), 0.0, 12.0
        )
        return 2.0 * value
    coef = factorial(n_draws) / factorial(m - 1) ** 2

    def joint(v: float, u: float) -> float:
        density = norm.cdf(u) ** (m - 1) * norm.pdf(u) * norm.pdf(v) * norm.sf(v) ** (m - 1)
        return abs(u + v) / 2.0 * coef * density

    value, _ = integrate.dblquad(joint, -12.0, 12.0, lambda u: u, lambda u: 12.0)
    return value


class BackboneConfig(_Section):
    """Residual 1-D convolutional feature extractor.

    Attributes:
        n_blocks: Number of residual blocks.
        channels: Output channels per block; the stem emits ``channels[0]``.
        kernel_size: Odd convolution kernel length.
        downsample: Stride of the second convolution in each block.
        dropout: Dropout rate inside blocks.
        feature_dim: Optional dense projection after global average pooling.
        in_leads: Input lead count.
        input_length: Samples per lead.
    """

    n_blocks: int = Field(default=4, ge=1)
    channels: tuple[int, ...] = (16, 32, 32, 64)
    kernel_size: int = Field(default=17, ge=1)
    downsample: tuple[int, ...] = (4, 4, 4, 4)
    dropout: float = Field(default=0.2, ge=0, lt=1)
    feature_dim: int | None = Field(default=None, ge=1)
    in_leads: int = Field(default=8, ge=1)
    input_length: int = Field(default=4096, ge=1)

    @model_validator(mode="after")
    def _check_shapes(self) -> BackboneConfig:
        if len(self.channels) != self.n_blocks or len(self.downsample) != self.n_blocks:
            raise ValueError("channels and downsample must list one entry per block")
        if self.kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be odd, got {self.kernel_size}")
        if any(d < 1 for d in self.downsample) or any(c < 1 for c in self.channels):
            raise ValueError("channels and downsample entries must be >= 1")
        if self.output_length < 1:
            raise ValueError("downsampling leaves no samples for the head")
        return self

    @property
    def output_length(self) -> int:
        length = self.input_length
        for factor in self.downsample:
            length = (length - 1) // factor + 1
        return length

    @property
    def output_dim(self) -> int:
        return self.feature_dim if self.feature_dim is not None else self.channels[-1]


class TrainConfig(_Section):
    """Optimisation schedule.

    The defaults are the training hyperparameters of the reference backbone
    with the epoch count reduced to 30.
    """

    epochs: int = Field(default=30, ge=1)
    batch_size: int = Field(default=32, ge=1)
    lr: float = Field(default=1e-3, gt=0)
    lr_factor: float = Field(default=0.1, gt=0, lt=1)
    lr_patience: int = Field(default=7, ge=0)
    min_lr: float = Field(default=1e-7, ge=0)
    seed: int = 0
    select_best_validation: bool = True
    validation_fraction: float = Field(default=0.15, gt=0, lt=1)


class LaplaceConfig(_Section):
    """Last-layer Laplace settings; ``prior_precision`` None selects it by evidence."""

    prior_precision: float | None = Field(default=None, gt=0)
    grid_min: float = Field(default=1e-2, gt=0)
    grid_max: float = Field(default=1e3, gt=0)
    grid_points: int = Field(default=10, ge=1)


class ExperimentConfig(_Section):
    """Everything one experiment needs, versioned for provenance."""

    version: Literal[1] = CONFIG_VERSION
    generator: GeneratorConfig
    backbone: BackboneConfig = BackboneConfig()
    training: TrainConfig = TrainConfig()
    laplace: LaplaceConfig = LaplaceConfig()


def _describe(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        key = ".".join(str(p) for p in item["loc"]) or "<root>"
        parts.append(f"{key}: {item['msg']}")
    return "; ".join(parts)


def parse_config(data: dict[str, Any]) -> ExperimentConfig:
    """Validate a raw mapping into an `ExperimentConfig`.

    Args:
        data: Parsed TOML document.

    Returns:
        The validated configuration.

    Raises:
        ConfigError: If a key is missing or a value is invalid; the message
            names every offending key.
    """
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {_describe(e)}") from e


def load_config(path: str | Path) -> ExperimentConfig:
    """Load and validate a TOML experiment configuration file.

    Args:
        path: Path to the TOML file.

    Returns:
        The validated configuration.
    """
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid TOML: {e}") from e
    return parse_config(data)


def config_hash(cfg: BaseModel) -> str:
    """Stable short hash of a configuration for report provenance."""
    canonical = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def worker_count() -> int:
    """Worker processes for per-seed fan-out, from the environment."""
    raw = os.environ.get(WORKERS_ENV_VAR, "1")
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigError(f"{WORKERS_ENV_VAR} must be an integer, got {raw!r}") from e
    if value < 1:
        raise ConfigError(f"{WORKERS_ENV_VAR} must be >= 1, got {value}")
    return value


__all__ = [
    "BackboneConfig",
    "CONFIG_VERSION",
    "ElectrolyteKind",
    "ElectrolytePreset",
    "ExperimentConfig",
    "GeneratorConfig",
    "LaplaceConfig",
    "PRESETS",
    "TrainConfig",
    "WORKERS_ENV_VAR",
    "config_hash",
    "load_config",
    "median_abs_noise",
    "parse_config",
    "worker_count",
]

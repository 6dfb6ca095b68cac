"""Synthetic ECGs whose morphology depends on an electrolyte concentration.

Each beat is a sum of five Gaussian bumps (P, Q, R, S, T). The T-wave amplitude
and the QT interval are affine in the concentration around population
constants shared by every patient, so with the noise sources switched off the
concentration can be read back exactly from lead I. Every other wave parameter
is drawn per patient and is independent of the concentration.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

import numpy as np

from ecg_electrolyte_regression.config import GeneratorConfig
from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.signal.records import N_LEADS, EcgMetadata, RawEcg

WAVE_NAMES = ("P", "Q", "R", "S", "T")
T_INDEX = 4

# Population template, offsets relative to the R peak (s), amplitudes (mV), widths (s).
_BASE_OFFSETS = np.array([-0.200, -0.035, 0.0, 0.035, np.nan])
_BASE_AMPLITUDES = np.array([0.15, -0.10, 1.00, -0.25, 0.30])
_BASE_WIDTHS = np.array([0.025, 0.010, 0.012, 0.010, 0.040])
_BASE_QT = 0.40
T_WAVE_BASE = float(_BASE_AMPLITUDES[T_INDEX])
QT_BASE = _BASE_QT

AGE_MEAN, AGE_SD, AGE_RANGE = 61.0, 20.0, (18.0, 100.0)
MALE_FRACTION = 0.494
HEART_RATE_RANGE = (50.0, 100.0)


@dataclass(frozen=True)
class PatientProfile:
    """Per-patient draws that shape every record of that patient."""

    patient_id: str
    age: float
    sex: str
    heart_rate_bpm: float
    amplitudes: np.ndarray
    widths: np.ndarray
    qt_base: float
    lead_gains: np.ndarray


@dataclass(frozen=True)
class BeatTemplate:
    """Wave parameters of one beat, indexed like `WAVE_NAMES`."""

    offsets: np.ndarray
    amplitudes: np.ndarray
    widths: np.ndarray
    qt_interval: float

    @property
    def t_wave_amplitude(self) -> float:
        return float(self.amplitudes[T_INDEX])


def age_sd_factor(age: float | None, inflation: float) -> float:
    """Linear sd ramp: 1 at the youngest age, ``1 + inflation`` at age 100."""
    if age is None:
        return 1.0
    low, high = AGE_RANGE
    return 1.0 + inflation * float(np.clip((age - low) / (high - low), 0.0, 1.0))


def sample_concentration(
    cfg: GeneratorConfig,
    rng: np.random.Generator,
    age: float | None = None,
    size: int | None = None,
) -> float | np.ndarray:
    """Draw concentrations from the configured population distribution.

    Normal for most analytes, log-normal with matching moments for creatinine.
    Values are clipped to the physiologic floor. Passing ``age`` inflates the
    sd along the age ramp.

    Args:
        cfg: Generator configuration.
        rng: Random generator.
        age: Patient age; None draws from the population moments.
        size: Number of draws; None returns a scalar.

    Returns:
        One concentration or an array of ``size`` concentrations.
    """
    sd = cfg.concentration_sd * age_sd_factor(age, cfg.age_sd_inflation)
    mean = cfg.concentration_mean
    if cfg.preset.log_normal:
        sigma2 = np.log1p((sd / mean) ** 2)
        draws = rng.lognormal(np.log(mean) - sigma2 / 2.0, np.sqrt(sigma2), size=size)
    else:
        draws = rng.normal(mean, sd, size=size)
    draws = np.maximum(draws, cfg.concentration_floor)
    return float(draws) if size is None else draws


def draw_patient(patient_id: str, rng: np.random.Generator) -> PatientProfile:
    """Draw demographics and morphology for one patient."""
    age = float(np.clip(rng.normal(AGE_MEAN, AGE_SD), *AGE_RANGE))
    sex = "M" if rng.random() < MALE_FRACTION else "F"
    heart_rate = float(rng.uniform(*HEART_RATE_RANGE))
    amplitudes = _BASE_AMPLITUDES * rng.uniform(0.8, 1.2, size=5)
    # The T base stays at the population value; only the concentration moves it.
    amplitudes[T_INDEX] = T_WAVE_BASE
    widths = _BASE_WIDTHS * rng.uniform(0.85, 1.15, size=5)
    qt_base = QT_BASE
    lead_gains = np.concatenate([[1.0], rng.uniform(-1.2, 1.2, size=N_LEADS - 1)])
    return PatientProfile(
        patient_id=patient_id,
        age=age,
        sex=sex,
        heart_rate_bpm=heart_rate,
        amplitudes=amplitudes,
        widths=widths,
        qt_base=qt_base,
        lead_gains=lead_gains,
    )


def beat_template(y: float, patient: PatientProfile, cfg: GeneratorConfig) -> BeatTemplate:
    """Wave parameters of one beat at concentration ``y``.

    Raises:
        InvalidInputError: For non-positive concentrations or parameter
            combinations that leave no physiologic beat (non-positive widths,
            a T wave that does not follow the S wave).
    """
    if not np.isfinite(y) or y <= 0:
        raise InvalidInputError(f"Concentration must be positive, got {y}")
    if np.any(patient.widths <= 0):
        raise InvalidInputError("Wave widths must be positive")

    delta = y - cfg.concentration_mean
    qt = patient.qt_base + cfg.qt_gain * delta
    amplitudes = patient.amplitudes.copy()
    amplitudes[T_INDEX] = patient.amplitudes[T_INDEX] + cfg.t_wave_gain * delta

    offsets = _BASE_OFFSETS.copy()
    q_onset = offsets[1] - 2.0 * patient.widths[1]
    offsets[T_INDEX] = q_onset + qt - 2.0 * patient.widths[T_INDEX]
    if offsets[T_INDEX] <= offsets[3] + 2.0 * patient.widths[3]:
        raise InvalidInputError(f"QT interval {qt:.3f} s leaves the T wave overlapping QRS")
    return BeatTemplate(
        offsets=offsets, amplitudes=amplitudes, widths=patient.widths.copy(), qt_interval=qt
    )


def concentration_from_t_wave(amplitude: float, cfg: GeneratorConfig) -> float:
    """Invert the T-wave coupling: the concentration a T peak of ``amplitude`` encodes.

    Raises:
        InvalidInputError: When the configured T-wave gain is zero.
    """
    if cfg.t_wave_gain == 0:
        raise InvalidInputError("T-wave gain is zero; amplitude carries no concentration")
    return cfg.concentration_mean + (amplitude - T_WAVE_BASE) / cfg.t_wave_gain


def concentration_from_qt(qt_interval: float, cfg: GeneratorConfig) -> float:
    """Invert the QT coupling.

    Raises:
        InvalidInputError: When the configured QT gain is zero.
    """
    if cfg.qt_gain == 0:
        raise InvalidInputError("QT gain is zero; interval carries no concentration")
    return cfg.concentration_mean + (qt_interval - QT_BASE) / cfg.qt_gain


def synthesize_ecg(
    y: float,
    patient: PatientProfile,
    cfg: GeneratorConfig,
    rng: np.random.Generator,
    timestamp: datetime | None = None,
) -> RawEcg:
    """Build an 8-lead beat train for a patient at concentration ``y``.

    Baseline wander, powerline hum and white noise are added per ``cfg``.
    Output is fully determined by the arguments and the rng state.

    Args:
        y: Underlying concentration driving the morphology.
        patient: Patient profile.
        cfg: Generator configuration.
        rng: Random generator; consumed in a fixed order.
        timestamp: Acquisition time stored in the metadata.

    Returns:
        The raw record at ``cfg.fs``.
    """
    template = beat_template(y, patient, cfg)
    n = int(round(cfg.duration_s * cfg.fs))
    t = np.arange(n) / cfg.fs

    rr = 60.0 / patient.heart_rate_bpm
    first = float(rng.uniform(0.0, rr)) - rr
    n_beats = int(np.ceil((cfg.duration_s - first) / rr)) + 2
    intervals = rr * (1 + 0.02 * rng.standard_normal(n_beats - 1))
    beat_times = first + np.concatenate([[0.0], np.cumsum(intervals)])

    centers = (beat_times[:, None] + template.offsets[None, :]).ravel()
    amps = np.tile(template.amplitudes, len(beat_times))
    widths = np.tile(template.widths, len(beat_times))
    base = np.zeros(n)
    for c, a, w in zip(centers, amps, widths, strict=True):
        lo, hi = np.searchsorted(t, [c - 6 * w, c + 6 * w])
        if hi > lo:
            base[lo:hi] += a * np.exp(-0.5 * ((t[lo:hi] - c) / w) ** 2)

    leads = patient.lead_gains[:, None] * base[None, :]
    wander_phase = rng.uniform(0, 2 * np.pi, size=(N_LEADS, 1))
    hum_phase = rng.uniform(0, 2 * np.pi, size=(N_LEADS, 1))
    leads = leads + cfg.baseline_wander_amplitude * np.sin(
        2 * np.pi * cfg.baseline_wander_frequency * t[None, :] + wander_phase
    )
    leads = leads + cfg.powerline_amplitude * np.sin(
        2 * np.pi * cfg.powerline_frequency * t[None, :] + hum_phase
    )
    leads = leads + cfg.ecg_noise_sd * rng.standard_normal((N_LEADS, n))

    meta = EcgMetadata(
        patient_id=patient.patient_id, age=patient.age, sex=patient.sex, timestamp=timestamp
    )
    return RawEcg(leads=leads, fs=cfg.fs, meta=meta)


__all__ = [
    "BeatTemplate",
    "PatientProfile",
    "QT_BASE",
    "T_WAVE_BASE",
    "WAVE_NAMES",
    "age_sd_factor",
    "beat_template",
    "concentration_from_qt",
    "concentration_from_t_wave",
    "draw_patient",
    "sample_concentration",
    "synthesize_ecg",
]

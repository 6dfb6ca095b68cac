"""Labelled corpus construction with patient-level splits.

Each patient contributes one window of 1-3 lab draws, each paired with an ECG
acquired within 60 minutes of the draw. The median draw labels every ECG of the
window. Development patients (train and validation) and random-test patients
share one time range; temporal-test patients come strictly later.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Protocol

import numpy as np

from ecg_electrolyte_regression.config import ElectrolyteKind, GeneratorConfig
from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.logging_config import logger
from ecg_electrolyte_regression.signal.records import RawEcg
from ecg_electrolyte_regression.synthdata.generator import (
    PatientProfile,
    draw_patient,
    sample_concentration,
    synthesize_ecg,
)

SPLIT_NAMES = ("train", "validation", "random-test", "temporal-test")
DEVELOPMENT_FRACTION = 0.7
RANDOM_TEST_FRACTION = 0.2
MAX_LAB_OFFSET = timedelta(minutes=60)
# Half-normal scale whose mean matches the observed |ECG - lab| gap of ~16 minutes.
LAB_OFFSET_SCALE_MIN = 16.28 / np.sqrt(2.0 / np.pi)

PERIOD_START = datetime(2009, 1, 1)
TEMPORAL_CUTOFF = datetime(2017, 1, 1)
PERIOD_END = datetime(2017, 12, 31)


class RecordSource(Protocol):
    """Anything that can produce the raw ECG of an example on demand."""

    def load(self) -> RawEcg: ...


@dataclass(frozen=True)
class EcgRecipe:
    """Deterministic recipe for a synthetic record; synthesised when loaded."""

    y_true: float
    patient: PatientProfile
    cfg: GeneratorConfig
    seed: int
    timestamp: datetime

    def load(self) -> RawEcg:
        return synthesize_ecg(
            self.y_true, self.patient, self.cfg, np.random.default_rng(self.seed), self.timestamp
        )


@dataclass(frozen=True)
class LabeledExample:
    """One ECG with its concentration label.

    Attributes:
        source: Where the raw ECG comes from.
        y: Label (median of the window's lab draws).
        electrolyte: Analyte the label measures.
        patient_id: Patient identifier.
        timestamp: ECG acquisition time.
        lab_draw_timestamp: Time of the paired lab draw.
        age: Patient age in years.
        sex: "M" or "F".
        lab_values: All lab draws of the patient's window.
    """

    source: RecordSource
    y: float
    electrolyte: ElectrolyteKind
    patient_id: str
    timestamp: datetime
    lab_draw_timestamp: datetime
    age: float | None = None
    sex: str | None = None
    lab_values: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not np.isfinite(self.y):
            raise InvalidInputError(f"Label must be finite, got {self.y}")
        if abs(self.timestamp - self.lab_draw_timestamp) > MAX_LAB_OFFSET:
            raise InvalidInputError(
                f"ECG at {self.timestamp} is more than 60 minutes from its lab draw "
                f"at {self.lab_draw_timestamp}"
            )

    @property
    def ecg(self) -> RawEcg:
        return self.source.load()


@dataclass(frozen=True)
class DatasetSplits:
    """Patient-disjoint partitions of a corpus."""

    train: list[LabeledExample]
    validation: list[LabeledExample]
    random_test: list[LabeledExample]
    temporal_test: list[LabeledExample]
    electrolyte: ElectrolyteKind
    bayes_optimal_mae: float

    def split(self, name: str) -> list[LabeledExample]:
        try:
            return {
                "train": self.train,
                "validation": self.validation,
                "random-test": self.random_test,
                "temporal-test": self.temporal_test,
            }[name]
        except KeyError as e:
            raise InvalidInputError(f"Unknown split {name!r}; expected one of {SPLIT_NAMES}") from e

    def patient_ids(self, name: str) -> set[str]:
        return {ex.patient_id for ex in self.split(name)}

    @property
    def development(self) -> list[LabeledExample]:
        return self.train + self.validation

    def validate(self) -> None:
        """Check patient disjointness and temporal ordering.

        Raises:
            InvalidInputError: If an invariant is violated.
        """
        ids = {name: self.patient_ids(name) for name in SPLIT_NAMES}
        for i, a in enumerate(SPLIT_NAMES):
            for b in SPLIT_NAMES[i + 1 :]:
                shared = ids[a] & ids[b]
                if shared:
                    raise InvalidInputError(f"Splits {a} and {b} share {len(shared)} patients")
        if self.development and self.temporal_test:
            last_dev = max(ex.timestamp for ex in self.development)
            first_temporal = min(ex.timestamp for ex in self.temporal_test)
            if first_temporal <= last_dev:
                raise InvalidInputError("Temporal-test records overlap the development period")


def split_sizes(n_patients: int, validation_fraction: float = 0.15) -> dict[str, int]:
    """Patients per split: 70 % development (of which a validation share), 20 %, 10 %.

    Raises:
        InvalidInputError: If any split would be empty.
    """
    n_dev = int(round(DEVELOPMENT_FRACTION * n_patients))
    n_random = int(round(RANDOM_TEST_FRACTION * n_patients))
    n_temporal = n_patients - n_dev - n_random
    n_val = max(1, int(round(validation_fraction * n_dev)))
    sizes = {
        "train": n_dev - n_val,
        "validation": n_val,
        "random-test": n_random,
        "temporal-test": n_temporal,
    }
    empty = [name for name, size in sizes.items() if size < 1]
    if empty:
        raise InvalidInputError(
            f"{n_patients} patients are too few to fill every split (empty: {', '.join(empty)})"
        )
    return sizes


def drop_leaking_patients(
    temporal: Iterable[LabeledExample], earlier_patient_ids: set[str]
) -> list[LabeledExample]:
    """Remove temporal-test examples of patients already seen in earlier splits."""
    kept = [ex for ex in temporal if ex.patient_id not in earlier_patient_ids]
    dropped = {ex.patient_id for ex in temporal} - {ex.patient_id for ex in kept}
    if dropped:
        logger.info(f"Removed {len(dropped)} temporal-test patients with earlier records")
    return kept


def _window_start(rng: np.random.Generator, temporal: bool) -> datetime:
    margin = timedelta(hours=2)
    low, high = (
        (TEMPORAL_CUTOFF + margin, PERIOD_END) if temporal else (PERIOD_START, TEMPORAL_CUTOFF - margin)
    )
    span = (high - low).total_seconds() / 60.0
    return low + timedelta(minutes=float(np.floor(rng.uniform(0.0, span))))


def window_label(lab_values: Iterable[float]) -> float:
    """Label shared by every ECG of a window: the median of its lab draws.

    Raises:
        InvalidInputError: For an empty window.
    """
    values = np.asarray(list(lab_values), dtype=float)
    if values.size == 0:
        raise InvalidInputError("A lab window needs at least one draw")
    return float(np.median(values))


def _patient_examples(
    patient_id: str, cfg: GeneratorConfig, rng: np.random.Generator, temporal: bool
) -> list[LabeledExample]:
    profile = draw_patient(patient_id, rng)
    start = _window_start(rng, temporal)
    low, high = cfg.draws_per_patient
    n_draws = int(rng.integers(low, high + 1))

    y_true = float(sample_concentration(cfg, rng, age=profile.age))
    noise = cfg.label_noise_sd * rng.standard_normal(n_draws)
    lab_values = tuple(float(v) for v in np.maximum(y_true + noise, cfg.concentration_floor))
    label = window_label(lab_values)

    draw_minutes = np.sort(rng.uniform(0.0, 60.0, size=n_draws))
    offsets = rng.choice([-1.0, 1.0], size=n_draws) * np.minimum(
        np.abs(rng.normal(0.0, LAB_OFFSET_SCALE_MIN, size=n_draws)), 60.0
    )
    seeds = rng.integers(0, 2**63 - 1, size=n_draws)

    examples = []
    for minute, offset, seed in zip(draw_minutes, offsets, seeds, strict=True):
        lab_time = start + timedelta(minutes=float(minute))
        ecg_time = lab_time + timedelta(minutes=float(offset))
        recipe = EcgRecipe(
            y_true=y_true, patient=profile, cfg=cfg, seed=int(seed), timestamp=ecg_time
        )
        examples.append(
            LabeledExample(
                source=recipe,
                y=label,
                electrolyte=cfg.electrolyte,
                patient_id=patient_id,
                timestamp=ecg_time,
                lab_draw_timestamp=lab_time,
                age=profile.age,
                sex=profile.sex,
                lab_values=lab_values,
            )
        )
    return sorted(examples, key=lambda ex: ex.timestamp)


def generate_dataset(cfg: GeneratorConfig, validation_fraction: float = 0.15) -> DatasetSplits:
    """Generate a labelled corpus and its patient-level splits.

    Training keeps every ECG of a patient; validation and both test splits keep
    only the first ECG per patient. Each patient draws from its own stream
    spawned from the master seed, so the corpus does not depend on generation
    order.

    Args:
        cfg: Generator configuration (its seed fixes the corpus).
        validation_fraction: Share of development patients held out for validation.

    Returns:
        The four splits plus the Bayes-optimal MAE of the label noise.
    """
    sizes = split_sizes(cfg.n_patients, validation_fraction)
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.n_patients + 1)
    order = np.random.default_rng(children[0]).permutation(cfg.n_patients)

    roles: dict[int, str] = {}
    cursor = 0
    for name in SPLIT_NAMES:
        for index in order[cursor : cursor + sizes[name]]:
            roles[int(index)] = name
        cursor += sizes[name]

    buckets: dict[str, list[LabeledExample]] = {name: [] for name in SPLIT_NAMES}
    for index in range(cfg.n_patients):
        role = roles[index]
        rng = np.random.default_rng(children[index + 1])
        examples = _patient_examples(f"P{index:06d}", cfg, rng, temporal=role == "temporal-test")
        buckets[role].extend(examples if role == "train" else examples[:1])

    earlier = {ex.patient_id for name in SPLIT_NAMES[:3] for ex in buckets[name]}
    buckets["temporal-test"] = drop_leaking_patients(buckets["temporal-test"], earlier)

    splits = DatasetSplits(
        train=buckets["train"],
        validation=buckets["validation"],
        random_test=buckets["random-test"],
        temporal_test=buckets["temporal-test"],
        electrolyte=cfg.electrolyte,
        bayes_optimal_mae=cfg.bayes_optimal_mae,
    )
    splits.validate()
    logger.info(
        f"Generated {cfg.electrolyte.value} corpus: "
        + ", ".join(f"{name}={len(splits.split(name))}" for name in SPLIT_NAMES)
        + f" records, Bayes-optimal MAE {splits.bayes_optimal_mae:.4f}"
    )
    return splits


__all__ = [
    "DatasetSplits",
    "EcgRecipe",
    "LabeledExample",
    "RecordSource",
    "SPLIT_NAMES",
    "drop_leaking_patients",
    "generate_dataset",
    "split_sizes",
    "window_label",
]

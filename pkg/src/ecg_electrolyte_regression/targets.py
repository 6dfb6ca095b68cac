"""Target transformations: z-normalisation, discretisation and ordinal coding.

Classes are indexed 1..k. Intervals are left-closed and right-open with
open-ended extremes, so a value lying exactly on a bound belongs to the upper
class.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

from ecg_electrolyte_regression.config import PRESETS, ElectrolyteKind
from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.logging_config import logger


class BinaryTask(str, Enum):
    """The two binary problems used when k = 2."""

    HYPO = "hypo"
    HYPER = "hyper"


@dataclass(frozen=True)
class ZNormalizer:
    """Affine map ``(y - mean) / sd`` fitted on training targets."""

    mean: float
    sd: float

    def __post_init__(self) -> None:
        if not self.sd > 0:
            raise InvalidInputError(f"Target sd must be positive, got {self.sd}")

    @classmethod
    def fit(cls, y: np.ndarray) -> ZNormalizer:
        y = np.asarray(y, dtype=np.float64)
        if y.size == 0:
            raise InvalidInputError("Cannot fit a normalizer on no targets")
        sd = float(y.std())
        if sd == 0.0:
            logger.warning("Training targets are constant; using unit scale for z-normalisation")
            sd = 1.0
        return cls(mean=float(y.mean()), sd=sd)

    def apply(self, y: np.ndarray | float) -> np.ndarray | float:
        return (np.asarray(y, dtype=np.float64) - self.mean) / self.sd

    def invert(self, z: np.ndarray | float) -> np.ndarray | float:
        return np.asarray(z, dtype=np.float64) * self.sd + self.mean

    def invert_variance(self, v: np.ndarray | float) -> np.ndarray | float:
        """Map a variance on the z-scale back to squared raw units."""
        return np.asarray(v, dtype=np.float64) * self.sd**2


@dataclass(frozen=True)
class ClinicalBounds:
    """Hypo/hyper thresholds in raw concentration units."""

    hypo: float
    hyper: float

    def threshold(self, task: BinaryTask) -> float:
        return self.hypo if task is BinaryTask.HYPO else self.hyper


def make_bounds(
    k: int, mu: float, sigma: float, electrolyte: ElectrolyteKind | None = None
) -> np.ndarray | ClinicalBounds:
    """Class bounds for ``k`` intervals.

    For k >= 3 the k - 1 bounds are evenly spaced from ``mu - 2 sigma`` to
    ``mu + 2 sigma`` inclusive. For k = 2 the clinical hypo/hyper pair is
    returned; each threshold defines its own binary task. Analytes without
    clinical thresholds fall back to ``mu -/+ 2 sigma``.

    Raises:
        InvalidInputError: If k < 2.
    """
    if k < 2:
        raise InvalidInputError(f"Need at least 2 classes, got k={k}")
    if k == 2:
        preset = PRESETS.get(ElectrolyteKind(electrolyte)) if electrolyte is not None else None
        hypo = preset.hypo if preset and preset.hypo is not None else mu - 2 * sigma
        hyper = preset.hyper if preset and preset.hyper is not None else mu + 2 * sigma
        return ClinicalBounds(hypo=float(hypo), hyper=float(hyper))
    return np.linspace(mu - 2 * sigma, mu + 2 * sigma, k - 1)


@dataclass(frozen=True)
class Discretizer:
    """Maps concentrations to classes and classes back to concentrations.

    Attributes:
        bounds: Strictly ascending k - 1 thresholds.
        extreme_means: Empirical training means of class 1 and class k
            (NaN when a class held no training targets).
        sigma: Training target sd, used for the empty-class fallback.
    """

    bounds: np.ndarray
    extreme_means: tuple[float, float]
    sigma: float

    def __post_init__(self) -> None:
        bounds = np.asarray(self.bounds, dtype=np.float64).ravel()
        if bounds.size < 1:
            raise InvalidInputError("A discretizer needs at least one bound")
        if np.any(np.diff(bounds) <= 0):
            raise InvalidInputError("Bounds must be strictly ascending")
        object.__setattr__(self, "bounds", bounds)

    @property
    def k(self) -> int:
        return int(self.bounds.size + 1)

    @classmethod
    def fit(cls, bounds: np.ndarray | list[float], y_train: np.ndarray, sigma: float) -> Discretizer:
        """Record the extreme-class training means for decoding."""
        bounds = np.asarray(bounds, dtype=np.float64).ravel()
        y_train = np.asarray(y_train, dtype=np.float64)
        low = y_train[y_train < bounds[0]]
        high = y_train[y_train >= bounds[-1]]
        return cls(
            bounds=bounds,
            extreme_means=(
                float(low.mean()) if low.size else float("nan"),
                float(high.mean()) if high.size else float("nan"),
            ),
            sigma=float(sigma),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "bounds": self.bounds.tolist(),
            "extreme_means": [None if np.isnan(m) else m for m in self.extreme_means],
            "sigma": self.sigma,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Discretizer:
        low, high = (float("nan") if m is None else float(m) for m in data["extreme_means"])
        return cls(bounds=np.asarray(data["bounds"]), extreme_means=(low, high), sigma=data["sigma"])


def discretize(y: np.ndarray | float, d: Discretizer) -> np.ndarray | int:
    """Class index (1..k) of each concentration.

    Raises:
        InvalidInputError: For non-finite values.
    """
    arr = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("Cannot discretize non-finite targets")
    classes = np.searchsorted(d.bounds, arr, side="right") + 1
    return int(classes) if classes.ndim == 0 else classes


def class_to_concentration(c: np.ndarray | int, d: Discretizer) -> np.ndarray | float:
    """Concentration representing each class.

    Interior classes map to the interval midpoint, extreme classes to the
    training mean inside them, or to the nearest bound offset by sigma / 2 when
    no training target fell there.

    Raises:
        InvalidInputError: For class indices outside 1..k.
    """
    classes = np.asarray(c)
    if np.any(classes < 1) or np.any(classes > d.k) or not np.all(classes == np.round(classes)):
        raise InvalidInputError(f"Class indices must be integers in 1..{d.k}")
    low_mean, high_mean = d.extreme_means
    table = np.empty(d.k)
    table[0] = low_mean if np.isfinite(low_mean) else d.bounds[0] - d.sigma / 2
    table[-1] = high_mean if np.isfinite(high_mean) else d.bounds[-1] + d.sigma / 2
    if d.k > 2:
        table[1:-1] = (d.bounds[:-1] + d.bounds[1:]) / 2
    values = table[classes.astype(int) - 1]
    return float(values) if values.ndim == 0 else values


def ordinal_encode(c: np.ndarray | int, k: int) -> np.ndarray:
    """Binary rank targets: ``t_j = 1`` iff class > j, for j = 1..k-1."""
    classes = np.atleast_1d(np.asarray(c))
    ranks = np.arange(1, k)
    encoded = (classes[:, None] > ranks[None, :]).astype(np.float64)
    return encoded[0] if np.ndim(c) == 0 else encoded


def ordinal_decode(probabilities: np.ndarray) -> np.ndarray | int:
    """Class ``1 + sum_j [p_j > 0.5]`` for a rank-probability vector (or batch).

    Raises:
        InvalidInputError: If any probability lies outside [0, 1].
    """
    p = np.asarray(probabilities, dtype=np.float64)
    if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise InvalidInputError("Rank probabilities must lie in [0, 1]")
    classes = 1 + np.sum(p > 0.5, axis=-1)
    return int(classes) if np.ndim(classes) == 0 else classes


@dataclass(frozen=True)
class TargetCodec:
    """Everything needed to turn concentrations into training targets and back.

    Attributes:
        normalizer: z-normalisation fitted on training targets.
        discretizer: Class bounds for discretised heads, else None.
        task: Which clinical threshold a k = 2 model was trained on.
    """

    normalizer: ZNormalizer
    discretizer: Discretizer | None = None
    task: BinaryTask | None = None

    @property
    def k(self) -> int | None:
        return self.discretizer.k if self.discretizer is not None else None

    def class_targets(self, y: np.ndarray) -> np.ndarray:
        """Zero-based class indices for cross-entropy training."""
        if self.discretizer is None:
            raise InvalidInputError("Codec has no discretizer")
        return np.asarray(discretize(y, self.discretizer)) - 1

    def ordinal_targets(self, y: np.ndarray) -> np.ndarray:
        if self.discretizer is None:
            raise InvalidInputError("Codec has no discretizer")
        return ordinal_encode(np.atleast_1d(discretize(y, self.discretizer)), self.discretizer.k)

    def to_dict(self) -> dict[str, Any]:
        return {
            "normalizer": {"mean": self.normalizer.mean, "sd": self.normalizer.sd},
            "discretizer": self.discretizer.to_dict() if self.discretizer else None,
            "task": self.task.value if self.task else None,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TargetCodec:
        return cls(
            normalizer=ZNormalizer(**data["normalizer"]),
            discretizer=Discretizer.from_dict(data["discretizer"]) if data["discretizer"] else None,
            task=BinaryTask(data["task"]) if data["task"] else None,
        )


def build_codec(
    y_train: np.ndarray,
    k: int | None = None,
    electrolyte: ElectrolyteKind | None = None,
    task: BinaryTask | None = None,
) -> TargetCodec:
    """Fit a codec on training targets.

    Args:
        y_train: Raw training concentrations.
        k: Class count for discretised heads; None for regression heads.
        electrolyte: Analyte, for the clinical thresholds used when k = 2.
        task: Required when k = 2: which threshold defines the binary problem.
    """
    normalizer = ZNormalizer.fit(y_train)
    if k is None:
        return TargetCodec(normalizer=normalizer)
    bounds = make_bounds(k, normalizer.mean, normalizer.sd, electrolyte)
    if isinstance(bounds, ClinicalBounds):
        if task is None:
            raise InvalidInputError("k = 2 needs a binary task (hypo or hyper)")
        bounds = np.array([bounds.threshold(task)])
    return TargetCodec(
        normalizer=normalizer,
        discretizer=Discretizer.fit(bounds, y_train, normalizer.sd),
        task=task if k == 2 else None,
    )


__all__ = [
    "BinaryTask",
    "ClinicalBounds",
    "Discretizer",
    "TargetCodec",
    "ZNormalizer",
    "build_codec",
    "class_to_concentration",
    "discretize",
    "make_bounds",
    "ordinal_decode",
    "ordinal_encode",
]

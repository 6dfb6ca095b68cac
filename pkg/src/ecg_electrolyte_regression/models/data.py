"""Dense arrays for training and evaluation built from labelled examples."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.logging_config import logger
from ecg_electrolyte_regression.signal import IirFilterSpec, preprocess
from ecg_electrolyte_regression.synthdata.dataset import LabeledExample


@dataclass(frozen=True)
class ArrayDataset:
    """Preprocessed records, labels and per-example metadata.

    Attributes:
        x: float32 array of shape (N, leads, samples).
        y: Raw-unit labels of shape (N,).
        meta: One row per example with patient_id, age, sex and timestamp.
    """

    x: np.ndarray
    y: np.ndarray
    meta: pd.DataFrame

    def __post_init__(self) -> None:
        if self.x.ndim != 3:
            raise InvalidInputError(f"Expected (N, leads, samples) records, got {self.x.shape}")
        if len(self.x) != len(self.y) or len(self.y) != len(self.meta):
            raise InvalidInputError("Records, labels and metadata must have equal lengths")

    def __len__(self) -> int:
        return len(self.y)

    @classmethod
    def from_arrays(cls, x: np.ndarray, y: np.ndarray) -> ArrayDataset:
        """Wrap bare arrays with placeholder metadata."""
        y = np.asarray(y, dtype=np.float64)
        meta = pd.DataFrame(
            {
                "patient_id": [f"p{i}" for i in range(len(y))],
                "age": np.nan,
                "sex": None,
                "timestamp": pd.NaT,
            }
        )
        return cls(x=np.asarray(x, dtype=np.float32), y=y, meta=meta)

    def subset(self, index: np.ndarray) -> ArrayDataset:
        return ArrayDataset(
            x=self.x[index], y=self.y[index], meta=self.meta.iloc[index].reset_index(drop=True)
        )

    def with_x(self, x: np.ndarray) -> ArrayDataset:
        return ArrayDataset(x=np.asarray(x, dtype=np.float32), y=self.y, meta=self.meta)


def to_arrays(
    examples: Sequence[LabeledExample],
    highpass_spec: IirFilterSpec | None = None,
    notch_spec: IirFilterSpec | None = None,
    log_every: int = 500,
) -> ArrayDataset:
    """Preprocess every example into one float32 record array.

    Args:
        examples: Labelled examples; raw records are loaded one at a time.
        highpass_spec: Baseline-removal filter; the default elliptic high-pass if None.
        notch_spec: Powerline notch; the default 50 Hz notch if None.
        log_every: Progress logging interval.

    Returns:
        The stacked dataset.
    """
    if not examples:
        raise InvalidInputError("No examples to preprocess")
    first = preprocess(examples[0].ecg, highpass_spec, notch_spec).matrix
    x = np.empty((len(examples), *first.shape), dtype=np.float32)
    x[0] = first
    for i, ex in enumerate(examples[1:], start=1):
        x[i] = preprocess(ex.ecg, highpass_spec, notch_spec).matrix
        if i % log_every == 0:
            logger.debug(f"Preprocessed {i}/{len(examples)} records")
    meta = pd.DataFrame(
        {
            "patient_id": [ex.patient_id for ex in examples],
            "age": [np.nan if ex.age is None else ex.age for ex in examples],
            "sex": [ex.sex for ex in examples],
            "timestamp": [ex.timestamp for ex in examples],
        }
    )
    y = np.array([ex.y for ex in examples], dtype=np.float64)
    return ArrayDataset(x=x, y=y, meta=meta)


__all__ = ["ArrayDataset", "to_arrays"]

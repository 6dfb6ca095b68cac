"""ECG record value types shared by every stage of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Any

import numpy as np

from ecg_electrolyte_regression.errors import InvalidInputError

N_LEADS = 8
TARGET_FS = 400.0
TARGET_LENGTH = 4096


@dataclass(frozen=True)
class EcgMetadata:
    """Patient metadata carried alongside a record.

    Attributes:
        patient_id: Patient identifier shared by all of a patient's records.
        age: Age in years, if known.
        sex: "M" or "F", if known.
        timestamp: Acquisition time of the ECG.
    """

    patient_id: str = ""
    age: float | None = None
    sex: str | None = None
    timestamp: datetime | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "patient_id": self.patient_id,
            "age": self.age,
            "sex": self.sex,
            "timestamp": self.timestamp.isoformat() if self.timestamp else None,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> EcgMetadata:
        timestamp = data.get("timestamp")
        age = data.get("age")
        return cls(
            patient_id=str(data.get("patient_id") or ""),
            age=float(age) if age not in (None, "", "None") else None,
            sex=data.get("sex") or None,
            timestamp=datetime.fromisoformat(timestamp) if timestamp else None,
        )


def _check_leads(leads: np.ndarray, n_leads: int) -> None:
    if leads.ndim != 2:
        raise InvalidInputError(f"Expected a (leads, samples) matrix, got shape {leads.shape}")
    if leads.shape[0] != n_leads:
        raise InvalidInputError(f"Expected exactly {n_leads} leads, got {leads.shape[0]}")
    if leads.shape[1] < 1:
        raise InvalidInputError("Empty signal: leads hold no samples")
    if not np.all(np.isfinite(leads)):
        raise InvalidInputError("Signal contains non-finite samples")


@dataclass(frozen=True)
class RawEcg:
    """An 8-lead record at an arbitrary sampling rate, values in mV."""

    leads: np.ndarray
    fs: float
    meta: EcgMetadata = field(default_factory=EcgMetadata)

    def __post_init__(self) -> None:
        leads = np.asarray(self.leads, dtype=np.float64)
        _check_leads(leads, N_LEADS)
        if not np.isfinite(self.fs) or self.fs <= 0:
            raise InvalidInputError(f"Sampling rate must be positive, got {self.fs}")
        object.__setattr__(self, "leads", leads)
        object.__setattr__(self, "fs", float(self.fs))

    @property
    def n_samples(self) -> int:
        return int(self.leads.shape[1])

    def with_leads(self, leads: np.ndarray, fs: float | None = None) -> RawEcg:
        """Copy of this record with new samples (and optionally a new rate)."""
        return replace(self, leads=leads, fs=self.fs if fs is None else fs)


@dataclass(frozen=True)
class ProcessedEcg:
    """Model input: fixed 8 x 4096 matrix at 400 Hz."""

    matrix: np.ndarray
    meta: EcgMetadata = field(default_factory=EcgMetadata)

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=np.float64)
        _check_leads(matrix, N_LEADS)
        if matrix.shape[1] != TARGET_LENGTH:
            raise InvalidInputError(
                f"Processed records hold {TARGET_LENGTH} samples per lead, got {matrix.shape[1]}"
            )
        object.__setattr__(self, "matrix", matrix)

    @property
    def fs(self) -> float:
        return TARGET_FS

    def with_matrix(self, matrix: np.ndarray) -> ProcessedEcg:
        return replace(self, matrix=matrix)


def stack_matrices(records: list[ProcessedEcg]) -> np.ndarray:
    """Stack processed records into a (n, leads, samples) batch."""
    if not records:
        raise InvalidInputError("Cannot stack an empty list of records")
    return np.stack([r.matrix for r in records], axis=0)

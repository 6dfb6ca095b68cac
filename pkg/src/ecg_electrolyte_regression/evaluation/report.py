"""Evaluation reports: one CSV per metric family and a JSON summary."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ecg_electrolyte_regression.logging_config import logger
from ecg_electrolyte_regression.signal.io import atomic_write_bytes

SUMMARY_FILE = "summary.json"


def format_mean_sd(values: np.ndarray | list[float], digits: int = 3) -> str:
    """``"mean (sd)"`` over seeds; the sd is omitted for a single value."""
    arr = np.asarray(values, dtype=np.float64)
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        return "n/a"
    if arr.size == 1:
        return f"{arr[0]:.{digits}f}"
    return f"{arr.mean():.{digits}f} ({arr.std(ddof=1):.{digits}f})"


def summarize_seeds(per_seed: pd.DataFrame, group: list[str] | None = None) -> pd.DataFrame:
    """Mean, sd and the formatted ``mean (sd)`` string of every numeric column.

    Args:
        per_seed: One row per seed (and group), numeric metric columns.
        group: Columns identifying a model family, e.g. ``["head", "k"]``.
    """
    group = group or []
    metrics = [c for c in per_seed.columns if c not in group and c != "seed"]
    rows = []
    grouped = per_seed.groupby(group, dropna=False, sort=False) if group else [((), per_seed)]
    for key, part in grouped:
        key = key if isinstance(key, tuple) else (key,)
        for metric in metrics:
            values = pd.to_numeric(part[metric], errors="coerce").to_numpy()
            finite = values[np.isfinite(values)]
            rows.append(
                {
                    **dict(zip(group, key, strict=True)),
                    "metric": metric,
                    "mean": finite.mean() if finite.size else np.nan,
                    "sd": finite.std(ddof=1) if finite.size > 1 else np.nan,
                    "n_seeds": int(finite.size),
                    "formatted": format_mean_sd(values),
                }
            )
    return pd.DataFrame(rows)


@dataclass
class EvalReport:
    """A set of metric tables for one split (or one perturbation).

    Attributes:
        name: Report name, e.g. ``random-test`` or ``snr-10``.
        tables: Metric family name to table; each becomes ``<name>.csv``.
        summary: Scalar headline values written to the JSON summary.
        provenance: Config hash, package version and electrolyte.
    """

    name: str
    provenance: dict[str, Any]
    tables: dict[str, pd.DataFrame] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)

    def add_table(self, family: str, table: pd.DataFrame) -> None:
        self.tables[family] = table

    def write(self, out_dir: str | Path) -> Path:
        """Write every table and the summary under ``out_dir / name``."""
        target = Path(out_dir) / self.name
        try:
            target.mkdir(parents=True, exist_ok=True)
            for family, table in self.tables.items():
                atomic_write_bytes(target / f"{family}.csv", table.to_csv(index=False).encode("utf-8"))
            payload = {
                "report": self.name,
                **self.provenance,
                "tables": sorted(self.tables),
                "summary": _jsonable(self.summary),
            }
            atomic_write_bytes(
                target / SUMMARY_FILE,
                json.dumps(payload, indent=2, sort_keys=True).encode("utf-8"),
            )
        except Exception as e:
            logger.error(f"Failed to write report {self.name} to {target}: {e}")
            raise
        logger.info(f"Wrote report {self.name} ({len(self.tables)} tables) to {target}")
        return target


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        return None if not np.isfinite(value) else float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


__all__ = ["EvalReport", "SUMMARY_FILE", "format_mean_sd", "summarize_seeds"]

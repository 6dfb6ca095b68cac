"""Regression, ranking, sparsification, calibration and stratification metrics.

All functions are pure over numpy arrays; tables come back as pandas frames.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import stats

from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.logging_config import logger

DEFAULT_FRACTIONS = (0.25, 0.5, 0.75, 1.0)
UNKNOWN_SEX = "unknown"
SEX_STRATA = ("F", "M", UNKNOWN_SEX)
N_AGE_DECILES = 10


def _pair(a: np.ndarray, b: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0:
        raise InvalidInputError(f"{what}: empty input")
    if a.size != b.size:
        raise InvalidInputError(f"{what}: length mismatch {a.size} vs {b.size}")
    return a, b


@dataclass(frozen=True)
class RegressionMetrics:
    mse: float
    mae: float
    normalized_mse: float

    def as_dict(self) -> dict[str, float]:
        return {"MSE": self.mse, "MAE": self.mae, "normalized MSE": self.normalized_mse}


def regression_metrics(preds: np.ndarray, targets: np.ndarray, sigma_y: float) -> RegressionMetrics:
    """Raw-unit MSE and MAE plus MSE divided by ``sigma_y ** 2``."""
    p, t = _pair(preds, targets, "regression_metrics")
    if not sigma_y > 0:
        raise InvalidInputError(f"sigma_y must be positive, got {sigma_y}")
    err = p - t
    mse = float(np.mean(err**2))
    return RegressionMetrics(mse=mse, mae=float(np.mean(np.abs(err))), normalized_mse=mse / sigma_y**2)


def auroc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney AUROC with midranks for ties.

    Raises:
        InvalidInputError: If only one class is present.
    """
    s, y = _pair(scores, labels, "auroc")
    positive = y > 0.5
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InvalidInputError("AUROC needs both positive and negative labels")
    ranks = stats.rankdata(s)
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class CumulativeAuroc:
    """Per-threshold AUROCs for the events ``class <= i``; None marks a skipped threshold."""

    per_threshold: tuple[float | None, ...]
    aumroc: float
    skipped: tuple[int, ...] = field(default_factory=tuple)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "threshold": np.arange(1, len(self.per_threshold) + 1),
                "AUROC": [np.nan if a is None else a for a in self.per_threshold],
            }
        )


def cumulative_macro_auroc(
    cumulative_scores: np.ndarray, true_classes: np.ndarray, k: int
) -> CumulativeAuroc:
    """AUROC of ``cumulative_scores[:, i-1]`` against ``class <= i`` for i = 1..k-1.

    Thresholds where every example falls on one side are skipped, logged and
    recorded in ``skipped``; AUmROC averages the remaining values.

    Raises:
        InvalidInputError: If k < 2, shapes disagree or every threshold is skipped.
    """
    if k < 2:
        raise InvalidInputError(f"Need at least 2 classes, got k={k}")
    scores = np.asarray(cumulative_scores, dtype=np.float64)
    if scores.ndim == 1:
        scores = scores[:, None]
    classes = np.asarray(true_classes).ravel()
    if scores.shape != (classes.size, k - 1):
        raise InvalidInputError(f"Expected scores of shape ({classes.size}, {k - 1}), got {scores.shape}")
    values: list[float | None] = []
    skipped: list[int] = []
    for i in range(1, k):
        labels = classes <= i
        if labels.all() or not labels.any():
            logger.warning(f"Skipping cumulative threshold {i}: only one class present")
            values.append(None)
            skipped.append(i)
            continue
        values.append(auroc(scores[:, i - 1], labels))
    kept = [v for v in values if v is not None]
    if not kept:
        raise InvalidInputError("Every cumulative threshold has single-class labels")
    return CumulativeAuroc(per_threshold=tuple(values), aumroc=float(np.mean(kept)), skipped=tuple(skipped))


def _retained_count(fraction: float, n: int) -> int:
    if not 0.0 < fraction <= 1.0:
        raise InvalidInputError(f"Retained fraction must lie in (0, 1], got {fraction}")
    return max(1, int(round(fraction * n)))


def sparsification(
    abs_errors: np.ndarray,
    uncertainties: np.ndarray,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
) -> dict[float, float]:
    """MAE over the least uncertain ``fraction`` of points (stable tie order)."""
    err, unc = _pair(abs_errors, uncertainties, "sparsification")
    order = np.argsort(unc, kind="stable")
    return {float(f): float(err[order[: _retained_count(f, err.size)]].mean()) for f in fractions}


def sparsification_curve(
    abs_errors: np.ndarray, uncertainties: np.ndarray, n_points: int = 100
) -> pd.DataFrame:
    """MAE at ``n_points`` evenly spaced retained fractions, next to the oracle ordering."""
    err, unc = _pair(abs_errors, uncertainties, "sparsification_curve")
    fractions = np.linspace(1.0 / n_points, 1.0, n_points)
    return pd.DataFrame(
        {
            "retained_fraction": fractions,
            "MAE": list(sparsification(err, unc, fractions).values()),
            "oracle_MAE": list(sparsification(err, err, fractions).values()),
        }
    )


@dataclass(frozen=True)
class Calibration:
    bins: pd.DataFrame
    coverage_2sigma: float


def calibration_bins(
    mu: np.ndarray, sigma: np.ndarray, targets: np.ndarray, n_bins: int = 10
) -> Calibration:
    """Equal-count bins by predicted sd with mean sd and mean |error| per bin.

    Bin edges are quantiles of ``sigma``; coinciding edges merge bins, so a
    constant ``sigma`` yields a single bin. ``expected_abs_error`` is the
    half-normal mean ``sigma * sqrt(2 / pi)`` a well-specified model would show.

    Raises:
        InvalidInputError: If ``n_bins`` exceeds the number of points or any
            sigma is not positive.
    """
    m, t = _pair(mu, targets, "calibration_bins")
    s, _ = _pair(sigma, targets, "calibration_bins")
    if np.any(s <= 0):
        raise InvalidInputError("Predicted sd must be positive")
    if n_bins < 1 or n_bins > s.size:
        raise InvalidInputError(f"n_bins={n_bins} must lie in 1..{s.size}")
    edges = np.unique(np.quantile(s, np.linspace(0, 1, n_bins + 1), method="inverted_cdf"))
    index = np.searchsorted(edges[1:-1], s, side="right")
    abs_err = np.abs(m - t)
    frame = (
        pd.DataFrame({"bin": index, "sigma": s, "abs_error": abs_err})
        .groupby("bin")
        .agg(n=("sigma", "size"), mean_sigma=("sigma", "mean"), mean_abs_error=("abs_error", "mean"))
        .reset_index()
    )
    frame["expected_abs_error"] = frame["mean_sigma"] * np.sqrt(2.0 / np.pi)
    coverage = float(np.mean(abs_err <= 2.0 * s))
    return Calibration(bins=frame, coverage_2sigma=coverage)


@dataclass(frozen=True)
class Correlation:
    pearson: float
    spearman: float


def error_variance_correlation(squared_errors: np.ndarray, variances: np.ndarray) -> Correlation:
    """Pearson (and Spearman) correlation of per-point squared error and variance.

    Raises:
        InvalidInputError: For fewer than 2 points or a constant series.
    """
    e, v = _pair(squared_errors, variances, "error_variance_correlation")
    if e.size < 2:
        raise InvalidInputError("Correlation needs at least 2 points")
    if np.ptp(e) == 0 or np.ptp(v) == 0:
        raise InvalidInputError("Correlation is undefined for a constant series")
    return Correlation(
        pearson=float(stats.pearsonr(e, v)[0]), spearman=float(stats.spearmanr(e, v)[0])
    )


def _stratum_table(
    frame: pd.DataFrame, key: str, strata: Sequence[object], optional: Sequence[object] = ()
) -> pd.DataFrame:
    rows = []
    for stratum in strata:
        part = frame[frame[key] == stratum]
        if part.empty and stratum not in optional:
            logger.warning(f"Empty {key} stratum {stratum!r}")
        rows.append(
            {
                key: stratum,
                "n": len(part),
                "MAE": part["abs_error"].mean() if len(part) else np.nan,
                "target_sd": part["target"].std() if len(part) > 1 else np.nan,
                "empty": part.empty,
            }
        )
    return pd.DataFrame(rows)


def age_deciles(ages: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decile index 0..9 per age (from the ages' own quantiles) and the 11 edges."""
    ages = np.asarray(ages, dtype=np.float64)
    edges = np.quantile(ages, np.linspace(0, 1, N_AGE_DECILES + 1))
    index = np.clip(np.searchsorted(edges[1:-1], ages, side="right"), 0, N_AGE_DECILES - 1)
    return index, edges


def stratified_mae(
    preds: np.ndarray, targets: np.ndarray, metadata: pd.DataFrame
) -> dict[str, pd.DataFrame]:
    """MAE and target sd per age decile and per sex.

    Deciles are computed on the evaluated examples themselves. Sex values other
    than ``F`` and ``M`` (missing ones included) form an ``unknown`` stratum.
    Strata without examples are kept in the tables with ``empty`` set.

    Args:
        preds: Predicted concentrations.
        targets: True concentrations.
        metadata: Frame with ``age`` and ``sex`` columns aligned with ``preds``.
    """
    p, t = _pair(preds, targets, "stratified_mae")
    if len(metadata) != p.size or not {"age", "sex"} <= set(metadata.columns):
        raise InvalidInputError("Metadata needs age and sex for every example")
    sex = metadata["sex"].where(metadata["sex"].isin(("F", "M")), UNKNOWN_SEX).to_numpy()
    frame = pd.DataFrame(
        {
            "abs_error": np.abs(p - t),
            "target": t,
            "age": metadata["age"].to_numpy(dtype=np.float64),
            "sex": sex,
        }
    )
    with_age = frame[np.isfinite(frame["age"])].copy()
    if len(with_age) < len(frame):
        logger.warning(f"{len(frame) - len(with_age)} examples have no age and are not age-stratified")
    tables: dict[str, pd.DataFrame] = {}
    if len(with_age):
        with_age["age_decile"], edges = age_deciles(with_age["age"].to_numpy())
        age_table = _stratum_table(with_age, "age_decile", range(N_AGE_DECILES))
        age_table.insert(1, "age_low", edges[:-1])
        age_table.insert(2, "age_high", edges[1:])
        tables["age"] = age_table
    n_unknown = int(np.sum(sex == UNKNOWN_SEX))
    if n_unknown:
        logger.warning(f"{n_unknown} examples have a sex other than F or M")
    tables["sex"] = _stratum_table(frame, "sex", SEX_STRATA, optional=(UNKNOWN_SEX,))
    return tables


__all__ = [
    "Calibration",
    "Correlation",
    "CumulativeAuroc",
    "DEFAULT_FRACTIONS",
    "RegressionMetrics",
    "SEX_STRATA",
    "UNKNOWN_SEX",
    "age_deciles",
    "auroc",
    "calibration_bins",
    "cumulative_macro_auroc",
    "error_variance_correlation",
    "regression_metrics",
    "sparsification",
    "sparsification_curve",
    "stratified_mae",
]

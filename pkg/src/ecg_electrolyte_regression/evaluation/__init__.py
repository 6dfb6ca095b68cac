"""Metrics and report emission."""

from ecg_electrolyte_regression.evaluation.metrics import (
    DEFAULT_FRACTIONS,
    Calibration,
    Correlation,
    CumulativeAuroc,
    RegressionMetrics,
    auroc,
    calibration_bins,
    cumulative_macro_auroc,
    error_variance_correlation,
    regression_metrics,
    sparsification,
    sparsification_curve,
    stratified_mae,
)
from ecg_electrolyte_regression.evaluation.report import EvalReport, format_mean_sd, summarize_seeds

__all__ = [
    "Calibration",
    "Correlation",
    "CumulativeAuroc",
    "DEFAULT_FRACTIONS",
    "EvalReport",
    "RegressionMetrics",
    "auroc",
    "calibration_bins",
    "cumulative_macro_auroc",
    "error_variance_correlation",
    "format_mean_sd",
    "regression_metrics",
    "sparsification",
    "sparsification_curve",
    "stratified_mae",
    "summarize_seeds",
]

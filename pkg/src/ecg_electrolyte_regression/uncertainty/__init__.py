"""Aleatoric, ensemble and last-layer Laplace uncertainty."""

from ecg_electrolyte_regression.uncertainty.ensemble import (
    Ensemble,
    EnsembleMember,
    MemberOutput,
    PredictiveDistribution,
    combine_members,
    combine_outputs,
    ensemble_predict,
    member_outputs,
)
from ecg_electrolyte_regression.uncertainty.laplace import (
    LaplacePosterior,
    fit_last_layer_laplace,
    last_layer_hessian,
    laplace_fit,
    laplace_variance,
    log_marginal_likelihood,
    select_prior_precision,
)

__all__ = [
    "Ensemble",
    "EnsembleMember",
    "LaplacePosterior",
    "MemberOutput",
    "PredictiveDistribution",
    "combine_members",
    "combine_outputs",
    "ensemble_predict",
    "fit_last_layer_laplace",
    "last_layer_hessian",
    "laplace_fit",
    "laplace_variance",
    "log_marginal_likelihood",
    "member_outputs",
    "select_prior_precision",
]

"""Last-layer Laplace approximation for the mean output of a Gaussian head.

With per-point variances held fixed the mean output is linear in the
last-layer weights, so the Hessian of the training NLL is exact:
``H = sum_i phi_i phi_i^T / sigma_i^2`` with ``phi`` augmented by a constant 1
for the bias. The posterior covariance is ``(H + tau I)^{-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ecg_electrolyte_regression.autodiff import Tensor, no_grad
from ecg_electrolyte_regression.config import LaplaceConfig
from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.logging_config import logger
from ecg_electrolyte_regression.models.data import ArrayDataset
from ecg_electrolyte_regression.models.heads import GaussianHead
from ecg_electrolyte_regression.models.network import ElectrolyteNet
from ecg_electrolyte_regression.models.predictor import extract_features
from ecg_electrolyte_regression.targets import TargetCodec


@dataclass(frozen=True)
class LaplacePosterior:
    """Gaussian posterior over the augmented mean-layer weights ``[w, b]``.

    Variances derived from it live on the scale the features and targets were
    given on (the z-scale for trained networks).
    """

    theta_map: np.ndarray
    covariance: np.ndarray
    prior_precision: float
    log_evidence: float | None = None

    @property
    def n_params(self) -> int:
        return int(self.theta_map.size)


def augment(features: np.ndarray) -> np.ndarray:
    """Append a constant-1 column for the bias."""
    phi = np.atleast_2d(np.asarray(features, dtype=np.float64))
    return np.hstack([phi, np.ones((len(phi), 1))])


def last_layer_hessian(features: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """Exact Hessian of the Gaussian NLL w.r.t. the augmented mean-layer weights."""
    phi = augment(features)
    v = np.asarray(variances, dtype=np.float64).ravel()
    if len(v) != len(phi) or np.any(v <= 0):
        raise InvalidInputError("Need one positive variance per feature row")
    return (phi / v[:, None]).T @ phi


def _factor(precision: np.ndarray) -> tuple[np.ndarray, bool]:
    try:
        return linalg.cho_factor(precision, lower=True)
    except linalg.LinAlgError as e:
        raise InvalidInputError(
            f"H + tau I is not positive definite; prior precision too small? ({e})"
        ) from e


def laplace_fit(
    features: np.ndarray,
    variances: np.ndarray,
    theta_map: np.ndarray,
    prior_precision: float,
) -> LaplacePosterior:
    """Posterior covariance ``(H + tau I)^{-1}`` through a Cholesky solve.

    Args:
        features: Training features, shape (N, D).
        variances: Predicted per-point variances, shape (N,), held fixed.
        theta_map: Trained weights ``[w, b]``, shape (D + 1,).
        prior_precision: Isotropic prior precision tau > 0.

    Raises:
        InvalidInputError: If tau is not positive or ``H + tau I`` is not
            positive definite.
    """
    if not prior_precision > 0:
        raise InvalidInputError(f"Prior precision must be positive, got {prior_precision}")
    H = last_layer_hessian(features, variances)
    theta_map = np.asarray(theta_map, dtype=np.float64).ravel()
    if theta_map.size != H.shape[0]:
        raise InvalidInputError(f"theta_map has {theta_map.size} entries, expected {H.shape[0]}")
    factor = _factor(H + prior_precision * np.eye(H.shape[0]))
    cov = linalg.cho_solve(factor, np.eye(H.shape[0]))
    cov = 0.5 * (cov + cov.T)
    return LaplacePosterior(theta_map=theta_map, covariance=cov, prior_precision=prior_precision)


def log_marginal_likelihood(
    features: np.ndarray,
    targets: np.ndarray,
    means: np.ndarray,
    variances: np.ndarray,
    theta_map: np.ndarray,
    prior_precision: float,
) -> float:
    """Laplace estimate of the log evidence for an isotropic Gaussian prior."""
    v = np.asarray(variances, dtype=np.float64)
    resid = np.asarray(targets, dtype=np.float64) - np.asarray(means, dtype=np.float64)
    log_lik = float(np.sum(-0.5 * np.log(2 * np.pi * v) - resid**2 / (2 * v)))
    H = last_layer_hessian(features, v)
    P = H.shape[0]
    factor = _factor(H + prior_precision * np.eye(P))
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    return (
        log_lik
        - 0.5 * prior_precision * float(np.dot(theta_map, theta_map))
        + 0.5 * P * np.log(prior_precision)
        - 0.5 * log_det
    )


def prior_precision_grid(cfg: LaplaceConfig) -> np.ndarray:
    return np.logspace(np.log10(cfg.grid_min), np.log10(cfg.grid_max), cfg.grid_points)


def select_prior_precision(
    features: np.ndarray,
    targets: np.ndarray,
    means: np.ndarray,
    variances: np.ndarray,
    theta_map: np.ndarray,
    grid: np.ndarray,
) -> tuple[float, float]:
    """Grid value of tau with the highest log evidence, and that evidence."""
    best_tau, best_ev = float(grid[0]), -np.inf
    for tau in grid:
        ev = log_marginal_likelihood(features, targets, means, variances, theta_map, float(tau))
        logger.debug(f"Laplace tau={tau:.3g} log evidence {ev:.3f}")
        if ev > best_ev:
            best_tau, best_ev = float(tau), ev
    return best_tau, float(best_ev)


def laplace_variance(posterior: LaplacePosterior, features: np.ndarray) -> np.ndarray:
    """Epistemic variance ``phi^T Sigma phi`` per feature row (bias included)."""
    phi = augment(features)
    if phi.shape[1] != posterior.n_params:
        raise InvalidInputError(
            f"Features have {phi.shape[1] - 1} columns, posterior expects {posterior.n_params - 1}"
        )
    v = np.einsum("nd,de,ne->n", phi, posterior.covariance, phi)
    return np.maximum(v, 0.0)


def _gaussian_outputs(model: ElectrolyteNet, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    model.eval()
    with no_grad():
        out = model.head(Tensor(features)).data
    return out[:, 0], np.exp(out[:, 1])


def fit_last_layer_laplace(
    model: ElectrolyteNet,
    data: ArrayDataset,
    codec: TargetCodec,
    cfg: LaplaceConfig | None = None,
    batch_size: int = 64,
) -> LaplacePosterior:
    """Fit the posterior of a trained Gaussian-head network on its training data.

    The prior precision comes from ``cfg.prior_precision`` when set, otherwise
    from maximising the log evidence over the configured grid.
    """
    if not isinstance(model.head, GaussianHead):
        raise InvalidInputError(f"Laplace needs a Gaussian head, got {model.kind.value}")
    cfg = cfg or LaplaceConfig()
    try:
        features = extract_features(model, data.x, batch_size=batch_size)
        means, variances = _gaussian_outputs(model, features)
        w, b = model.head.mean_layer()
        theta = np.append(w, b)
        evidence = None
        tau = cfg.prior_precision
        if tau is None:
            targets = np.asarray(codec.normalizer.apply(data.y))
            tau, evidence = select_prior_precision(
                features, targets, means, variances, theta, prior_precision_grid(cfg)
            )
        posterior = laplace_fit(features, variances, theta, tau)
    except Exception as e:
        logger.error(f"Failed to fit Laplace posterior: {e}")
        raise
    logger.info(f"Fitted last-layer Laplace posterior over {theta.size} weights (tau={tau:.3g})")
    return LaplacePosterior(
        theta_map=posterior.theta_map,
        covariance=posterior.covariance,
        prior_precision=tau,
        log_evidence=evidence,
    )


__all__ = [
    "LaplacePosterior",
    "augment",
    "fit_last_layer_laplace",
    "last_layer_hessian",
    "laplace_fit",
    "laplace_variance",
    "log_marginal_likelihood",
    "prior_precision_grid",
    "select_prior_precision",
]

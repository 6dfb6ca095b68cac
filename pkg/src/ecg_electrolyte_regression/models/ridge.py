"""Closed-form ridge regression on PCA features."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.logging_config import logger

DEFAULT_LAMBDA_GRID = tuple(10.0**e for e in range(-3, 5))


@dataclass(frozen=True)
class RidgeModel:
    weights: np.ndarray
    intercept: float = 0.0
    lam: float = 0.0


def ridge_fit(
    features: np.ndarray, targets: np.ndarray, lam: float, fit_intercept: bool = False
) -> RidgeModel:
    """Solve ``(X^T X + lam I) w = X^T y``.

    With ``fit_intercept`` the columns and targets are centred first so the
    intercept is not penalised.

    Raises:
        InvalidInputError: If ``lam`` is negative or the system is singular.
    """
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if X.shape[0] == 1 and np.ndim(features) == 1:
        X = X.T
    y = np.asarray(targets, dtype=np.float64).ravel()
    if len(X) != len(y) or len(y) == 0:
        raise InvalidInputError(f"Got {len(X)} feature rows for {len(y)} targets")
    if lam < 0:
        raise InvalidInputError(f"lam must be non-negative, got {lam}")
    x_mean = X.mean(axis=0) if fit_intercept else np.zeros(X.shape[1])
    y_mean = float(y.mean()) if fit_intercept else 0.0
    Xc, yc = X - x_mean, y - y_mean
    A = Xc.T @ Xc + lam * np.eye(X.shape[1])
    if lam == 0 and np.linalg.matrix_rank(A) < A.shape[0]:
        raise InvalidInputError("Singular normal equations at lam = 0; add regularisation")
    try:
        w = linalg.solve(A, Xc.T @ yc, assume_a="pos")
    except linalg.LinAlgError as e:
        raise InvalidInputError(f"Ridge system could not be solved: {e}") from e
    return RidgeModel(weights=w, intercept=y_mean - float(x_mean @ w), lam=lam)


def ridge_predict(model: RidgeModel, features: np.ndarray) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None] if model.weights.size == 1 else X[None, :]
    return X @ model.weights + model.intercept


def ridge_select(
    train_x: np.ndarray,
    train_y: np.ndarray,
    val_x: np.ndarray,
    val_y: np.ndarray,
    grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
) -> RidgeModel:
    """Fit on ``train`` for every ``lam`` in ``grid`` and keep the best validation MSE."""
    best: tuple[float, RidgeModel] | None = None
    for lam in grid:
        model = ridge_fit(train_x, train_y, lam, fit_intercept=True)
        mse = float(np.mean((ridge_predict(model, val_x) - val_y) ** 2))
        logger.debug(f"ridge lam={lam:.0e} validation MSE {mse:.5f}")
        if best is None or mse < best[0]:
            best = (mse, model)
    if best is None:
        raise InvalidInputError("Empty lambda grid")
    logger.info(f"Selected ridge lam={best[1].lam:.0e} (validation MSE {best[0]:.5f})")
    return best[1]


__all__ = ["DEFAULT_LAMBDA_GRID", "RidgeModel", "ridge_fit", "ridge_predict", "ridge_select"]

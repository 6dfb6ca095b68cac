"""Flattening and PCA features for the classical baseline."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import svds

from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.logging_config import logger
from ecg_electrolyte_regression.signal.records import ProcessedEcg

DEFAULT_COMPONENTS = 256
LANCZOS_MAXITER = 300
LANCZOS_TOL = 1e-10
LANCZOS_SEED = 0
MAX_DENSE_BYTES = 1 << 30


@dataclass(frozen=True)
class PcaModel:
    """Fitted principal components.

    Attributes:
        mean: Data mean of the flattened inputs.
        components: Orthonormal rows, one per component.
        eigenvalues: Covariance eigenvalues, non-increasing.
        total_variance: Trace of the training covariance.
    """

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    total_variance: float

    @property
    def n_components(self) -> int:
        return int(self.components.shape[0])

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        return self.eigenvalues / self.total_variance if self.total_variance > 0 else self.eigenvalues


def flatten(data: Sequence[ProcessedEcg] | np.ndarray) -> np.ndarray:
    """(n, D) matrix from records or an array whose first axis indexes samples."""
    if isinstance(data, np.ndarray):
        return data.reshape(data.shape[0], -1).astype(np.float64)
    if not data:
        raise InvalidInputError("Cannot flatten an empty record list")
    return np.stack([r.matrix.ravel() for r in data]).astype(np.float64)


def _orient(components: np.ndarray) -> np.ndarray:
    # Largest-magnitude entry of each component is positive.
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def pca_fit(
    train: Sequence[ProcessedEcg] | np.ndarray,
    n_components: int = DEFAULT_COMPONENTS,
    max_dense_bytes: int = MAX_DENSE_BYTES,
) -> PcaModel:
    """Fit the top ``n_components`` principal components.

    A thin SVD of the centred data is used when it fits in ``max_dense_bytes``;
    otherwise an ARPACK Lanczos solver with a fixed start vector.

    Args:
        train: Training records or an (n, ...) array.
        n_components: Number of components to keep.
        max_dense_bytes: Size limit for the dense decomposition.

    Returns:
        The fitted model.

    Raises:
        InvalidInputError: If there are fewer samples than components.
    """
    X = flatten(train)
    n, d = X.shape
    if n_components < 1 or n_components > min(n, d):
        raise InvalidInputError(
            f"Cannot fit {n_components} components from {n} samples of dimension {d}"
        )
    mean = X.mean(axis=0)
    Xc = X - mean
    total_variance = float(np.sum(Xc**2) / max(n - 1, 1))

    if Xc.nbytes <= max_dense_bytes or n_components >= min(n, d):
        _, s, vt = np.linalg.svd(Xc, full_matrices=False)
        s, vt = s[:n_components], vt[:n_components]
    else:
        v0 = np.random.default_rng(LANCZOS_SEED).standard_normal(min(n, d))
        _, s, vt = svds(Xc, k=n_components, tol=LANCZOS_TOL, maxiter=LANCZOS_MAXITER, v0=v0)
        order = np.argsort(s)[::-1]
        s, vt = s[order], vt[order]

    eigenvalues = s**2 / max(n - 1, 1)
    logger.debug(f"PCA on {n} x {d}: top eigenvalue {eigenvalues[0]:.4g}")
    return PcaModel(
        mean=mean, components=_orient(vt), eigenvalues=eigenvalues, total_variance=total_variance
    )


def pca_transform(model: PcaModel, ecg: ProcessedEcg | np.ndarray) -> np.ndarray:
    """Project one record (or a batch) onto the components: ``C (x - mean)``.

    Raises:
        InvalidInputError: If the input size does not match the model.
    """
    x = ecg.matrix if isinstance(ecg, ProcessedEcg) else np.asarray(ecg, dtype=np.float64)
    d = model.mean.size
    if x.size == d:
        return model.components @ (x.ravel() - model.mean)
    if x.ndim >= 2 and x[0].size == d:
        return (x.reshape(x.shape[0], d) - model.mean) @ model.components.T
    raise InvalidInputError(f"Input of shape {x.shape} does not match PCA dimension {d}")


def pca_inverse_transform(model: PcaModel, z: np.ndarray) -> np.ndarray:
    """Map component scores back to flattened input space."""
    return np.asarray(z) @ model.components + model.mean


__all__ = ["DEFAULT_COMPONENTS", "PcaModel", "flatten", "pca_fit", "pca_inverse_transform", "pca_transform"]

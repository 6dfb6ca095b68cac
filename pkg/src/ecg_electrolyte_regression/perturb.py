"""Out-of-distribution perturbations of preprocessed records."""

from __future__ import annotations

import numpy as np

from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.logging_config import logger
from ecg_electrolyte_regression.signal.records import ProcessedEcg

IDENTITY_SNR = 1e12


def noise_matrix(matrix: np.ndarray, snr: float, rng: np.random.Generator) -> np.ndarray:
    """``matrix`` plus white noise of power ``mean(matrix ** 2) / snr``."""
    if not snr > 0:
        raise InvalidInputError(f"SNR must be positive, got {snr}")
    if snr >= IDENTITY_SNR:
        return matrix
    power = float(np.mean(np.square(matrix)))
    if power == 0.0:
        logger.warning("Zero-power record has no defined SNR; left unperturbed")
        return matrix
    return matrix + rng.normal(0.0, np.sqrt(power / snr), size=matrix.shape)


def mask_matrix(matrix: np.ndarray, proportion: float, rng: np.random.Generator) -> np.ndarray:
    """Zero one contiguous segment, at the same position in every lead."""
    if not 0.0 <= proportion <= 1.0:
        raise InvalidInputError(f"Mask proportion must lie in [0, 1], got {proportion}")
    length = matrix.shape[-1]
    width = int(round(proportion * length))
    if width == 0:
        return matrix
    start = int(rng.integers(0, length - width + 1))
    masked = np.array(matrix, copy=True)
    masked[..., start : start + width] = 0.0
    return masked


def add_noise_snr(ecg: ProcessedEcg, snr: float, rng: np.random.Generator) -> ProcessedEcg:
    """Add Gaussian noise at signal-to-noise power ratio ``snr``.

    ``snr >= 1e12`` is treated as infinite. Zero-power records come back
    unchanged with a warning.
    """
    noisy = noise_matrix(ecg.matrix, snr, rng)
    return ecg if noisy is ecg.matrix else ecg.with_matrix(noisy)


def mask(ecg: ProcessedEcg, proportion: float, rng: np.random.Generator) -> ProcessedEcg:
    """Zero ``round(proportion * 4096)`` contiguous samples at a uniform random start."""
    masked = mask_matrix(ecg.matrix, proportion, rng)
    return ecg if masked is ecg.matrix else ecg.with_matrix(masked)


def perturb_batch(
    x: np.ndarray,
    rng: np.random.Generator,
    snr: float | None = None,
    proportion: float | None = None,
) -> np.ndarray:
    """Perturb every record of an (N, leads, L) batch with its own draw."""
    if (snr is None) == (proportion is None):
        raise InvalidInputError("Give exactly one of snr or proportion")
    out = np.empty_like(x)
    for i, matrix in enumerate(x):
        if snr is not None:
            out[i] = noise_matrix(matrix.astype(np.float64), snr, rng)
        else:
            out[i] = mask_matrix(matrix, proportion, rng)
    return out


__all__ = [
    "IDENTITY_SNR",
    "add_noise_snr",
    "mask",
    "mask_matrix",
    "noise_matrix",
    "perturb_batch",
]

"""Evaluation-mode inference."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ecg_electrolyte_regression.autodiff import Tensor, no_grad
from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.models.heads import HeadKind
from ecg_electrolyte_regression.models.network import ElectrolyteNet
from ecg_electrolyte_regression.signal.records import ProcessedEcg
from ecg_electrolyte_regression.targets import TargetCodec


@dataclass(frozen=True)
class Prediction:
    """Head-specific outputs in raw concentration units.

    ``mean`` is always present. ``variance`` is the aleatoric estimate of a
    Gaussian head; ``cumulative_scores[:, i]`` scores the event class <= i + 1
    for discretised heads.
    """

    kind: HeadKind
    mean: np.ndarray
    variance: np.ndarray | None = None
    probabilities: np.ndarray | None = None
    rank_probabilities: np.ndarray | None = None
    classes: np.ndarray | None = None
    cumulative_scores: np.ndarray | None = None


def _as_batch(x: ProcessedEcg | np.ndarray, in_leads: int) -> np.ndarray:
    arr = x.matrix if isinstance(x, ProcessedEcg) else np.asarray(x)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1] != in_leads:
        raise InvalidInputError(f"Expected records of shape (N, {in_leads}, L), got {arr.shape}")
    return arr


def _run(model: ElectrolyteNet, x: np.ndarray, batch_size: int, features_only: bool) -> np.ndarray:
    model.eval()
    outputs = []
    with no_grad():
        for i in range(0, len(x), batch_size):
            batch = Tensor(x[i : i + batch_size])
            out = model.features(batch) if features_only else model(batch)
            outputs.append(out.data)
    return np.concatenate(outputs, axis=0)


def extract_features(
    model: ElectrolyteNet, x: ProcessedEcg | np.ndarray, batch_size: int = 64
) -> np.ndarray:
    """Backbone features (N, D) in evaluation mode."""
    return _run(model, _as_batch(x, model.backbone.cfg.in_leads), batch_size, features_only=True)


def predict_from_features(
    model: ElectrolyteNet, features: np.ndarray, codec: TargetCodec
) -> Prediction:
    """Apply only the head to precomputed feature vectors."""
    features = np.atleast_2d(features)
    if features.shape[1] != model.backbone.output_dim:
        raise InvalidInputError(
            f"Expected {model.backbone.output_dim} features, got {features.shape[1]}"
        )
    model.eval()
    with no_grad():
        out = model.head(Tensor(features)).data
    return Prediction(kind=model.kind, **_decode(model, out, codec))


def _decode(model: ElectrolyteNet, out: np.ndarray, codec: TargetCodec) -> dict[str, np.ndarray]:
    decoded = model.head.decode(out, codec)
    decoded.pop("z_mean", None)
    decoded.pop("z_variance", None)
    return decoded


def predict(
    model: ElectrolyteNet,
    x: ProcessedEcg | np.ndarray,
    codec: TargetCodec,
    batch_size: int = 64,
) -> Prediction:
    """Deterministic predictions for one record or a batch.

    Args:
        model: Trained network; it is switched to evaluation mode.
        x: A `ProcessedEcg`, a single (leads, L) matrix or an (N, leads, L) batch.
        codec: Codec the model was trained with.
        batch_size: Inference batch size.

    Raises:
        InvalidInputError: On a lead-count or shape mismatch.
    """
    batch = _as_batch(x, model.backbone.cfg.in_leads)
    out = _run(model, batch, batch_size, features_only=False)
    return Prediction(kind=model.kind, **_decode(model, out, codec))


__all__ = ["Prediction", "extract_features", "predict", "predict_from_features"]

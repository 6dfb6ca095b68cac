"""Output heads, their losses and their decoding to concentrations.

Every head maps (N, D) backbone features to an (N, n_outputs) tensor:

    direct          1 output, the z-scored concentration (MSE)
    gaussian        2 outputs, mean and log-variance on the z-scale (NLL)
    classification  k logits (cross-entropy)
    ordinal         k - 1 rank logits sharing one weight vector (binary CE)
"""

from __future__ import annotations

from enum import Enum
from math import log, pi

import numpy as np

from ecg_electrolyte_regression.autodiff import Linear, Module, Parameter, Tensor, as_tensor
from ecg_electrolyte_regression.autodiff.functional import log_softmax, softmax
from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.targets import TargetCodec, class_to_concentration

HALF_LOG_2PI = 0.5 * log(2 * pi)


class HeadKind(str, Enum):
    DIRECT = "direct"
    GAUSSIAN = "gaussian"
    CLASSIFICATION = "classification"
    ORDINAL = "ordinal"

    @property
    def discretized(self) -> bool:
        return self in (HeadKind.CLASSIFICATION, HeadKind.ORDINAL)


def mse_loss(pred: Tensor, target: Tensor | np.ndarray) -> Tensor:
    return ((pred - as_tensor(target)) ** 2).mean()


def gaussian_nll(
    mu: Tensor | np.ndarray, log_var: Tensor | np.ndarray, y: Tensor | np.ndarray
) -> Tensor:
    """Mean Gaussian negative log-likelihood with a log-variance parameterisation.

    ``0.5 * log_var + (y - mu)^2 / (2 exp(log_var)) + 0.5 * log(2 pi)`` per point.
    """
    mu, log_var, y = as_tensor(mu), as_tensor(log_var), as_tensor(y)
    per_point = log_var * 0.5 + (y - mu) ** 2 / (log_var.exp() * 2.0) + HALF_LOG_2PI
    return per_point.mean()


def cross_entropy(logits: Tensor, classes: np.ndarray) -> Tensor:
    """Mean categorical cross-entropy against zero-based class indices."""
    classes = np.asarray(classes, dtype=int)
    one_hot = np.zeros(logits.shape)
    one_hot[np.arange(len(classes)), classes] = 1.0
    return -(log_softmax(logits, axis=1) * one_hot).sum(axis=1).mean()


def binary_cross_entropy_with_logits(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Binary CE summed over ranks and averaged over the batch."""
    t = np.asarray(targets, dtype=np.float64)
    return (logits.softplus() - logits * t).sum(axis=1).mean()


class Head(Module):
    kind: HeadKind
    n_outputs: int

    def loss(self, out: Tensor, targets: np.ndarray) -> Tensor:
        raise NotImplementedError

    def targets(self, y: np.ndarray, codec: TargetCodec) -> np.ndarray:
        """Training targets for raw concentrations ``y``."""
        return np.asarray(codec.normalizer.apply(y), dtype=np.float64)

    def decode(self, out: np.ndarray, codec: TargetCodec) -> dict[str, np.ndarray]:
        raise NotImplementedError


class DirectHead(Head):
    kind = HeadKind.DIRECT
    n_outputs = 1

    def __init__(self, in_features: int, rng: np.random.Generator) -> None:
        self.linear = Linear(in_features, 1, rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.linear(x)

    def loss(self, out: Tensor, targets: np.ndarray) -> Tensor:
        return mse_loss(out[:, 0], targets)

    def decode(self, out: np.ndarray, codec: TargetCodec) -> dict[str, np.ndarray]:
        return {"mean": np.asarray(codec.normalizer.invert(out[:, 0]))}


class GaussianHead(Head):
    """Mean and log-variance from one linear layer; column 0 is the mean."""

    kind = HeadKind.GAUSSIAN
    n_outputs = 2

    def __init__(self, in_features: int, rng: np.random.Generator) -> None:
        self.linear = Linear(in_features, 2, rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.linear(x)

    def loss(self, out: Tensor, targets: np.ndarray) -> Tensor:
        return gaussian_nll(out[:, 0], out[:, 1], targets)

    def mean_layer(self) -> tuple[np.ndarray, float]:
        """Weights and bias producing the mean output."""
        return self.linear.weight.data[:, 0].copy(), float(self.linear.bias.data[0])

    def decode(self, out: np.ndarray, codec: TargetCodec) -> dict[str, np.ndarray]:
        return {
            "mean": np.asarray(codec.normalizer.invert(out[:, 0])),
            "variance": np.asarray(codec.normalizer.invert_variance(np.exp(out[:, 1]))),
            "z_mean": out[:, 0].copy(),
            "z_variance": np.exp(out[:, 1]),
        }


class ClassificationHead(Head):
    kind = HeadKind.CLASSIFICATION

    def __init__(self, in_features: int, k: int, rng: np.random.Generator) -> None:
        if k < 2:
            raise InvalidInputError(f"Need at least 2 classes, got k={k}")
        self.k = k
        self.n_outputs = k
        self.linear = Linear(in_features, k, rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.linear(x)

    def targets(self, y: np.ndarray, codec: TargetCodec) -> np.ndarray:
        return codec.class_targets(y)

    def loss(self, out: Tensor, targets: np.ndarray) -> Tensor:
        return cross_entropy(out, targets)

    def decode(self, out: np.ndarray, codec: TargetCodec) -> dict[str, np.ndarray]:
        probs = softmax(Tensor(out), axis=1).data
        classes = np.argmax(probs, axis=1) + 1
        return {
            "probabilities": probs,
            "classes": classes,
            "cumulative_scores": np.cumsum(probs, axis=1)[:, :-1],
            "mean": np.asarray(class_to_concentration(classes, codec.discretizer)),
        }


class OrdinalHead(Head):
    """Rank-consistent head: one shared weight vector and ordered biases.

    Biases are ``c, c - e^{d_1}, c - e^{d_1} - e^{d_2}, ...`` so the k - 1
    logits are strictly decreasing in rank for every input.
    """

    kind = HeadKind.ORDINAL

    def __init__(self, in_features: int, k: int, rng: np.random.Generator) -> None:
        if k < 2:
            raise InvalidInputError(f"Need at least 2 classes, got k={k}")
        self.k = k
        self.n_outputs = k - 1
        bound = 1.0 / np.sqrt(in_features)
        self.weight = Parameter(rng.uniform(-bound, bound, size=(in_features, 1)))
        self.first_bias = Parameter(np.array(float(k - 2) / 2))
        self.log_gaps = Parameter(np.zeros(k - 2))
        self._cumulate = np.tril(np.ones((k - 1, k - 2)), -1)

    def biases(self) -> Tensor:
        ones = np.ones(self.k - 1)
        if self.k == 2:
            return self.first_bias * ones
        return self.first_bias * ones - Tensor(self._cumulate) @ self.log_gaps.exp()

    def forward(self, x: Tensor) -> Tensor:
        return x @ self.weight + self.biases()

    def targets(self, y: np.ndarray, codec: TargetCodec) -> np.ndarray:
        return codec.ordinal_targets(y)

    def loss(self, out: Tensor, targets: np.ndarray) -> Tensor:
        return binary_cross_entropy_with_logits(out, targets)

    def decode(self, out: np.ndarray, codec: TargetCodec) -> dict[str, np.ndarray]:
        rank_probs = Tensor(out).sigmoid().data
        classes = 1 + np.sum(rank_probs > 0.5, axis=1)
        return {
            "rank_probabilities": rank_probs,
            "classes": classes,
            "cumulative_scores": 1.0 - rank_probs,
            "mean": np.asarray(class_to_concentration(classes, codec.discretizer)),
        }


def build_head(
    kind: HeadKind | str, in_features: int, rng: np.random.Generator, k: int | None = None
) -> Head:
    """Instantiate a head; discretised heads need ``k``, regression heads reject it."""
    kind = HeadKind(kind)
    if kind.discretized:
        if k is None:
            raise InvalidInputError(f"The {kind.value} head needs a class count k")
        cls = ClassificationHead if kind is HeadKind.CLASSIFICATION else OrdinalHead
        return cls(in_features, k, rng)
    if k is not None:
        raise InvalidInputError(f"The {kind.value} head does not take a class count")
    return DirectHead(in_features, rng) if kind is HeadKind.DIRECT else GaussianHead(in_features, rng)


__all__ = [
    "ClassificationHead",
    "DirectHead",
    "GaussianHead",
    "Head",
    "HeadKind",
    "OrdinalHead",
    "binary_cross_entropy_with_logits",
    "build_head",
    "cross_entropy",
    "gaussian_nll",
    "mse_loss",
]

"""Adam and a plateau learning-rate schedule."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from ecg_electrolyte_regression.autodiff.modules import Parameter
from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.logging_config import logger


def adam_step(
    params: Sequence[Parameter],
    grads: Sequence[np.ndarray | None] | None = None,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Apply one bias-corrected Adam update in place.

    Args:
        params: Parameters to update; each carries its moments and step count.
        grads: Gradients aligned with ``params``; defaults to ``p.grad``.
            A missing gradient is treated as zero.
        lr: Learning rate.
        beta1: First-moment decay.
        beta2: Second-moment decay.
        eps: Denominator offset.
    """
    if grads is None:
        grads = [p.grad for p in params]
    if len(grads) != len(params):
        raise InvalidInputError(f"Got {len(grads)} gradients for {len(params)} parameters")
    for p, g in zip(params, grads, strict=True):
        g = np.zeros_like(p.data) if g is None else np.asarray(g, dtype=np.float64)
        p.step += 1
        p.m = beta1 * p.m + (1 - beta1) * g
        p.v = beta2 * p.v + (1 - beta2) * g * g
        m_hat = p.m / (1 - beta1**p.step)
        v_hat = p.v / (1 - beta2**p.step)
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)


class Adam:
    """Stateful wrapper over `adam_step` with a mutable learning rate."""

    def __init__(
        self,
        params: Sequence[Parameter],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ) -> None:
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps

    def step(self) -> None:
        adam_step(self.params, lr=self.lr, beta1=self.betas[0], beta2=self.betas[1], eps=self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


class ReduceLROnPlateau:
    """Multiply the learning rate by ``factor`` after ``patience`` epochs without improvement.

    An epoch improves when the metric drops below ``best * (1 - threshold)``.
    """

    def __init__(
        self,
        optimizer: Adam,
        factor: float = 0.1,
        patience: int = 7,
        min_lr: float = 0.0,
        threshold: float = 1e-4,
    ) -> None:
        if not 0.0 < factor < 1.0:
            raise InvalidInputError(f"factor must lie in (0, 1), got {factor}")
        self.optimizer = optimizer
        self.factor = factor
        self.patience = patience
        self.min_lr = min_lr
        self.threshold = threshold
        self.best = float("inf")
        self.num_bad_epochs = 0

    def step(self, metric: float) -> bool:
        """Record an epoch metric; returns True when the rate was reduced."""
        if metric < self.best * (1 - self.threshold):
            self.best = metric
            self.num_bad_epochs = 0
            return False
        self.num_bad_epochs += 1
        if self.num_bad_epochs <= self.patience:
            return False
        self.num_bad_epochs = 0
        new_lr = max(self.optimizer.lr * self.factor, self.min_lr)
        if new_lr < self.optimizer.lr:
            logger.info(f"Reducing learning rate {self.optimizer.lr:.2e} -> {new_lr:.2e}")
            self.optimizer.lr = new_lr
            return True
        return False


__all__ = ["Adam", "ReduceLROnPlateau", "adam_step"]

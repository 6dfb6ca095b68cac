"""Finite-difference verification of backward closures."""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

from ecg_electrolyte_regression.autodiff.tensor import Tensor


def numerical_gradient(
    fn: Callable[..., Tensor], inputs: Sequence[Tensor], index: int, h: float = 1e-6
) -> np.ndarray:
    """Central differences of ``fn(*inputs).sum()`` with respect to ``inputs[index]``."""
    target = inputs[index]
    grad = np.zeros_like(target.data)
    flat = target.data.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        plus = float(fn(*inputs).data.sum())
        flat[i] = original - h
        minus = float(fn(*inputs).data.sum())
        flat[i] = original
        grad.reshape(-1)[i] = (plus - minus) / (2 * h)
    return grad


def gradcheck(
    fn: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    h: float = 1e-6,
    rtol: float = 1e-4,
    atol: float = 1e-6,
) -> bool:
    """Compare analytic and numerical gradients for every input requiring grad.

    Returns:
        True when every gradient agrees within ``atol + rtol * |numerical|``.
    """
    for t in inputs:
        t.zero_grad()
    fn(*inputs).sum().backward()
    analytic = [None if t.grad is None else t.grad.copy() for t in inputs]
    for i, t in enumerate(inputs):
        if not t.requires_grad:
            continue
        numeric = numerical_gradient(fn, inputs, i, h=h)
        got = analytic[i] if analytic[i] is not None else np.zeros_like(numeric)
        if not np.allclose(got, numeric, rtol=rtol, atol=atol):
            return False
    return True


__all__ = ["gradcheck", "numerical_gradient"]

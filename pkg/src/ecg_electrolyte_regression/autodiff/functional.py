"""Network operations with hand-written backward closures."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ecg_electrolyte_regression.autodiff.tensor import Tensor
from ecg_electrolyte_regression.errors import InvalidInputError


def conv1d(
    x: Tensor,
    weight: Tensor,
    bias: Tensor | None = None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """Cross-correlation of ``x`` (N, C_in, L) with ``weight`` (C_out, C_in, K).

    Output length is ``(L + 2 * padding - K) // stride + 1``.
    """
    if x.ndim != 3 or weight.ndim != 3 or x.shape[1] != weight.shape[1]:
        raise InvalidInputError(f"conv1d shape mismatch: x {x.shape}, weight {weight.shape}")
    if stride < 1 or padding < 0:
        raise InvalidInputError(f"Invalid stride {stride} or padding {padding}")
    n, _, length = x.shape
    kernel = weight.shape[2]
    padded = np.pad(x.data, ((0, 0), (0, 0), (padding, padding)))
    if padded.shape[2] < kernel:
        raise InvalidInputError(f"Input of length {length} is shorter than kernel {kernel}")

    windows = sliding_window_view(padded, kernel, axis=2)[:, :, ::stride, :]
    out = np.einsum("nclk,ock->nol", windows, weight.data, optimize=True)
    if bias is not None:
        out = out + bias.data[None, :, None]
    out_len = out.shape[2]

    def backward(g: np.ndarray) -> None:
        weight._push(np.einsum("nol,nclk->ock", g, windows, optimize=True))
        if bias is not None:
            bias._push(g.sum(axis=(0, 2)))
        if x.requires_grad:
            grad_padded = np.zeros_like(padded)
            # Each kernel tap k reads positions k, k+stride, ...
            contrib = np.einsum("nol,ock->nclk", g, weight.data, optimize=True)
            for k in range(kernel):
                grad_padded[:, :, k : k + stride * out_len : stride] += contrib[..., k]
            x._push(grad_padded[:, :, padding : padding + length])

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.make(out, parents, "conv1d", backward)


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """Per-channel normalisation of (N, C) or (N, C, L) inputs.

    In training mode batch statistics are used and the running buffers are
    updated in place (unbiased variance); in evaluation mode the running
    buffers are used.
    """
    if x.ndim not in (2, 3):
        raise InvalidInputError(f"batch_norm expects 2-D or 3-D input, got {x.shape}")
    axes = (0,) if x.ndim == 2 else (0, 2)
    shape = (1, -1) if x.ndim == 2 else (1, -1, 1)
    g_ = gamma.data.reshape(shape)
    b_ = beta.data.reshape(shape)

    if training:
        m = x.data.size // x.shape[1]
        if m < 2:
            raise InvalidInputError("batch_norm in training mode needs more than one value per channel")
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean *= 1 - momentum
        running_mean += momentum * mean
        running_var *= 1 - momentum
        running_var += momentum * var * m / (m - 1)
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = (x.data - mean.reshape(shape)) * inv_std.reshape(shape)

        def backward(g: np.ndarray) -> None:
            gamma._push(np.sum(g * xhat, axis=axes))
            beta._push(np.sum(g, axis=axes))
            dxhat = g * g_
            sum_d = dxhat.sum(axis=axes, keepdims=True)
            sum_dx = (dxhat * xhat).sum(axis=axes, keepdims=True)
            x._push(inv_std.reshape(shape) / m * (m * dxhat - sum_d - xhat * sum_dx))

    else:
        inv_std = 1.0 / np.sqrt(running_var + eps)
        xhat = (x.data - running_mean.reshape(shape)) * inv_std.reshape(shape)

        def backward(g: np.ndarray) -> None:
            gamma._push(np.sum(g * xhat, axis=axes))
            beta._push(np.sum(g, axis=axes))
            x._push(g * g_ * inv_std.reshape(shape))

    return Tensor.make(g_ * xhat + b_, (x, gamma, beta), "batch_norm", backward)


def dropout(x: Tensor, rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout; identity when not training or when ``rate`` is 0."""
    if not 0.0 <= rate < 1.0:
        raise InvalidInputError(f"Dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return Tensor.make(x.data * mask, (x,), "dropout", lambda g: x._push(g * mask))


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    probs = np.exp(out)

    def backward(g: np.ndarray) -> None:
        x._push(g - probs * g.sum(axis=axis, keepdims=True))

    return Tensor.make(out, (x,), "log_softmax", backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    return log_softmax(x, axis=axis).exp()


def global_average_pool(x: Tensor) -> Tensor:
    """Mean over the time axis of an (N, C, L) tensor."""
    return x.mean(axis=2)


__all__ = ["batch_norm", "conv1d", "dropout", "global_average_pool", "log_softmax", "softmax"]

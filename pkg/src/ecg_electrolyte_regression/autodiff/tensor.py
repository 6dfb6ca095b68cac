"""Reverse-mode automatic differentiation over numpy arrays.

Every operation builds a node holding its value, its parents and a closure that
pushes the output gradient back to the parents. The graph is rebuilt on each
forward pass; `Tensor.backward` walks it once in reverse topological order.
"""

from __future__ import annotations

from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from typing import Any

import numpy as np

from ecg_electrolyte_regression.errors import InvalidInputError, NonFiniteError

_debug = False
_grad_enabled = True


@contextmanager
def debug_mode(enabled: bool = True) -> Iterator[None]:
    """Abort with `NonFiniteError` as soon as any op produces NaN or inf."""
    global _debug
    previous, _debug = _debug, enabled
    try:
        yield
    finally:
        _debug = previous


@contextmanager
def no_grad() -> Iterator[None]:
    """Run ops without recording the graph."""
    global _grad_enabled
    previous, _grad_enabled = _grad_enabled, False
    try:
        yield
    finally:
        _grad_enabled = previous


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """An array value with an optional gradient slot and graph linkage."""

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        _parents: Sequence[Tensor] = (),
        _op: str = "",
    ) -> None:
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents = tuple(_parents)
        self._backward: Callable[[np.ndarray], None] | None = None
        self._op = _op

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self._op or 'leaf'})"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, grad: np.ndarray) -> None:
        if not self.requires_grad:
            return
        grad = _unbroadcast(np.asarray(grad, dtype=np.float64), self.shape)
        self.grad = grad.copy() if self.grad is None else self.grad + grad

    @staticmethod
    def make(
        data: np.ndarray,
        parents: Sequence[Tensor],
        op: str,
        backward: Callable[[np.ndarray], None],
    ) -> Tensor:
        """Create an op output and attach its backward closure when needed."""
        if _debug and not np.all(np.isfinite(data)):
            raise NonFiniteError(f"{op} produced non-finite values")
        track = _grad_enabled and any(p.requires_grad for p in parents)
        out = Tensor(data, requires_grad=track, _parents=parents if track else (), _op=op)
        if track:
            out._backward = backward
        return out

    def backward(self, grad: np.ndarray | None = None) -> None:
        """Accumulate d(self)/d(leaf) into every leaf that requires a gradient."""
        if grad is None:
            if self.data.size != 1:
                raise InvalidInputError("backward() without a seed needs a scalar output")
            grad = np.ones_like(self.data)

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            stack.extend((p, False) for p in node._parents if id(p) not in seen)

        self.grad = np.asarray(grad, dtype=np.float64).copy()
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def _push(self, grad: np.ndarray) -> None:
        """Accumulate a gradient handed back by a child op."""
        self._accumulate(grad)

    # arithmetic

    def __add__(self, other: Any) -> Tensor:
        other = as_tensor(other)

        def backward(g: np.ndarray) -> None:
            self._push(g)
            other._push(g)

        return Tensor.make(self.data + other.data, (self, other), "add", backward)

    __radd__ = __add__

    def __neg__(self) -> Tensor:
        return Tensor.make(-self.data, (self,), "neg", lambda g: self._push(-g))

    def __sub__(self, other: Any) -> Tensor:
        other = as_tensor(other)

        def backward(g: np.ndarray) -> None:
            self._push(g)
            other._push(-g)

        return Tensor.make(self.data - other.data, (self, other), "sub", backward)

    def __rsub__(self, other: Any) -> Tensor:
        return as_tensor(other) - self

    def __mul__(self, other: Any) -> Tensor:
        other = as_tensor(other)

        def backward(g: np.ndarray) -> None:
            self._push(g * other.data)
            other._push(g * self.data)

        return Tensor.make(self.data * other.data, (self, other), "mul", backward)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> Tensor:
        other = as_tensor(other)

        def backward(g: np.ndarray) -> None:
            self._push(g / other.data)
            other._push(-g * self.data / other.data**2)

        return Tensor.make(self.data / other.data, (self, other), "div", backward)

    def __rtruediv__(self, other: Any) -> Tensor:
        return as_tensor(other) / self

    def __pow__(self, exponent: float) -> Tensor:
        if isinstance(exponent, Tensor):
            raise InvalidInputError("Only constant exponents are supported")
        out = self.data**exponent
        return Tensor.make(
            out,
            (self,),
            "pow",
            lambda g: self._push(g * exponent * self.data ** (exponent - 1)),
        )

    def __matmul__(self, other: Any) -> Tensor:
        return matmul(self, as_tensor(other))

    # reductions and shape

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        def backward(g: np.ndarray) -> None:
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._push(np.broadcast_to(g, self.shape))

        return Tensor.make(self.data.sum(axis=axis, keepdims=keepdims), (self,), "sum", backward)

    def mean(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        count = self.data.size if axis is None else int(np.prod(np.array(self.shape)[np.atleast_1d(axis)]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape: int) -> Tensor:
        original = self.shape
        return Tensor.make(
            self.data.reshape(*shape), (self,), "reshape", lambda g: self._push(g.reshape(original))
        )

    def __getitem__(self, index: Any) -> Tensor:
        def backward(g: np.ndarray) -> None:
            full = np.zeros_like(self.data)
            np.add.at(full, index, g)
            self._push(full)

        return Tensor.make(self.data[index], (self,), "getitem", backward)

    # elementwise functions

    def exp(self) -> Tensor:
        out = np.exp(self.data)
        return Tensor.make(out, (self,), "exp", lambda g: self._push(g * out))

    def log(self) -> Tensor:
        return Tensor.make(np.log(self.data), (self,), "log", lambda g: self._push(g / self.data))

    def relu(self) -> Tensor:
        mask = self.data > 0
        return Tensor.make(self.data * mask, (self,), "relu", lambda g: self._push(g * mask))

    def sigmoid(self) -> Tensor:
        out = _stable_sigmoid(self.data)
        return Tensor.make(out, (self,), "sigmoid", lambda g: self._push(g * out * (1 - out)))

    def softplus(self) -> Tensor:
        """``log(1 + exp(x))`` computed without overflow."""
        out = np.logaddexp(0.0, self.data)
        return Tensor.make(
            out, (self,), "softplus", lambda g: self._push(g * _stable_sigmoid(self.data))
        )


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -x))


def as_tensor(value: Any) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of 2-D (or 1-D) operands."""
    if a.ndim > 2 or b.ndim > 2:
        raise InvalidInputError(f"matmul supports 1-D/2-D operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[0]:
        raise InvalidInputError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def backward(g: np.ndarray) -> None:
        a2 = a.data.reshape(-1, a.shape[-1]) if a.ndim == 1 else a.data
        b2 = b.data.reshape(b.shape[0], -1) if b.ndim == 1 else b.data
        g2 = g.reshape(a2.shape[0], b2.shape[1])
        a._push((g2 @ b2.T).reshape(a.shape))
        b._push((a2.T @ g2).reshape(b.shape))

    return Tensor.make(a.data @ b.data, (a, b), "matmul", backward)


__all__ = ["Tensor", "as_tensor", "debug_mode", "matmul", "no_grad"]

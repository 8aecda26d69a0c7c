"""Reverse-mode automatic differentiation over 2-D numpy arrays.

Every value is a matrix (rows, cols). Operations record a backward closure
when any input requires a gradient; :meth:`Tensor.backward` replays them in
reverse topological order. Row vectors are the convention: a batch of ``m``
hidden states of width ``d`` is an ``(m, d)`` tensor.
"""
from __future__ import annotations

import contextlib

import numpy as np
from scipy.special import erf

from ..errors import ShapeMismatch

_GRAD_ENABLED = True
_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@contextlib.contextmanager
def no_grad():
    global _GRAD_ENABLED
    prev, _GRAD_ENABLED = _GRAD_ENABLED, False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, name=None):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise ShapeMismatch(f"tensors are 2-D, got shape {arr.shape}")
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def numpy(self):
        return self.data

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    def _accum(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def zero_grad(self):
        self.grad = None

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ShapeMismatch("backward() without a seed needs a scalar")
            grad = np.ones_like(self.data)
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self._accum(grad)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
                # interior nodes do not keep their gradients
                node.grad = None
                node._backward = None
                node._parents = ()

    # operator sugar
    def __add__(self, other):
        return add(self, _lift(other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_lift(other)))

    def __rsub__(self, other):
        return add(_lift(other), neg(self))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data, parents, backward) -> Tensor:
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    if shape[0] == 1 and g.shape[0] != 1:
        g = g.sum(axis=0, keepdims=True)
    if shape[1] == 1 and g.shape[1] != 1:
        g = g.sum(axis=1, keepdims=True)
    return g


def _check_broadcast(a, b, op):
    for x, y in zip(a.shape, b.shape):
        if x != y and x != 1 and y != 1:
            raise ShapeMismatch(f"{op}: incompatible shapes {a.shape} and {b.shape}")


# --------------------------------------------------------------------------
# elementwise


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "add")

    def backward(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g, b.shape))

    return _result(a.data + b.data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "mul")

    def backward(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g * a.data, b.shape))

    return _result(a.data * b.data, (a, b), backward)


def neg(a: Tensor) -> Tensor:
    return _result(-a.data, (a,), lambda g: a._accum(-g))


def scale(a: Tensor, c: float) -> Tensor:
    return _result(a.data * c, (a,), lambda g: a._accum(g * c))


def one_minus(a: Tensor) -> Tensor:
    return _result(1.0 - a.data, (a,), lambda g: a._accum(-g))


def sigmoid(a: Tensor) -> Tensor:
    y = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return _result(y, (a,), lambda g: a._accum(g * y * (1.0 - y)))


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    return _result(y, (a,), lambda g: a._accum(g * (1.0 - y * y)))


def gelu(a: Tensor) -> Tensor:
    """Exact GELU, x * Phi(x)."""
    x = a.data
    cdf = 0.5 * (1.0 + erf(x / _SQRT2))

    def backward(g):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
        a._accum(g * (cdf + x * pdf))

    return _result(x * cdf, (a,), backward)


def log(a: Tensor) -> Tensor:
    x = a.data
    return _result(np.log(x), (a,), lambda g: a._accum(g / x))


def dropout(a: Tensor, p: float, rng: np.random.Generator | None, training: bool) -> Tensor:
    """Inverted dropout; identity outside training or when ``p == 0``."""
    if not training or p <= 0.0:
        return a
    keep = (rng.random(a.shape) >= p) / (1.0 - p)
    return _result(a.data * keep, (a,), lambda g: a._accum(g * keep))


# --------------------------------------------------------------------------
# linear algebra and reshaping


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul: {a.shape} @ {b.shape}")

    def backward(g):
        if a.requires_grad:
            a._accum(g @ b.data.T)
        if b.requires_grad:
            b._accum(a.data.T @ g)

    return _result(a.data @ b.data, (a, b), backward)


def matmul_t(a: Tensor, b: Tensor) -> Tensor:
    """``a @ b.T`` without materializing a transpose node."""
    if a.shape[1] != b.shape[1]:
        raise ShapeMismatch(f"matmul_t: {a.shape} @ {b.shape}^T")

    def backward(g):
        if a.requires_grad:
            a._accum(g @ b.data)
        if b.requires_grad:
            b._accum(g.T @ a.data)

    return _result(a.data @ b.data.T, (a, b), backward)


def take_rows(a: Tensor, idx) -> Tensor:
    idx = np.asarray(idx, dtype=np.intp)

    def backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, idx, g)
        a._accum(full)

    return _result(a.data[idx], (a,), backward)


def cols(a: Tensor, start: int, stop: int) -> Tensor:
    def backward(g):
        full = np.zeros_like(a.data)
        full[:, start:stop] = g
        a._accum(full)

    return _result(a.data[:, start:stop], (a,), backward)


def concat_rows(parts: list[Tensor]) -> Tensor:
    if len(parts) == 1:
        return parts[0]
    sizes = np.cumsum([p.shape[0] for p in parts])[:-1]

    def backward(g):
        for p, chunk in zip(parts, np.split(g, sizes, axis=0)):
            if p.requires_grad:
                p._accum(chunk)

    return _result(np.concatenate([p.data for p in parts], axis=0), tuple(parts), backward)


def concat_cols(parts: list[Tensor]) -> Tensor:
    if len(parts) == 1:
        return parts[0]
    sizes = np.cumsum([p.shape[1] for p in parts])[:-1]

    def backward(g):
        for p, chunk in zip(parts, np.split(g, sizes, axis=1)):
            if p.requires_grad:
                p._accum(chunk)

    return _result(np.concatenate([p.data for p in parts], axis=1), tuple(parts), backward)


def sum_all(a: Tensor) -> Tensor:
    return _result(a.data.sum().reshape(1, 1), (a,), lambda g: a._accum(np.broadcast_to(g, a.shape)))


def pick(a: Tensor, idx) -> Tensor:
    """``a[i, idx[i]]`` for every row, as an ``(m, 1)`` column."""
    idx = np.asarray(idx, dtype=np.intp)
    rows = np.arange(a.shape[0])
    if len(idx) != a.shape[0]:
        raise ShapeMismatch(f"pick: {len(idx)} indices for {a.shape[0]} rows")

    def backward(g):
        full = np.zeros_like(a.data)
        full[rows, idx] = g[:, 0]
        a._accum(full)

    return _result(a.data[rows, idx].reshape(-1, 1), (a,), backward)


# --------------------------------------------------------------------------
# normalization


def _masked(x, allowed):
    if allowed is None:
        return x
    return np.where(allowed, x, -np.inf)


def softmax(a: Tensor, allowed=None) -> Tensor:
    """Row softmax. ``allowed`` (bool, broadcastable) zeroes out masked entries."""
    x = _masked(a.data, allowed)
    e = np.exp(x - x.max(axis=1, keepdims=True))
    y = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        a._accum(y * (g - (g * y).sum(axis=1, keepdims=True)))

    return _result(y, (a,), backward)


def log_softmax(a: Tensor, allowed=None) -> Tensor:
    x = _masked(a.data, allowed)
    shifted = x - x.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    y = shifted - lse

    def backward(g):
        p = np.exp(y)
        gi = np.where(np.isfinite(y), g, 0.0)
        a._accum(gi - p * gi.sum(axis=1, keepdims=True))

    return _result(y, (a,), backward)

"""Parameter containers and the layers the taggers are built from."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch
from .tensor import (
    Tensor,
    add,
    cols,
    dropout,
    gelu,
    log,
    log_softmax,
    matmul,
    matmul_t,
    mul,
    neg,
    one_minus,
    pick,
    sigmoid,
    softmax,
    sum_all,
    tanh,
)


class ParameterStore:
    """Named trainable tensors plus AdamW moment estimates."""

    def __init__(self):
        self.params: dict[str, Tensor] = {}
        self.exp_avg: dict[str, np.ndarray] = {}
        self.exp_avg_sq: dict[str, np.ndarray] = {}
        self.step = 0

    def add(self, name: str, value) -> Tensor:
        if name in self.params:
            raise KeyError(f"duplicate parameter {name!r}")
        t = Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self.params[name] = t
        return t

    def __getitem__(self, name) -> Tensor:
        return self.params[name]

    def __contains__(self, name):
        return name in self.params

    def __iter__(self):
        return iter(self.params.items())

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def grad_norm(self) -> float:
        return float(np.sqrt(sum(float((p.grad ** 2).sum()) for p in self.params.values() if p.grad is not None)))

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self.params.items()}

    def restore(self, values: dict[str, np.ndarray]):
        for k, v in values.items():
            p = self.params[k]
            if p.data.shape != v.shape:
                raise ShapeMismatch(f"{k}: stored {v.shape} vs model {p.data.shape}")
            p.data[...] = v

    @property
    def n_parameters(self) -> int:
        return sum(p.data.size for p in self.params.values())


def glorot(rng: np.random.Generator, rows: int, cols_: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols_))
    return rng.uniform(-limit, limit, size=(rows, cols_))


# --------------------------------------------------------------------------
# layers


@dataclass
class Linear:
    W: Tensor  # (out, in)
    b: Tensor  # (1, out)

    @classmethod
    def create(cls, store, name, n_in, n_out, rng):
        return cls(store.add(f"{name}.W", glorot(rng, n_out, n_in)), store.add(f"{name}.b", np.zeros((1, n_out))))

    def __call__(self, x):
        return linear(self.W, self.b, x)


def linear(W: Tensor, b: Tensor, x: Tensor) -> Tensor:
    """Affine map on row vectors: ``x @ W.T + b``."""
    if x.shape[1] != W.shape[1] or b.shape != (1, W.shape[0]):
        raise ShapeMismatch(f"linear: x{x.shape}, W{W.shape}, b{b.shape}")
    return add(matmul_t(x, W), b)


@dataclass
class MLP:
    """Two-layer perceptron ``W2 gelu(W1 x + b1) + b2``; the label layer is ``out``."""

    hidden: Linear
    out: Linear

    @classmethod
    def create(cls, store, name, d, n_labels, rng):
        return cls(Linear.create(store, f"{name}.hidden", d, d, rng), Linear.create(store, f"{name}.out", d, n_labels, rng))


def mlp2_logits(mlp: MLP, x: Tensor, dropout_rate=0.0, rng=None, training=False) -> Tensor:
    h = gelu(mlp.hidden(x))
    h = dropout(h, dropout_rate, rng, training)
    return mlp.out(h)


def mlp2(mlp: MLP, x: Tensor, dropout_rate=0.0, rng=None, training=False, allowed=None) -> Tensor:
    return softmax(mlp2_logits(mlp, x, dropout_rate, rng, training), allowed)


@dataclass
class GRU:
    """Gate order in the stacked weights: reset, update, candidate."""

    Wi: Tensor  # (3h, in)
    Wh: Tensor  # (3h, h)
    bi: Tensor  # (1, 3h)
    bh: Tensor  # (1, 3h)

    @classmethod
    def create(cls, store, name, n_in, n_hidden, rng):
        Wi = np.concatenate([glorot(rng, n_hidden, n_in) for _ in range(3)], axis=0)
        Wh = np.concatenate([glorot(rng, n_hidden, n_hidden) for _ in range(3)], axis=0)
        return cls(
            store.add(f"{name}.Wi", Wi),
            store.add(f"{name}.Wh", Wh),
            store.add(f"{name}.bi", np.zeros((1, 3 * n_hidden))),
            store.add(f"{name}.bh", np.zeros((1, 3 * n_hidden))),
        )

    @property
    def hidden_size(self):
        return self.Wh.shape[1]

    def __call__(self, x, h):
        return gru_cell(self, x, h)


def gru_cell(p: GRU, x: Tensor, h: Tensor) -> Tensor:
    """``h' = (1 - z) * n + z * h`` with reset gate applied to the recurrent candidate term."""
    d = p.hidden_size
    if x.shape[1] != p.Wi.shape[1] or h.shape[1] != d or x.shape[0] != h.shape[0]:
        raise ShapeMismatch(f"gru_cell: x{x.shape}, h{h.shape}, Wi{p.Wi.shape}")
    gi = linear(p.Wi, p.bi, x)
    gh = linear(p.Wh, p.bh, h)
    r = sigmoid(add(cols(gi, 0, d), cols(gh, 0, d)))
    z = sigmoid(add(cols(gi, d, 2 * d), cols(gh, d, 2 * d)))
    n = tanh(add(cols(gi, 2 * d, 3 * d), mul(r, cols(gh, 2 * d, 3 * d))))
    return add(mul(one_minus(z), n), mul(z, h))


def attention_mix(h: Tensor, H0: Tensor) -> Tensor:
    """``h + softmax(h H0^T) H0``, one attention distribution per row of ``h``."""
    if h.shape[1] != H0.shape[1]:
        raise ShapeMismatch(f"attention_mix: h{h.shape}, H0{H0.shape}")
    alpha = softmax(matmul_t(h, H0))
    return add(h, matmul(alpha, H0))


def cross_entropy(pred: Tensor, gold_index) -> Tensor:
    """Summed ``-log pred[i, gold_i]`` over rows of a probability matrix."""
    gold = np.atleast_1d(np.asarray(gold_index))
    if np.any(gold < 0) or np.any(gold >= pred.shape[1]):
        raise IndexError(f"gold index {gold_index} outside 0..{pred.shape[1] - 1}")
    return neg(sum_all(log(pick(pred, gold))))


def softmax_cross_entropy(logits: Tensor, gold_index, allowed=None) -> Tensor:
    """Numerically stable fused form of ``cross_entropy(softmax(logits), gold)``."""
    gold = np.atleast_1d(np.asarray(gold_index))
    if np.any(gold < 0) or np.any(gold >= logits.shape[1]):
        raise IndexError(f"gold index {gold_index} outside 0..{logits.shape[1] - 1}")
    return neg(sum_all(pick(log_softmax(logits, allowed), gold)))

"""AdamW with decoupled weight decay."""
from __future__ import annotations

import numpy as np

from .layers import ParameterStore


def adamw_step(store: ParameterStore, lr: float, weight_decay: float,
               betas=(0.9, 0.999), eps=1e-6) -> ParameterStore:
    """One in-place update of every parameter; gradients are cleared afterwards.

    Parameters without a gradient are treated as having a zero gradient, so
    weight decay still applies to them.
    """
    b1, b2 = betas
    store.step += 1
    t = store.step
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t
    for name, p in store.params.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        m = store.exp_avg.get(name)
        if m is None:
            m = store.exp_avg[name] = np.zeros_like(p.data)
            store.exp_avg_sq[name] = np.zeros_like(p.data)
        v = store.exp_avg_sq[name]
        if weight_decay:
            p.data *= 1.0 - lr * weight_decay
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
        p.grad = None
    return store

"""Dense 2-D tensors with reverse-mode gradients, layers, and AdamW."""
from .checkpoint import load_params, params_from_json, params_to_json, save_params
from .layers import (
    GRU,
    MLP,
    Linear,
    ParameterStore,
    attention_mix,
    cross_entropy,
    gru_cell,
    linear,
    mlp2,
    mlp2_logits,
    softmax_cross_entropy,
)
from .optim import adamw_step
from .tensor import Tensor, no_grad

__all__ = [
    "GRU", "MLP", "Linear", "ParameterStore", "Tensor", "adamw_step", "attention_mix",
    "cross_entropy", "gru_cell", "linear", "load_params", "mlp2", "mlp2_logits", "no_grad",
    "params_from_json", "params_to_json", "save_params", "softmax_cross_entropy",
]

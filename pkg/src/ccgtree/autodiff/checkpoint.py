"""Parameter checkpoints as versioned JSON.

Floats are written with ``repr`` precision, so a save/load round trip is
bit-exact at double precision.
"""
from __future__ import annotations

import json

import numpy as np

from ..errors import CheckpointMismatch

FORMAT = "ccgtree-params"
VERSION = 1


def params_to_json(values: dict[str, np.ndarray]) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "params": {
            name: {"shape": list(arr.shape), "data": arr.reshape(-1).tolist()}
            for name, arr in sorted(values.items())
        },
    }


def params_from_json(doc: dict) -> dict[str, np.ndarray]:
    if doc.get("format") != FORMAT:
        raise CheckpointMismatch(f"not a parameter document (format={doc.get('format')!r})")
    if doc.get("version") != VERSION:
        raise CheckpointMismatch(f"unsupported parameter format version {doc.get('version')!r}")
    out = {}
    for name, entry in doc["params"].items():
        arr = np.array(entry["data"], dtype=np.float64)
        shape = tuple(entry["shape"])
        if arr.size != int(np.prod(shape)):
            raise CheckpointMismatch(f"{name}: {arr.size} values for shape {shape}")
        out[name] = arr.reshape(shape)
    return out


def save_params(values: dict[str, np.ndarray], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(params_to_json(values), fh, allow_nan=False)


def load_params(path) -> dict[str, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        return params_from_json(json.load(fh))

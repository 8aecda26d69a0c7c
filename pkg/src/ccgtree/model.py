"""A complete tagger (encoder + decoder head + parameters) and its checkpoint file.

A checkpoint is one JSON document: a header recording the variant, the
configs, the label inventory with its digest, the category vocabulary and the
word vocabulary, followed by the parameter block.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .autodiff import ParameterStore, Tensor, no_grad
from .autodiff.checkpoint import params_from_json, params_to_json
from .config import DecoderConfig, EncoderConfig, to_jsonable
from .corpus import CategoryVocab, Corpus, build_vocab
from .decoders import Decoder, LabelInventory, Prediction, make_decoder
from .encoder import WordVocab, make_encoder
from .errors import CheckpointMismatch

CHECKPOINT_FORMAT = "ccgtree-checkpoint"
CHECKPOINT_VERSION = 1


class Tagger:
    def __init__(self, enc_cfg: EncoderConfig, dec_cfg: DecoderConfig, inventory: LabelInventory,
                 vocab: CategoryVocab, words: WordVocab, seed: int = 0):
        self.enc_cfg = enc_cfg
        self.dec_cfg = dec_cfg
        self.inventory = inventory
        self.vocab = vocab
        self.words = words
        self.store = ParameterStore()
        rng = np.random.default_rng(seed)
        self.encoder = make_encoder(self.store, words, enc_cfg, rng)
        self.decoder: Decoder = make_decoder(self.store, dec_cfg, enc_cfg.hidden_dim, inventory, vocab, rng)

    @classmethod
    def for_corpus(cls, train: Corpus, enc_cfg: EncoderConfig, dec_cfg: DecoderConfig, seed: int = 0) -> Tagger:
        """Label inventory, category vocabulary and word vocabulary all come from ``train``."""
        return cls(
            enc_cfg,
            dec_cfg,
            LabelInventory.from_corpus(train),
            build_vocab(train, dec_cfg.vocab_threshold),
            WordVocab([t.word for t in train.tokens()]),
            seed,
        )

    @property
    def variant(self):
        return self.dec_cfg.variant

    def encode(self, words: Sequence[str], training=False, rng=None, external=None) -> Tensor:
        return self.encoder.encode(words, training, rng, self.dec_cfg.dropout, external)

    def sentence_loss(self, words, golds, training=False, rng=None, external=None) -> Tensor:
        """Summed atomic cross-entropy for one sentence (not normalized)."""
        H0 = self.encode(words, training, rng, external)
        return self.decoder.sentence_loss(H0, golds, training, rng)

    def predict(self, words: Sequence[str], external=None, record=False) -> list[Prediction]:
        with no_grad():
            return self.decoder.decode(self.encode(words, external=external), record)

    # ----------------------------------------------------------------------
    # persistence

    def header(self) -> dict:
        return {
            "variant": self.variant.value,
            "encoder": to_jsonable(self.enc_cfg),
            "decoder": to_jsonable(self.dec_cfg),
            "inventory": self.inventory.labels,
            "inventory_sha256": self.inventory.digest(),
            "vocab": self.vocab.to_json(),
            "words": self.words.words[1:],
        }

    def to_json(self, params: dict[str, np.ndarray] | None = None) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "header": self.header(),
            "params": params_to_json(params if params is not None else self.store.snapshot()),
        }

    def save(self, path, params: dict[str, np.ndarray] | None = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(params), fh, allow_nan=False)
        return path

    @classmethod
    def from_json(cls, doc: dict) -> Tagger:
        if doc.get("format") != CHECKPOINT_FORMAT or doc.get("version") != CHECKPOINT_VERSION:
            raise CheckpointMismatch("not a tagger checkpoint")
        h = doc["header"]
        inventory = LabelInventory([l for l in h["inventory"] if l not in LabelInventory.SLASHES])
        if inventory.labels != h["inventory"] or inventory.digest() != h["inventory_sha256"]:
            raise CheckpointMismatch("label inventory does not match its recorded digest")
        model = cls(
            EncoderConfig(**h["encoder"]),
            DecoderConfig(**h["decoder"]),
            inventory,
            CategoryVocab.from_json(h["vocab"]),
            WordVocab(h["words"]),
        )
        params = params_from_json(doc["params"])
        missing = set(model.store.params) ^ set(params)
        if missing:
            raise CheckpointMismatch(f"parameter names differ: {sorted(missing)[:5]}")
        model.store.restore(params)
        return model

    @classmethod
    def load(cls, path) -> Tagger:
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise CheckpointMismatch(f"{path}: not JSON ({e.msg})") from None
        return cls.from_json(doc)

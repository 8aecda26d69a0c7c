"""Sentence encoders producing one ``d``-dimensional row per word (H0).

The trainable encoder is a word-embedding lookup followed by a bidirectional
GRU; both directions' states are concatenated and projected to ``d``. The
external mode passes through precomputed rows read from an embedding file.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .autodiff import GRU, Linear, ParameterStore, Tensor
from .autodiff.tensor import concat_cols, concat_rows, dropout, take_rows
from .config import EncoderConfig, EncoderMode
from .errors import FormatError, LengthMismatch

UNK_WORD = "<unk>"


class WordVocab:
    """Word -> row index; index 0 is reserved for unseen words."""

    def __init__(self, words: Sequence[str]):
        self.words = [UNK_WORD] + sorted(set(words) - {UNK_WORD})
        self._index = {w: i for i, w in enumerate(self.words)}

    def __len__(self):
        return len(self.words)

    def ids(self, words: Sequence[str]) -> list[int]:
        return [self._index.get(w, 0) for w in words]


class BiGRUEncoder:
    def __init__(self, store: ParameterStore, vocab: WordVocab, cfg: EncoderConfig, rng: np.random.Generator):
        e, d = cfg.embed_dim, cfg.hidden_dim
        self.vocab = vocab
        self.d = d
        self.embed = store.add("enc.embed", rng.normal(0.0, 0.1, size=(len(vocab), e)))
        self.fwd = GRU.create(store, "enc.fwd", e, d, rng)
        self.bwd = GRU.create(store, "enc.bwd", e, d, rng)
        self.proj = Linear.create(store, "enc.proj", 2 * d, d, rng)

    def encode(self, words: Sequence[str], training=False, rng=None, dropout_rate=0.0, external=None) -> Tensor:
        n = len(words)
        X = take_rows(self.embed, self.vocab.ids(words))
        steps = [take_rows(X, [t]) for t in range(n)]
        h = Tensor(np.zeros((1, self.d)))
        fwd = []
        for x in steps:
            h = self.fwd(x, h)
            fwd.append(h)
        h = Tensor(np.zeros((1, self.d)))
        bwd = [None] * n
        for t in range(n - 1, -1, -1):
            h = self.bwd(steps[t], h)
            bwd[t] = h
        H = self.proj(concat_cols([concat_rows(fwd), concat_rows(bwd)]))
        return dropout(H, dropout_rate, rng, training)


class ExternalEncoder:
    """Rows come from a precomputed embedding matrix supplied per sentence."""

    def __init__(self, cfg: EncoderConfig):
        self.d = cfg.hidden_dim

    def encode(self, words: Sequence[str], training=False, rng=None, dropout_rate=0.0, external=None) -> Tensor:
        if external is None:
            raise LengthMismatch("external encoder needs an embedding matrix for every sentence")
        external = np.asarray(external, dtype=np.float64)
        if external.shape[0] != len(words):
            raise LengthMismatch(f"{external.shape[0]} embedding rows for a {len(words)}-word sentence")
        if external.shape[1] != self.d:
            raise LengthMismatch(f"embedding width {external.shape[1]} != hidden_dim {self.d}")
        return dropout(Tensor(external), dropout_rate, rng, training)


def make_encoder(store, vocab, cfg: EncoderConfig, rng):
    if cfg.mode is EncoderMode.EXTERNAL:
        return ExternalEncoder(cfg)
    return BiGRUEncoder(store, vocab, cfg, rng)


def load_embeddings(path) -> list[tuple[list[str], np.ndarray]]:
    """Read blank-line-separated blocks of ``word v1 ... vd`` lines."""
    blocks: list[tuple[list[str], np.ndarray]] = []
    words: list[str] = []
    rows: list[list[float]] = []
    width = None

    def flush():
        if words:
            blocks.append((list(words), np.array(rows, dtype=np.float64)))
            words.clear()
            rows.clear()

    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            parts = raw.split()
            if not parts:
                flush()
                continue
            try:
                vec = [float(x) for x in parts[1:]]
            except ValueError:
                raise FormatError("non-numeric embedding value", lineno, path=path) from None
            if width is None:
                width = len(vec)
            if len(vec) != width or width == 0:
                raise FormatError(f"expected {width} values, found {len(vec)}", lineno, path=path)
            words.append(parts[0])
            rows.append(vec)
    flush()
    return blocks


def aligned_embeddings(blocks, sentences_words: Sequence[Sequence[str]]) -> list[np.ndarray]:
    if len(blocks) != len(sentences_words):
        raise LengthMismatch(f"{len(blocks)} embedding blocks for {len(sentences_words)} sentences")
    out = []
    for i, ((bw, mat), sw) in enumerate(zip(blocks, sentences_words)):
        if len(bw) != len(sw):
            raise LengthMismatch(f"sentence {i + 1}: {len(bw)} embedding rows for {len(sw)} words")
        out.append(mat)
    return out

"""Training with a word-normalized loss, dev-based checkpoint selection, and restarts.

The batch loss is the sum of every atomic cross-entropy in the batch divided
by the number of words, so a word with a five-node category weighs five times
as much as a word with an atomic one.
"""
from __future__ import annotations

import json
import math
import statistics
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .autodiff import Tensor, adamw_step
from .autodiff.tensor import scale
from .config import TrainConfig
from .corpus import Corpus, Sentence
from .decoders import Prediction
from .errors import NumericError
from .evaluation import EvalReport, evaluate, token_accuracy
from .model import Tagger


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_accuracy: float
    seconds: float


@dataclass
class TrainLog:
    seed: int
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_dev_accuracy: float = -1.0
    stop_reason: str = ""

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    def without_timing(self) -> dict:
        d = self.to_json()
        for e in d["epochs"]:
            e.pop("seconds")
        return d


def batch_loss(model: Tagger, batch: Sequence[Sentence], training=False, rng=None, externals=None) -> Tensor:
    """(sum of atomic cross-entropies over all words) / (number of words)."""
    total = None
    n_words = 0
    for i, s in enumerate(batch):
        ext = None if externals is None else externals[i]
        loss = model.sentence_loss(s.words, s.golds, training, rng, ext)
        total = loss if total is None else total + loss
        n_words += len(s)
    return scale(total, 1.0 / n_words)


def predict_corpus(model: Tagger, corpus: Corpus, externals=None) -> list[list[Prediction]]:
    return [model.predict(s.words, None if externals is None else externals[i]) for i, s in enumerate(corpus)]


def train(model: Tagger, train_corpus: Corpus, dev: Corpus, cfg: TrainConfig, seed: int,
          train_externals=None, dev_externals=None,
          on_epoch: Callable[[EpochRecord], None] | None = None) -> tuple[dict[str, np.ndarray], TrainLog]:
    """Run AdamW epochs over shuffled sentence batches; return the best-dev parameters and the log.

    Shuffling and dropout draw from a generator seeded by ``(seed, epoch)``.
    A checkpoint replaces the best one only on strict dev improvement. With
    ``patience = p`` training stops once ``p`` epochs pass without improvement
    (``p = 0`` therefore runs exactly one epoch).
    """
    log = TrainLog(seed=seed)
    best = model.store.snapshot()
    order = np.arange(len(train_corpus))
    sents = train_corpus.sentences
    for epoch in range(1, cfg.max_epochs + 1):
        start = time.perf_counter()
        rng = np.random.default_rng([seed, epoch])
        perm = rng.permutation(order)
        weighted, words = 0.0, 0
        for b0 in range(0, len(perm), cfg.batch_size):
            idx = perm[b0:b0 + cfg.batch_size]
            batch = [sents[i] for i in idx]
            ext = None if train_externals is None else [train_externals[i] for i in idx]
            loss = batch_loss(model, batch, True, rng, ext)
            value = loss.item()
            if not math.isfinite(value):
                raise NumericError(f"non-finite loss {value} at epoch {epoch}, batch starting {b0} (seed {seed})")
            loss.backward()
            adamw_step(model.store, cfg.lr, cfg.weight_decay)
            n = sum(len(s) for s in batch)
            weighted += value * n
            words += n
        acc = token_accuracy(predict_corpus(model, dev, dev_externals), dev)
        rec = EpochRecord(epoch, weighted / words, acc, time.perf_counter() - start)
        log.epochs.append(rec)
        if on_epoch is not None:
            on_epoch(rec)
        if acc > log.best_dev_accuracy:
            log.best_dev_accuracy = acc
            log.best_epoch = epoch
            best = model.store.snapshot()
        if cfg.stop_at_accuracy is not None and acc >= cfg.stop_at_accuracy:
            log.stop_reason = "accuracy"
            break
        if cfg.patience is not None and epoch - log.best_epoch >= cfg.patience:
            log.stop_reason = "patience"
            break
    else:
        log.stop_reason = "max_epochs"
    return best, log


# --------------------------------------------------------------------------
# restarts


def aggregate(values: Sequence[dict[str, float | None]]) -> dict[str, dict]:
    """Per-metric mean and sample standard deviation (``None`` if any run lacks the metric)."""
    out = {}
    for key in values[0]:
        xs = [v[key] for v in values]
        if any(x is None for x in xs):
            out[key] = {"mean": None, "stdev": None, "values": xs}
            continue
        out[key] = {
            "mean": statistics.fmean(xs),
            "stdev": statistics.stdev(xs) if len(xs) > 1 else None,
            "values": xs,
        }
    return out


@dataclass
class RestartResult:
    seed: int
    log: TrainLog
    report: EvalReport
    params: dict[str, np.ndarray] = field(repr=False, default_factory=dict)


@dataclass
class MultiRestartReport:
    runs: list[RestartResult]
    aggregate: dict[str, dict]

    def to_json(self) -> dict:
        return {
            "seeds": [r.seed for r in self.runs],
            "aggregate": self.aggregate,
            "runs": [{"seed": r.seed, "log": r.log.to_json(), "report": r.report.to_json()} for r in self.runs],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False)


def multi_restart(build: Callable[[int], Tagger], train_corpus: Corpus, dev: Corpus, test: Corpus,
                  cfg: TrainConfig, externals: dict | None = None,
                  on_run: Callable[[int, Tagger, RestartResult], None] | None = None) -> MultiRestartReport:
    """Train one model per seed, evaluate each best checkpoint on ``test``, and aggregate.

    ``build(seed)`` returns a fresh model; ``externals`` may hold ``train``,
    ``dev`` and ``test`` lists of precomputed encodings.
    """
    externals = externals or {}
    runs = []
    for seed in cfg.seeds:
        model = build(seed)
        params, log = train(model, train_corpus, dev, cfg, seed, externals.get("train"), externals.get("dev"))
        model.store.restore(params)
        preds = predict_corpus(model, test, externals.get("test"))
        unreachable = model.vocab.threshold if model.vocab.threshold > 1 else None
        report = evaluate(preds, test, model.vocab, max_depth=model.dec_cfg.max_depth, unreachable_below=unreachable)
        result = RestartResult(seed, log, report, params)
        runs.append(result)
        if on_run is not None:
            on_run(seed, model, result)
    return MultiRestartReport(runs, aggregate([r.report.metrics() for r in runs]))

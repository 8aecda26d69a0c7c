"""Scoring predicted supertags against gold.

A prediction is a Category, a :class:`~ccgtree.category.Malformed`, or the
string :data:`~ccgtree.category.UNKNOWN_SYMBOL` (a thresholded classifier's
catch-all). Only exact matches are correct. The report breaks accuracy down by
training frequency and by gold depth, tabulates gold-versus-predicted depth,
classifies errors structurally, and counts invented categories.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .category import (
    DEFAULT_MAX_DEPTH,
    Atom,
    Functor,
    Malformed,
    Relation,
    depth,
    diff,
    to_infix,
)
from .corpus import CategoryVocab, Corpus, FrequencyBin, frequency_bin
from .errors import AlignmentError, CorpusMismatch

DEPTH_BINS = ("0", "1-2", "3-6", ">6")
TAXONOMY = ("Correct", "SameStructure", "WellFormedOther", "Malformed")
FINE_GRAINED = ("single_attribute", "single_atom", "single_slash", "multiple")
# largest training frequency that falls in each bin; a bin is out of reach for a
# classifier with threshold t when this is below t
_BIN_MAX_FREQ = {FrequencyBin.GE100: float("inf"), FrequencyBin.F10TO99: 99, FrequencyBin.F1TO9: 9, FrequencyBin.OOV: 0}


def depth_bin(d: int) -> str:
    if d == 0:
        return "0"
    if d <= 2:
        return "1-2"
    if d <= 6:
        return "3-6"
    return ">6"


def _is_category(p) -> bool:
    return isinstance(p, (Atom, Functor))


def _unwrap(p):
    return getattr(p, "category", p)


def gold_digest(gold: Corpus) -> str:
    h = hashlib.sha256()
    for s in gold:
        h.update(" ".join(f"{t.word}|{to_infix(t.gold)}" for t in s.tokens).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


@dataclass
class BinStats:
    tokens: int = 0
    types: int = 0
    correct: int = 0
    accuracy: float | None = None


@dataclass
class EvalReport:
    n_tokens: int
    accuracy: float
    by_frequency: dict[str, BinStats]
    by_depth: dict[str, BinStats]
    depth_rows: list[str]
    depth_cols: list[str]
    depth_confusion: list[list[int]]
    taxonomy: dict[str, int]
    fine_grained: dict[str, int]
    predicted_unseen: int
    correct_unseen: int
    novel_precision: float | None
    unknown_predicted: int
    unknown_gold_sub_threshold: int
    unknown_gold_sub_threshold_rate: float | None
    gold_digest: str
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False)

    @classmethod
    def from_json(cls, d: dict) -> EvalReport:
        d = dict(d)
        d["by_frequency"] = {k: BinStats(**v) for k, v in d["by_frequency"].items()}
        d["by_depth"] = {k: BinStats(**v) for k, v in d["by_depth"].items()}
        return cls(**d)

    def confusion_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gold\\pred"] + self.depth_cols)
        for label, row in zip(self.depth_rows, self.depth_confusion):
            w.writerow([label] + row)
        return buf.getvalue()

    def metrics(self) -> dict[str, float | None]:
        """Flat scalar view used for multi-seed aggregation."""
        out: dict[str, float | None] = {"accuracy": self.accuracy}
        for k, b in self.by_frequency.items():
            out[f"freq[{k}]"] = b.accuracy
        for k, b in self.by_depth.items():
            out[f"depth[{k}]"] = b.accuracy
        for k, v in self.taxonomy.items():
            out[f"taxonomy[{k}]"] = v
        for k, v in self.fine_grained.items():
            out[f"fine[{k}]"] = v
        out["predicted_unseen"] = self.predicted_unseen
        out["correct_unseen"] = self.correct_unseen
        out["novel_precision"] = self.novel_precision
        out["unknown_predicted"] = self.unknown_predicted
        return out


def depth_labels(max_depth: int = DEFAULT_MAX_DEPTH) -> tuple[list[str], list[str]]:
    rows = [str(d) for d in range(max_depth + 1)] + [f">{max_depth}"]
    return rows, rows + ["malformed", "unknown"]


def depth_confusion(preds: Sequence, golds: Sequence, max_depth: int = DEFAULT_MAX_DEPTH) -> np.ndarray:
    """``counts[gold_depth, pred_depth]`` with an overflow row/column plus malformed and unknown columns."""
    if len(preds) != len(golds):
        raise AlignmentError(f"{len(preds)} predictions for {len(golds)} gold tokens")
    over = max_depth + 1
    m = np.zeros((max_depth + 2, max_depth + 4), dtype=int)
    for p, g in zip(map(_unwrap, preds), golds):
        r = min(depth(g), over)
        if isinstance(p, Malformed):
            c = max_depth + 2
        elif _is_category(p):
            c = min(depth(p), over)
        else:
            c = max_depth + 3
        m[r, c] += 1
    return m


def align(preds: Sequence[Sequence], gold: Corpus) -> list:
    """Flatten per-sentence predictions, checking they line up with the gold tokens."""
    if len(preds) != len(gold):
        raise AlignmentError(f"{len(preds)} predicted sentences for {len(gold)} gold sentences")
    flat = []
    for i, (ps, s) in enumerate(zip(preds, gold)):
        if len(ps) != len(s):
            raise AlignmentError(f"sentence {i + 1}: {len(ps)} predictions for {len(s)} gold tokens")
        flat.extend(map(_unwrap, ps))
    return flat


def evaluate(preds: Sequence[Sequence], gold: Corpus, vocab: CategoryVocab, *,
             max_depth: int = DEFAULT_MAX_DEPTH, unreachable_below: int | None = None) -> EvalReport:
    """Score per-sentence predictions against ``gold`` using ``vocab`` (training frequencies).

    ``unreachable_below``: when set (a classifier's frequency threshold), frequency
    bins whose categories all fall below it report ``accuracy = None``, and it is
    the cutoff for deciding whether an UNKNOWN prediction's gold was truly rare
    (otherwise ``vocab.threshold`` is used).
    """
    flat = align(preds, gold)
    golds = [t.gold for t in gold.tokens()]
    n = len(golds)
    cutoff = unreachable_below if unreachable_below is not None else vocab.threshold
    freq_bins = {b.value: BinStats() for b in FrequencyBin}
    depth_bins = {b: BinStats() for b in DEPTH_BINS}
    freq_types = {b.value: set() for b in FrequencyBin}
    depth_types = {b: set() for b in DEPTH_BINS}
    taxonomy = dict.fromkeys(TAXONOMY, 0)
    fine = dict.fromkeys(FINE_GRAINED, 0)
    predicted_unseen = correct_unseen = unknown = unknown_sub = 0

    for p, g in zip(flat, golds):
        ok = p == g
        fb = frequency_bin(g, vocab).value
        db = depth_bin(depth(g))
        for stats, types, key in ((freq_bins, freq_types, fb), (depth_bins, depth_types, db)):
            stats[key].tokens += 1
            stats[key].correct += ok
            types[key].add(g)

        if isinstance(p, Malformed):
            taxonomy["Malformed"] += 1
            continue
        if not _is_category(p):
            # the catch-all label is well formed but never a real category
            taxonomy["WellFormedOther"] += 1
            unknown += 1
            unknown_sub += vocab.frequency(g) < cutoff
            continue
        if vocab.frequency(p) == 0:
            predicted_unseen += 1
            correct_unseen += ok
        d = diff(g, p)
        if d.relation is Relation.IDENTICAL:
            taxonomy["Correct"] += 1
        elif d.relation is Relation.SAME_STRUCTURE:
            taxonomy["SameStructure"] += 1
            errs = (d.attribute_errors, d.atom_errors, d.slash_errors)
            if sum(errs) == 1:
                fine[FINE_GRAINED[errs.index(1)]] += 1
            else:
                fine["multiple"] += 1
        else:
            taxonomy["WellFormedOther"] += 1

    for stats, types in ((freq_bins, freq_types), (depth_bins, depth_types)):
        for key, b in stats.items():
            b.types = len(types[key])
            b.accuracy = b.correct / b.tokens if b.tokens else None
    if unreachable_below is not None:
        for fb in FrequencyBin:
            if _BIN_MAX_FREQ[fb] < unreachable_below:
                freq_bins[fb.value].accuracy = None

    rows, cols = depth_labels(max_depth)
    return EvalReport(
        n_tokens=n,
        accuracy=taxonomy["Correct"] / n if n else 0.0,
        by_frequency=freq_bins,
        by_depth=depth_bins,
        depth_rows=rows,
        depth_cols=cols,
        depth_confusion=depth_confusion(flat, golds, max_depth).tolist(),
        taxonomy=taxonomy,
        fine_grained=fine,
        predicted_unseen=predicted_unseen,
        correct_unseen=correct_unseen,
        novel_precision=correct_unseen / predicted_unseen if predicted_unseen else None,
        unknown_predicted=unknown,
        unknown_gold_sub_threshold=unknown_sub,
        unknown_gold_sub_threshold_rate=unknown_sub / unknown if unknown else None,
        gold_digest=gold_digest(gold),
    )


def token_accuracy(preds: Sequence[Sequence], gold: Corpus) -> float:
    flat = align(preds, gold)
    golds = [t.gold for t in gold.tokens()]
    return sum(p == g for p, g in zip(flat, golds)) / len(golds) if golds else 0.0


def _sub(x, y):
    return None if x is None or y is None else x - y


def compare_reports(a: EvalReport, b: EvalReport) -> dict:
    """Signed differences ``a - b`` of accuracies, binned accuracies, taxonomy and depth confusions."""
    if a.gold_digest != b.gold_digest:
        raise CorpusMismatch("reports were computed on different gold corpora")
    if a.depth_rows != b.depth_rows or a.depth_cols != b.depth_cols:
        raise CorpusMismatch("reports use different depth confusion layouts")
    return {
        "accuracy": a.accuracy - b.accuracy,
        "by_frequency": {k: _sub(a.by_frequency[k].accuracy, b.by_frequency[k].accuracy) for k in a.by_frequency},
        "by_depth": {k: _sub(a.by_depth[k].accuracy, b.by_depth[k].accuracy) for k in a.by_depth},
        "taxonomy": {k: a.taxonomy[k] - b.taxonomy[k] for k in a.taxonomy},
        "depth_rows": a.depth_rows,
        "depth_cols": a.depth_cols,
        "depth_confusion": (np.array(a.depth_confusion) - np.array(b.depth_confusion)).tolist(),
    }

"""Supertagged corpora: loading, category vocabulary, frequency bins, splits, stats.

File format: UTF-8, one sentence per line, tokens separated by single spaces,
each token ``word|category`` with the category in infix notation.
"""
from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .category import (
    DEFAULT_MAX_DEPTH,
    UNKNOWN_SYMBOL,
    Atom,
    Category,
    Malformed,
    atoms,
    depth,
    from_prefix_tokens,
    parse_infix,
    to_infix,
)
from .errors import CategorySyntaxError, DepthExceeded, EmptyCorpus, FormatError


@dataclass(frozen=True)
class Token:
    word: str
    gold: Category


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("a sentence needs at least one token")

    def __len__(self):
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return [t.word for t in self.tokens]

    @property
    def golds(self) -> list[Category]:
        return [t.gold for t in self.tokens]


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[Sentence, ...]
    name: str = "corpus"

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    def tokens(self) -> Iterable[Token]:
        for s in self.sentences:
            yield from s.tokens


def make_corpus(rows: Iterable[Sequence[tuple[str, str]]], name="corpus") -> Corpus:
    """Build a corpus from ``[(word, infix), ...]`` rows (handy in tests and scripts)."""
    sents = []
    for row in rows:
        sents.append(Sentence(tuple(Token(w, parse_infix(c, max_depth=None)) for w, c in row)))
    return Corpus(tuple(sents), name)


def parse_corpus_line(line: str, lineno: int, max_depth: int | None = DEFAULT_MAX_DEPTH,
                      path=None, allow_bare_words=False) -> list[tuple[str, str | None, int]]:
    """Split one line into ``(word, category text, column)`` triples."""
    pieces = line.split(" ")
    out = []
    col = 1
    for piece in pieces:
        if not piece:
            raise FormatError("empty token (double or trailing space)", lineno, col, path)
        word, bar, cat = piece.partition("|")
        if not bar:
            if not allow_bare_words:
                raise FormatError(f"token {piece!r} lacks '|category'", lineno, col, path)
            cat = None
        elif not word:
            raise FormatError("empty word", lineno, col, path)
        out.append((word, cat, col))
        col += len(piece) + 1
    return out


def load_corpus(path, max_depth: int | None = DEFAULT_MAX_DEPTH, name: str | None = None) -> Corpus:
    path = Path(path)
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            toks = []
            for word, cat, col in parse_corpus_line(line, lineno, max_depth, path):
                if "|" in cat:
                    raise FormatError(f"word containing '|' in {word}|{cat!r}", lineno, col, path)
                try:
                    gold = parse_infix(cat, max_depth=max_depth)
                except (CategorySyntaxError, DepthExceeded) as e:
                    raise FormatError(str(e), lineno, col + len(word) + 1, path) from e
                toks.append(Token(word, gold))
            sentences.append(Sentence(tuple(toks)))
    return Corpus(tuple(sentences), name or path.stem)


def load_words(path) -> list[list[str]]:
    """Read sentences for tagging; gold categories, if present, are ignored."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if line.strip():
                out.append([w for w, _, _ in parse_corpus_line(line, lineno, None, path, allow_bare_words=True)])
    return out


def format_sentence(words: Sequence[str], cats: Sequence[str]) -> str:
    return " ".join(f"{w}|{c}" for w, c in zip(words, cats))


def write_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in corpus:
            fh.write(format_sentence(s.words, [to_infix(c) for c in s.golds]) + "\n")


MALFORMED_PREFIX = "!MALFORMED!"


def format_prediction(pred) -> str:
    """Category -> infix; Malformed -> ``!MALFORMED!`` plus each raw token in parentheses."""
    pred = getattr(pred, "category", pred)
    if isinstance(pred, Malformed):
        return MALFORMED_PREFIX + "".join(f"({t})" for t in pred.tokens)
    if isinstance(pred, str):
        return pred
    return to_infix(pred)


def parse_prediction(text: str):
    if text == UNKNOWN_SYMBOL:
        return UNKNOWN_SYMBOL
    if text.startswith(MALFORMED_PREFIX):
        body = text[len(MALFORMED_PREFIX):]
        if not (body.startswith("(") and body.endswith(")")):
            raise CategorySyntaxError("bad malformed-prediction token list", text, len(MALFORMED_PREFIX))
        tokens = tuple(body[1:-1].split(")("))
        result = from_prefix_tokens(tokens)
        if not isinstance(result, Malformed):
            raise CategorySyntaxError("tokens marked malformed form a valid category", text, 0)
        return result
    return parse_infix(text, max_depth=None)


def load_predictions(path) -> list[list[tuple[str, object]]]:
    """Read ``(word, prediction)`` rows; predictions may also be UNKNOWN or malformed token lists."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            row = []
            for word, cat, col in parse_corpus_line(line, lineno, None, path):
                try:
                    row.append((word, parse_prediction(cat)))
                except CategorySyntaxError as e:
                    raise FormatError(str(e), lineno, col + len(word) + 1, path) from e
            out.append(row)
    return out

# --------------------------------------------------------------------------
# vocabulary


class FrequencyBin(enum.Enum):
    GE100 = ">=100"
    F10TO99 = "10-99"
    F1TO9 = "1-9"
    OOV = "OOV"


def bin_for_frequency(freq: int) -> FrequencyBin:
    if freq >= 100:
        return FrequencyBin.GE100
    if freq >= 10:
        return FrequencyBin.F10TO99
    if freq >= 1:
        return FrequencyBin.F1TO9
    return FrequencyBin.OOV


@dataclass
class CategoryVocab:
    """Training frequencies plus the set of categories a classifier may predict.

    Entries below ``threshold`` stay in ``counts`` but are excluded from
    ``predictable``; when ``threshold > 1`` the last predictable label is
    :data:`UNKNOWN_SYMBOL`. Ordering is by descending frequency, ties broken
    by infix string, so label indices are stable.
    """

    counts: Counter
    threshold: int = 1
    predictable: list = field(default_factory=list)

    def __post_init__(self):
        if self.threshold < 1:
            raise ValueError("threshold must be >= 1")
        if not self.predictable:
            kept = [c for c, n in self.counts.items() if n >= self.threshold]
            kept.sort(key=lambda c: (-self.counts[c], to_infix(c)))
            if self.threshold > 1:
                kept.append(UNKNOWN_SYMBOL)
            self.predictable = kept
        self._index = {c: i for i, c in enumerate(self.predictable)}

    def frequency(self, cat) -> int:
        return self.counts.get(cat, 0)

    def index(self, cat) -> int:
        """Label index for a gold category; sub-threshold golds map to UNKNOWN."""
        i = self._index.get(cat)
        if i is None:
            i = self._index.get(UNKNOWN_SYMBOL)
            if i is None:
                raise KeyError(f"{to_infix(cat)} is not predictable")
        return i

    @property
    def n_types(self) -> int:
        return len(self.counts)

    @property
    def n_predictable_types(self) -> int:
        """Predictable category types, not counting the UNKNOWN label."""
        return len(self.predictable) - (self.threshold > 1)

    def to_json(self) -> dict:
        return {
            "threshold": self.threshold,
            "counts": [[to_infix(c), n] for c, n in sorted(self.counts.items(), key=lambda kv: to_infix(kv[0]))],
        }

    @classmethod
    def from_json(cls, d: dict) -> CategoryVocab:
        counts = Counter({parse_infix(c, max_depth=None): n for c, n in d["counts"]})
        return cls(counts, d["threshold"])


def build_vocab(train: Corpus, threshold: int = 1) -> CategoryVocab:
    if train.n_tokens == 0:
        raise EmptyCorpus(f"cannot build a vocabulary from empty corpus {train.name!r}")
    return CategoryVocab(Counter(t.gold for t in train.tokens()), threshold)


def frequency_bin(cat: Category, vocab: CategoryVocab) -> FrequencyBin:
    return bin_for_frequency(vocab.frequency(cat))


def redistribute_split(train: Corpus, threshold: int = 10) -> tuple[Corpus, Corpus]:
    """Move every sentence with a sub-threshold category type to a new test set.

    Frequencies are counted once, over the input corpus, before any sentence moves.
    """
    if threshold < 2:
        raise ValueError("redistribution threshold must be >= 2")
    if len(train) == 0:
        raise EmptyCorpus(f"cannot split empty corpus {train.name!r}")
    counts = Counter(t.gold for t in train.tokens())
    keep, move = [], []
    for s in train:
        (move if any(counts[c] < threshold for c in s.golds) else keep).append(s)
    return Corpus(tuple(keep), train.name + ".train"), Corpus(tuple(move), train.name + ".test")


# --------------------------------------------------------------------------
# statistics


@dataclass
class StatsReport:
    """Corpus summary in the shape of a training-corpus statistics table.

    Frequency bands use ``reference`` frequencies when given, otherwise the
    corpus's own. JSON keys are those of :meth:`to_json`.
    """

    sentences: int = 0
    tokens: int = 0
    category_types: int = 0
    types_by_band: dict = field(default_factory=lambda: {b.value: 0 for b in FrequencyBin})
    tokens_by_band: dict = field(default_factory=lambda: {b.value: 0 for b in FrequencyBin})
    atomic_types: int = 0
    atom_label_types: int = 0
    types_by_depth: dict = field(default_factory=dict)
    tokens_by_depth: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "sentences": self.sentences,
            "tokens": self.tokens,
            "category_types": self.category_types,
            "types_by_band": dict(self.types_by_band),
            "tokens_by_band": dict(self.tokens_by_band),
            "atomic_types": self.atomic_types,
            "atom_label_types": self.atom_label_types,
            "types_by_depth": {str(k): v for k, v in sorted(self.types_by_depth.items())},
            "tokens_by_depth": {str(k): v for k, v in sorted(self.tokens_by_depth.items())},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False)


def corpus_stats(c: Corpus, reference: CategoryVocab | None = None) -> StatsReport:
    counts = Counter(t.gold for t in c.tokens())
    freq = reference.frequency if reference is not None else counts.__getitem__
    rep = StatsReport(sentences=len(c), tokens=sum(counts.values()), category_types=len(counts))
    labels = set()
    for cat, n in counts.items():
        band = bin_for_frequency(freq(cat)).value
        rep.types_by_band[band] += 1
        rep.tokens_by_band[band] += n
        d = depth(cat)
        rep.types_by_depth[d] = rep.types_by_depth.get(d, 0) + 1
        rep.tokens_by_depth[d] = rep.tokens_by_depth.get(d, 0) + n
        if isinstance(cat, Atom):
            rep.atomic_types += 1
        labels.update(str(a) for a in atoms(cat))
    rep.atom_label_types = len(labels)
    return rep

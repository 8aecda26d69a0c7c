"""Tagger heads mapping per-word encodings to categories.

* :class:`MLPDecoder` picks one complete category from the vocabulary
  (frequency-thresholded or not).
* :class:`SeqRNNDecoder` emits a category's prefix tokens one at a time with a GRU.
* :class:`TreeRNNDecoder` grows the tree top-down, deriving each child's hidden
  state from its parent with a result-side or argument-side GRU.
* :class:`AddrMLPDecoder` grows the tree top-down, scoring each node from the
  word encoding plus a featurized address and ancestor-slash vector.

Every head works on one sentence at a time: ``H0`` is the ``(n, d)`` sentence
encoding. Tree heads process one depth level per step across all words, so all
frontier nodes of a level are scored in a single batched pass. Label
embeddings are rows of the MLP output matrix (weight tying), and at
``max_depth`` slashes are masked out so decoding always terminates with a
well-formed tree. Argmax ties go to the lowest label index.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .autodiff import GRU, MLP, Linear, ParameterStore, Tensor, no_grad
from .autodiff.layers import attention_mix, mlp2_logits, softmax_cross_entropy
from .autodiff.tensor import add, concat_rows, softmax, take_rows
from .category import (
    UNKNOWN_SYMBOL,
    Address,
    Atom,
    Category,
    Functor,
    Slash,
    atoms,
    depth,
    from_prefix_tokens,
    label_str,
    parse_atom,
    to_infix,
    to_prefix_tokens,
)
from .config import DecoderConfig, Variant
from .corpus import CategoryVocab, Corpus
from .errors import DepthExceeded


class LabelInventory:
    """Node labels: the two slashes (indices 0 and 1) followed by sorted atom strings."""

    SLASHES = ("/", "\\")

    def __init__(self, atom_labels: Sequence[str]):
        self.labels = list(self.SLASHES) + sorted(set(atom_labels) - set(self.SLASHES))
        self._index = {l: i for i, l in enumerate(self.labels)}
        self.is_slash = np.array([l in self.SLASHES for l in self.labels])
        self.atom_only = ~self.is_slash

    @classmethod
    def from_corpus(cls, corpus: Corpus) -> LabelInventory:
        return cls({label_str(a) for t in corpus.tokens() for a in atoms(t.gold)})

    def __len__(self):
        return len(self.labels)

    def index(self, label) -> int:
        return self._index[label if isinstance(label, str) else label_str(label)]

    def label(self, i: int) -> Slash | Atom:
        s = self.labels[i]
        return Slash(s) if s in self.SLASHES else parse_atom(s)

    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.labels).encode("utf-8")).hexdigest()


@dataclass
class Prediction:
    """``category`` is a Category, a :class:`Malformed`, or :data:`UNKNOWN_SYMBOL`."""

    category: object
    distributions: list | None = None

    @property
    def is_category(self) -> bool:
        return isinstance(self.category, (Atom, Functor))


@dataclass
class ScoredDecision:
    position: object  # Address for tree heads, step index for SeqRNN, None for MLP
    distribution: np.ndarray
    gold_index: int


@dataclass
class FrontierItem:
    address: Address
    hidden: Tensor | None = None
    ancestor_slashes: tuple[Slash, ...] = ()


@dataclass
class _Forced:
    """Teacher-forced logits for a set of gold nodes, plus bookkeeping."""

    logits: Tensor
    gold: np.ndarray
    allowed: np.ndarray | None
    token: list[int] = field(default_factory=list)
    position: list = field(default_factory=list)


def gold_nodes(cat: Category) -> list[tuple[Address, Slash | Atom, tuple[Slash, ...]]]:
    """Breadth-first ``(address, label, ancestor slashes root-first)`` triples."""
    out = []
    level = [(Address.root(), cat, ())]
    while level:
        nxt = []
        for addr, node, anc in level:
            if isinstance(node, Functor):
                out.append((addr, node.slash, anc))
                nxt.append((addr.child(0), node.result, anc + (node.slash,)))
                nxt.append((addr.child(1), node.argument, anc + (node.slash,)))
            else:
                out.append((addr, node, anc))
        level = nxt
    return out


def build_from_labels(labels: dict[Address, Slash | Atom], addr: Address = Address.root()) -> Category:
    lab = labels[addr]
    if isinstance(lab, Slash):
        return Functor(lab, build_from_labels(labels, addr.child(0)), build_from_labels(labels, addr.child(1)))
    return lab


class Decoder:
    """Shared pieces: the output MLP, optional attention, loss assembly."""

    variant: Variant

    def __init__(self, store: ParameterStore, cfg: DecoderConfig, d: int, n_labels: int, rng):
        self.cfg = cfg
        self.d = d
        self.mlp = MLP.create(store, "dec.mlp", d, n_labels, rng)

    @property
    def label_embedding(self) -> Tensor:
        """Tied label embeddings: row ``y`` of the MLP output weights embeds label ``y``."""
        return self.mlp.out.W

    def head(self, h: Tensor, H0: Tensor, training=False, rng=None) -> Tensor:
        x = attention_mix(h, H0) if self.cfg.use_attention else h
        return mlp2_logits(self.mlp, x, self.cfg.dropout, rng, training)

    def _check_depth(self, golds):
        for cat in golds:
            if depth(cat) > self.cfg.max_depth:
                raise DepthExceeded(f"gold {to_infix(cat)} deeper than max_depth={self.cfg.max_depth}")

    # subclasses: forced(H0, golds, tokens, training, rng) -> _Forced; decode(H0, record) -> list[Prediction]

    def sentence_loss(self, H0: Tensor, golds: Sequence[Category], training=False, rng=None) -> Tensor:
        """Sum of atomic cross-entropies over every decision of every word."""
        f = self.forced(H0, golds, range(len(golds)), training, rng)
        return softmax_cross_entropy(f.logits, f.gold, f.allowed)

    def teacher_forced_score(self, gold: Category, H0: Tensor, k: int) -> list[ScoredDecision]:
        golds = [None] * H0.shape[0]
        golds[k] = gold
        with no_grad():
            f = self.forced(H0, golds, [k])
            probs = softmax(f.logits, f.allowed).data
        return [ScoredDecision(pos, probs[i], int(f.gold[i])) for i, pos in enumerate(f.position)]


# --------------------------------------------------------------------------
# nonconstructive


class MLPDecoder(Decoder):
    def __init__(self, store, cfg, d, vocab: CategoryVocab, rng):
        super().__init__(store, cfg, d, len(vocab.predictable), rng)
        self.variant = cfg.variant
        self.vocab = vocab

    def forced(self, H0, golds, tokens, training=False, rng=None):
        tokens = list(tokens)
        h = take_rows(H0, tokens)
        gold = np.array([self.vocab.index(golds[k]) for k in tokens])
        return _Forced(self.head(h, H0, training, rng), gold, None, tokens, [None] * len(tokens))

    def classify(self, logits: np.ndarray):
        return self.vocab.predictable[int(np.argmax(logits))]

    def decode(self, H0: Tensor, record=False) -> list[Prediction]:
        with no_grad():
            logits = self.head(H0, H0).data
        out = []
        for row in logits:
            dist = [softmax(Tensor(row)).data[0]] if record else None
            out.append(Prediction(self.classify(row), dist))
        return out


def mlp_classify(decoder: MLPDecoder, h0_row: Tensor, H0: Tensor | None = None) -> Prediction:
    with no_grad():
        logits = decoder.head(h0_row, h0_row if H0 is None else H0).data[0]
    return Prediction(decoder.classify(logits))


# --------------------------------------------------------------------------
# constructive: sequential


class SeqRNNDecoder(Decoder):
    variant = Variant.SEQ_RNN

    def __init__(self, store, cfg, d, inventory: LabelInventory, rng):
        super().__init__(store, cfg, d, len(inventory), rng)
        self.inventory = inventory
        self.gru = GRU.create(store, "dec.seq_gru", d, d, rng)

    def forced(self, H0, golds, tokens, training=False, rng=None):
        tokens = list(tokens)
        self._check_depth([golds[k] for k in tokens])
        seqs = {k: [self.inventory.index(t) for t in to_prefix_tokens(golds[k])] for k in tokens}
        active = tokens
        H = take_rows(H0, active)
        logits, gold, tok, pos = [], [], [], []
        t = 0
        while active:
            logits.append(self.head(H, H0, training, rng))
            gold.extend(seqs[k][t] for k in active)
            tok.extend(active)
            pos.extend([t] * len(active))
            keep = [i for i, k in enumerate(active) if len(seqs[k]) > t + 1]
            if not keep:
                break
            emb = take_rows(self.label_embedding, [seqs[active[i]][t] for i in keep])
            H = self.gru(emb, take_rows(H, keep))
            active = [active[i] for i in keep]
            t += 1
        return _Forced(concat_rows(logits), np.array(gold), None, tok, pos)

    def decode(self, H0: Tensor, record=False, forced_labels=None) -> list[Prediction]:
        """Greedy emission; ``forced_labels`` (per word) overrides the argmax for testing."""
        n = H0.shape[0]
        emitted = [[] for _ in range(n)]
        open_slots = [1] * n
        dists = [[] for _ in range(n)]
        active = list(range(n))
        with no_grad():
            H = take_rows(H0, active)
            t = 0
            while active:
                logits = self.head(H, H0).data
                labels = []
                for i, k in enumerate(active):
                    if forced_labels is not None and t < len(forced_labels[k]):
                        y = self.inventory.index(forced_labels[k][t])
                    else:
                        y = int(np.argmax(logits[i]))
                    labels.append(y)
                    emitted[k].append(self.inventory.labels[y])
                    open_slots[k] += 1 if self.inventory.is_slash[y] else -1
                    if record:
                        dists[k].append(softmax(Tensor(logits[i])).data[0])
                keep = [i for i, k in enumerate(active)
                        if open_slots[k] > 0 and len(emitted[k]) < self.cfg.max_seq_len]
                if not keep:
                    break
                emb = take_rows(self.label_embedding, [labels[i] for i in keep])
                H = self.gru(emb, take_rows(H, keep))
                active = [active[i] for i in keep]
                t += 1
        out = []
        for k in range(n):
            cat = from_prefix_tokens(emitted[k])
            out.append(Prediction(cat, dists[k] if record else None))
        return out


# --------------------------------------------------------------------------
# constructive: tree-structured


class TreeDecoder(Decoder):
    """Top-down greedy decoding shared by the TreeRNN and AddrMLP heads."""

    def __init__(self, store, cfg, d, inventory: LabelInventory, rng):
        super().__init__(store, cfg, d, len(inventory), rng)
        self.inventory = inventory

    def allowed_at(self, depths) -> np.ndarray:
        depths = np.asarray(depths)
        allow = np.ones((len(depths), len(self.inventory)), dtype=bool)
        allow[depths >= self.cfg.max_depth] = self.inventory.atom_only
        return allow

    def decode(self, H0: Tensor, record=False, forced_labels=None) -> list[Prediction]:
        """Greedy breadth-first growth.

        ``forced_labels`` maps ``(word, Address)`` to a label string and
        overrides the argmax there; it exists for construction tests.
        """
        n = H0.shape[0]
        chosen: list[dict[Address, Slash | Atom]] = [{} for _ in range(n)]
        dists: list[list] = [[] for _ in range(n)]
        frontier = [(k, FrontierItem(Address.root())) for k in range(n)]
        with no_grad():
            state = self.init_state(H0, frontier)
            while frontier:
                h = self.node_hidden(H0, frontier, state)
                allowed = self.allowed_at([it.address.depth for _, it in frontier])
                probs = softmax(self.head(h, H0), allowed).data
                labels = []
                for i, (k, it) in enumerate(frontier):
                    y = None
                    if forced_labels is not None:
                        forced = forced_labels.get((k, it.address))
                        y = None if forced is None else self.inventory.index(forced)
                    if y is None:
                        y = int(np.argmax(probs[i]))
                    labels.append(y)
                    chosen[k][it.address] = self.inventory.label(y)
                    if record:
                        dists[k].append((it.address, probs[i]))
                frontier, state = self.expand(frontier, h, state, labels)
        return [Prediction(build_from_labels(chosen[k]), dists[k] if record else None) for k in range(n)]

    def _children(self, frontier, labels):
        """Indices of slash-labelled frontier rows and the next frontier (result, argument per parent)."""
        parents, nxt = [], []
        for i, (k, it) in enumerate(frontier):
            if self.inventory.is_slash[labels[i]]:
                parents.append(i)
                anc = it.ancestor_slashes + (Slash(self.inventory.labels[labels[i]]),)
                nxt.append((k, FrontierItem(it.address.child(0), None, anc)))
                nxt.append((k, FrontierItem(it.address.child(1), None, anc)))
        return parents, nxt


def _interleave(m: int) -> np.ndarray:
    """Row order turning ``[results; arguments]`` (m each) into result/argument pairs."""
    return np.stack([np.arange(m), np.arange(m) + m], axis=1).reshape(-1)


class TreeRNNDecoder(TreeDecoder):
    variant = Variant.TREE_RNN

    def __init__(self, store, cfg, d, inventory, rng):
        super().__init__(store, cfg, d, inventory, rng)
        self.gru_result = GRU.create(store, "dec.gru_result", d, d, rng)
        self.gru_argument = GRU.create(store, "dec.gru_argument", d, d, rng)

    def init_state(self, H0, frontier):
        return take_rows(H0, [k for k, _ in frontier])

    def node_hidden(self, H0, frontier, state):
        return state

    def children_hidden(self, H: Tensor, parent_rows, parent_labels):
        emb = take_rows(self.label_embedding, parent_labels)
        Hp = take_rows(H, parent_rows)
        both = concat_rows([self.gru_result(emb, Hp), self.gru_argument(emb, Hp)])
        return take_rows(both, _interleave(len(parent_rows)))

    def expand(self, frontier, h, state, labels):
        parents, nxt = self._children(frontier, labels)
        if not parents:
            return [], None
        return nxt, self.children_hidden(h, parents, [labels[i] for i in parents])

    def forced(self, H0, golds, tokens, training=False, rng=None):
        tokens = list(tokens)
        self._check_depth([golds[k] for k in tokens])
        level = [(k, Address.root(), golds[k]) for k in tokens]
        H = take_rows(H0, tokens)
        logits, gold, tok, pos, deps = [], [], [], [], []
        while level:
            logits.append(self.head(H, H0, training, rng))
            ys = [self.inventory.index(n.slash if isinstance(n, Functor) else n) for _, _, n in level]
            gold.extend(ys)
            tok.extend(k for k, _, _ in level)
            pos.extend(a for _, a, _ in level)
            deps.extend(a.depth for _, a, _ in level)
            parents = [i for i, (_, _, n) in enumerate(level) if isinstance(n, Functor)]
            if not parents:
                break
            H = self.children_hidden(H, parents, [ys[i] for i in parents])
            level = [(level[i][0], level[i][1].child(b), level[i][2].argument if b else level[i][2].result)
                     for i in parents for b in (0, 1)]
        return _Forced(concat_rows(logits), np.array(gold), self.allowed_at(deps), tok, pos)


class AddrMLPDecoder(TreeDecoder):
    variant = Variant.ADDR_MLP

    def __init__(self, store, cfg, d, inventory, rng):
        super().__init__(store, cfg, d, inventory, rng)
        self.featurizer = Linear.create(store, "dec.addr_features", 2 * cfg.max_depth, d, rng)

    def features(self, address: Address, ancestor_slashes: Sequence[Slash]) -> np.ndarray:
        """Address bits (0 -> +1, 1 -> -1) then ancestor slashes (/ -> +1, \\ -> -1), zero-padded."""
        D = self.cfg.max_depth
        if address.depth > D:
            raise DepthExceeded(f"address {address} deeper than max_depth={D}")
        v = np.zeros(2 * D)
        for i, b in enumerate(address.bits):
            v[i] = -1.0 if b else 1.0
        for i, s in enumerate(ancestor_slashes):
            v[D + i] = 1.0 if s is Slash.FORWARD else -1.0
        return v

    def hidden(self, H0: Tensor, rows, feats: np.ndarray) -> Tensor:
        return add(take_rows(H0, rows), self.featurizer(Tensor(feats)))

    def init_state(self, H0, frontier):
        return None

    def node_hidden(self, H0, frontier, state):
        feats = np.stack([self.features(it.address, it.ancestor_slashes) for _, it in frontier])
        return self.hidden(H0, [k for k, _ in frontier], feats)

    def expand(self, frontier, h, state, labels):
        _, nxt = self._children(frontier, labels)
        return nxt, None

    def forced(self, H0, golds, tokens, training=False, rng=None):
        tokens = list(tokens)
        self._check_depth([golds[k] for k in tokens])
        rows, feats, gold, pos, deps = [], [], [], [], []
        for k in tokens:
            for addr, lab, anc in gold_nodes(golds[k]):
                rows.append(k)
                feats.append(self.features(addr, anc))
                gold.append(self.inventory.index(lab))
                pos.append(addr)
                deps.append(addr.depth)
        h = self.hidden(H0, rows, np.stack(feats))
        return _Forced(self.head(h, H0, training, rng), np.array(gold), self.allowed_at(deps), rows, pos)


def addrmlp_hidden(decoder: AddrMLPDecoder, h0_row: Tensor, item: FrontierItem) -> Tensor:
    return decoder.hidden(h0_row, [0], decoder.features(item.address, item.ancestor_slashes)[None, :])


def make_decoder(store, cfg: DecoderConfig, d: int, inventory: LabelInventory | None,
                 vocab: CategoryVocab | None, rng) -> Decoder:
    if cfg.variant in (Variant.MLP_THRESHOLDED, Variant.MLP_FULL):
        return MLPDecoder(store, cfg, d, vocab, rng)
    cls = {Variant.SEQ_RNN: SeqRNNDecoder, Variant.TREE_RNN: TreeRNNDecoder, Variant.ADDR_MLP: AddrMLPDecoder}[cfg.variant]
    return cls(store, cfg, d, inventory, rng)


__all__ = [
    "AddrMLPDecoder", "Decoder", "FrontierItem", "LabelInventory", "MLPDecoder", "Prediction",
    "ScoredDecision", "SeqRNNDecoder", "TreeRNNDecoder", "UNKNOWN_SYMBOL", "addrmlp_hidden",
    "build_from_labels", "gold_nodes", "make_decoder", "mlp_classify",
]

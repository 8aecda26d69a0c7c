import random
from collections import Counter

import numpy as np
import pytest
from conftest import gradcheck, random_category
from hypothesis import given, settings
from hypothesis import strategies as st

from ccgtree.autodiff import ParameterStore, Tensor, attention_mix
from ccgtree.category import (
    UNKNOWN_SYMBOL,
    Address,
    Atom,
    Malformed,
    MalformedReason,
    Slash,
    depth,
    enumerate_addresses,
    label_str,
    parse_infix,
    size,
    to_prefix_tokens,
)
from ccgtree.config import DecoderConfig, Variant
from ccgtree.corpus import CategoryVocab, make_corpus
from ccgtree.decoders import (
    AddrMLPDecoder,
    FrontierItem,
    LabelInventory,
    MLPDecoder,
    SeqRNNDecoder,
    TreeRNNDecoder,
    addrmlp_hidden,
    gold_nodes,
    make_decoder,
    mlp_classify,
)
from ccgtree.errors import DepthExceeded

D = 8
INV = LabelInventory(["NP", "S", "N", "PP", "S[dcl]"])
TVP = parse_infix("(S\\NP)/NP")
TREE_VARIANTS = [Variant.TREE_RNN, Variant.ADDR_MLP]
CONSTRUCTIVE = [Variant.SEQ_RNN, Variant.TREE_RNN, Variant.ADDR_MLP]


def build(variant, seed=0, d=D, vocab=None, **cfg):
    cfg.setdefault("dropout", 0.0)
    store = ParameterStore()
    dec = make_decoder(store, DecoderConfig(variant=variant, **cfg), d, INV, vocab, np.random.default_rng(seed))
    return store, dec


def h0(n=3, d=D, seed=0):
    return Tensor(np.random.default_rng(seed).normal(size=(n, d)))


class TestInventory:
    def test_layout(self):
        assert INV.labels[:2] == ["/", "\\"]
        assert INV.labels[2:] == sorted(["NP", "S", "N", "PP", "S[dcl]"])
        assert list(INV.is_slash) == [True, True] + [False] * 5

    def test_index_label_roundtrip(self):
        for i, l in enumerate(INV.labels):
            assert INV.index(INV.label(i)) == i
            assert label_str(INV.label(i)) == l
        assert INV.index(Slash.BACKWARD) == 1

    def test_stable_digest(self):
        again = LabelInventory(["S[dcl]", "PP", "N", "S", "NP", "NP"])
        assert again.labels == INV.labels and again.digest() == INV.digest()
        assert LabelInventory(["NP"]).digest() != INV.digest()

    def test_from_corpus(self):
        c = make_corpus([[("a", "(S[dcl]\\NP)/NP"), ("b", "N")]])
        assert LabelInventory.from_corpus(c).labels == ["/", "\\", "N", "NP", "S[dcl]"]


class TestMLP:
    def vocab(self, threshold=1):
        return CategoryVocab(Counter({Atom("A"): 20, Atom("B"): 15, Atom("C"): 2}), threshold)

    def test_argmax(self):
        _, dec = build(Variant.MLP_FULL, vocab=self.vocab(), use_attention=False)
        dec.mlp.out.W.data[:] = 0.0
        dec.mlp.out.b.data[:] = [[3.0, 1.0, 0.0]]
        assert mlp_classify(dec, h0(1)).category == Atom("A")
        dec.mlp.out.b.data[:] = [[0.0, 1.0, 0.0]]
        assert mlp_classify(dec, h0(1)).category == Atom("B")

    def test_tie_goes_to_lowest_index(self):
        _, dec = build(Variant.MLP_FULL, vocab=self.vocab())
        dec.mlp.out.W.data[:] = 0.0
        dec.mlp.out.b.data[:] = 0.0
        assert [p.category for p in dec.decode(h0(4))] == [Atom("A")] * 4

    def test_thresholded_maps_rare_gold_to_unknown(self):
        v = self.vocab(threshold=10)
        assert v.predictable == [Atom("A"), Atom("B"), UNKNOWN_SYMBOL]
        _, dec = build(Variant.MLP_THRESHOLDED, vocab=v)
        (decision,) = dec.teacher_forced_score(Atom("C"), h0(1), 0)
        assert decision.gold_index == 2 and decision.distribution.shape == (3,)
        dec.mlp.out.W.data[:] = 0.0
        dec.mlp.out.b.data[:] = [[0.0, 0.0, 5.0]]
        pred = mlp_classify(dec, h0(1)).category
        assert pred == UNKNOWN_SYMBOL and pred != Atom("C")

    def test_one_decision_per_token(self):
        _, dec = build(Variant.MLP_FULL, vocab=CategoryVocab(Counter({TVP: 3, Atom("NP"): 5})))
        assert len(dec.teacher_forced_score(TVP, h0(2), 1)) == 1


class TestSeqRNN:
    def test_forced_emissions_assemble(self):
        _, dec = build(Variant.SEQ_RNN)
        (p,) = dec.decode(h0(1), forced_labels=[["/", "\\", "S", "NP", "NP"]])
        assert p.category == TVP

    def test_cap_gives_surplus_slashes(self):
        _, dec = build(Variant.SEQ_RNN, max_seq_len=7)
        (p,) = dec.decode(h0(1), forced_labels=[["/"] * 7])
        assert isinstance(p.category, Malformed)
        assert p.category.reason is MalformedReason.SURPLUS_SLASHES
        assert len(p.category.tokens) == 7

    def test_stops_when_tree_complete(self):
        _, dec = build(Variant.SEQ_RNN)
        (p,) = dec.decode(h0(1), record=True, forced_labels=[["NP"]])
        assert p.category == Atom("NP") and len(p.distributions) == 1


class TestTreeRNN:
    def test_forced_atom_root_halts(self):
        _, dec = build(Variant.TREE_RNN)
        dec.mlp.out.W.data[:] = 0.0
        dec.mlp.out.b.data[:] = 0.0
        dec.mlp.out.b.data[0, INV.index("NP")] = 10.0
        preds = dec.decode(h0(2), record=True)
        assert all(p.category == Atom("NP") and len(p.distributions) == 1 for p in preds)

    def test_forced_slash_then_atoms(self):
        _, dec = build(Variant.TREE_RNN)
        forced = {(0, Address.root()): "/", (0, Address.parse("10")): "S", (0, Address.parse("11")): "NP"}
        (p,) = dec.decode(h0(1), record=True, forced_labels=forced)
        assert p.category == parse_infix("S/NP")
        assert [a for a, _ in p.distributions] == [Address.parse(s) for s in ("1", "10", "11")]

    def test_distinct_child_parameters(self):
        store, dec = build(Variant.TREE_RNN)
        assert "dec.gru_result.Wi" in store and "dec.gru_argument.Wi" in store
        assert not np.array_equal(dec.gru_result.Wi.data, dec.gru_argument.Wi.data)


class TestAddrMLPFeatures:
    def test_root_is_zero_and_hidden_is_h0_plus_bias(self):
        _, dec = build(Variant.ADDR_MLP)
        np.testing.assert_array_equal(dec.features(Address.root(), ()), np.zeros(12))
        dec.featurizer.b.data[:] = np.arange(D)
        row = h0(1)
        out = addrmlp_hidden(dec, row, FrontierItem(Address.root()))
        np.testing.assert_array_equal(out.data, row.data + np.arange(D))

    def test_node_101_of_transitive_verb(self):
        _, dec = build(Variant.ADDR_MLP)
        (addr, label, anc) = [n for n in gold_nodes(TVP) if str(n[0]) == "101"][0]
        assert label == Atom("NP")
        assert anc == (Slash.FORWARD, Slash.BACKWARD)
        f = dec.features(addr, anc)
        np.testing.assert_array_equal(f[:6], [1, -1, 0, 0, 0, 0])
        np.testing.assert_array_equal(f[6:], [1, -1, 0, 0, 0, 0])

    def test_same_depth_different_ancestors_differ(self):
        _, dec = build(Variant.ADDR_MLP)
        a = Address.parse("10")
        assert not np.array_equal(dec.features(a, (Slash.FORWARD,)), dec.features(a, (Slash.BACKWARD,)))

    def test_depth_exceeded(self):
        _, dec = build(Variant.ADDR_MLP, max_depth=2)
        with pytest.raises(DepthExceeded):
            dec.features(Address.parse("1000"), (Slash.FORWARD,) * 3)

    def test_forced_walk_visits_bfs_addresses(self):
        rng = random.Random(7)
        _, dec = build(Variant.ADDR_MLP)
        for _ in range(30):
            gold = random_category(rng, max_depth=4, atoms=[Atom(a) for a in ("NP", "S", "N")])
            forced = {(0, a): label_str(l) for a, l in enumerate_addresses(gold)}
            (p,) = dec.decode(h0(1), record=True, forced_labels=forced)
            assert p.category == gold
            assert [a for a, _ in p.distributions] == [a for a, _ in enumerate_addresses(gold)]


class TestTeacherForcing:
    @pytest.mark.parametrize("variant", CONSTRUCTIVE)
    @pytest.mark.parametrize("gold, n", [("NP", 1), ("(S\\NP)/NP", 5)])
    def test_decision_counts(self, variant, gold, n):
        _, dec = build(variant)
        assert len(dec.teacher_forced_score(parse_infix(gold), h0(2), 1)) == n

    @pytest.mark.parametrize("variant", CONSTRUCTIVE)
    def test_counts_equal_size(self, variant):
        rng = random.Random(3)
        _, dec = build(variant)
        for _ in range(20):
            gold = random_category(rng, max_depth=3, atoms=[Atom(a) for a in ("NP", "S", "PP")])
            assert len(dec.teacher_forced_score(gold, h0(2), 0)) == size(gold)

    @pytest.mark.parametrize("variant", CONSTRUCTIVE)
    def test_too_deep_gold(self, variant):
        _, dec = build(variant, max_depth=1)
        with pytest.raises(DepthExceeded):
            dec.teacher_forced_score(TVP, h0(1), 0)

    @pytest.mark.parametrize("variant", CONSTRUCTIVE)
    @pytest.mark.parametrize("attention", [False, True])
    def test_matches_gold_forced_decoding(self, variant, attention):
        """Batched teacher forcing and step-by-step decoding compute the same distributions."""
        rng = random.Random(11)
        _, dec = build(variant, seed=5, use_attention=attention)
        H = h0(3, seed=2)
        for _ in range(10):
            gold = random_category(rng, max_depth=3, atoms=[Atom(a) for a in ("NP", "S", "PP")])
            scored = dec.teacher_forced_score(gold, H, 1)
            if variant is Variant.SEQ_RNN:
                forced = [["NP"], to_prefix_tokens(gold), ["NP"]]
                preds = dec.decode(H, record=True, forced_labels=forced)
                dists = preds[1].distributions
                by_pos = {s.position: s for s in scored}
                order = range(len(dists))
            else:
                forced = {(1, a): label_str(l) for a, l in enumerate_addresses(gold)}
                preds = dec.decode(H, record=True, forced_labels=forced)
                by_pos = {s.position: s for s in scored}
                order = [a for a, _ in preds[1].distributions]
                dists = [d for _, d in preds[1].distributions]
            assert preds[1].category == gold
            assert sorted(map(str, by_pos)) == sorted(map(str, order))
            for pos, dist in zip(order, dists):
                np.testing.assert_allclose(by_pos[pos].distribution, dist, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("variant", CONSTRUCTIVE + [Variant.MLP_FULL])
    def test_loss_is_sum_of_scored_log_probs(self, variant):
        golds = [parse_infix(s) for s in ("NP", "(S\\NP)/NP", "S\\NP")]
        vocab = CategoryVocab(Counter(golds))
        _, dec = build(variant, vocab=vocab)
        H = h0(3)
        expected = -sum(np.log(d.distribution[d.gold_index])
                        for k, g in enumerate(golds) for d in dec.teacher_forced_score(g, H, k))
        assert dec.sentence_loss(H, golds).item() == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("variant", CONSTRUCTIVE)
    def test_loss_gradcheck_wrt_encoding(self, variant):
        golds = [parse_infix("(S\\NP)/NP"), parse_infix("NP")]
        _, dec = build(variant, seed=1, d=3)
        H = np.random.default_rng(4).normal(size=(2, 3))
        assert gradcheck(lambda h: dec.sentence_loss(h, golds), [H]) <= 1e-4


class TestMaskingAndInvariants:
    @pytest.mark.parametrize("variant", TREE_VARIANTS)
    def test_slashes_masked_at_max_depth(self, variant):
        _, dec = build(variant, max_depth=2)
        gold = parse_infix("(S/NP)/(NP\\S)")
        for s in dec.teacher_forced_score(gold, h0(1), 0):
            at_cap = s.position.depth == 2
            assert (s.distribution[:2].sum() == 0.0) == at_cap

    @pytest.mark.parametrize("variant", TREE_VARIANTS)
    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10**6), max_depth=st.integers(1, 4))
    def test_random_parameters_always_well_formed(self, variant, seed, max_depth):
        _, dec = build(variant, seed=seed, max_depth=max_depth)
        # push the model towards slashes so the cap is exercised
        dec.mlp.out.b.data[0, :2] += 5.0
        for p in dec.decode(h0(4, seed=seed)):
            assert p.is_category and depth(p.category) <= max_depth

    @pytest.mark.parametrize("variant", CONSTRUCTIVE)
    def test_label_embedding_tied_to_output_layer(self, variant):
        _, dec = build(variant)
        E = dec.label_embedding
        assert E is dec.mlp.out.W and E.shape == (len(INV), D)
        dec.mlp.out.W.data[3, 0] = 123.0
        assert dec.label_embedding.data[3, 0] == 123.0

    def test_attention_with_one_row_adds_h0(self):
        rng = np.random.default_rng(0)
        h, row = Tensor(rng.normal(size=(5, D))), Tensor(rng.normal(size=(1, D)))
        np.testing.assert_array_equal(attention_mix(h, row).data, h.data + row.data)

    @pytest.mark.parametrize("variant", CONSTRUCTIVE)
    def test_greedy_determinism(self, variant):
        a = build(variant, seed=9)[1].decode(h0(3, seed=1))
        b = build(variant, seed=9)[1].decode(h0(3, seed=1))
        assert [p.category for p in a] == [p.category for p in b]

    def test_variant_classes(self):
        assert isinstance(build(Variant.SEQ_RNN)[1], SeqRNNDecoder)
        assert isinstance(build(Variant.TREE_RNN)[1], TreeRNNDecoder)
        assert isinstance(build(Variant.ADDR_MLP)[1], AddrMLPDecoder)
        assert isinstance(build(Variant.MLP_FULL, vocab=CategoryVocab(Counter({TVP: 1})))[1], MLPDecoder)

"""Acceptance criteria, one test each.

Every test reports a PASS/FAIL/SKIP line in the pytest terminal summary
under "acceptance criteria". Licensed-corpus checks run only when
``CCGTREE_CCGBANK_TRAIN`` / ``CCGTREE_REBANK_TRAIN`` point at training files
in the ``word|category`` format.
"""
import itertools
import math
import os
import random
import statistics
import time

import numpy as np
import pytest
from conftest import AcceptanceRecorder, cfg_accepts, gradcheck, oracle_bfs, oracle_depth, random_category

from ccgtree.autodiff import GRU, MLP, Linear, Tensor, attention_mix, cross_entropy, gru_cell, linear, mlp2
from ccgtree.autodiff.tensor import softmax, sum_all
from ccgtree.category import (
    Malformed,
    depth,
    enumerate_addresses,
    from_prefix_tokens,
    parse_infix,
    size,
    to_infix,
    to_prefix_tokens,
)
from ccgtree.config import DecoderConfig, EncoderConfig, TrainConfig, Variant
from ccgtree.corpus import build_vocab, corpus_stats, load_corpus, make_corpus, redistribute_split
from ccgtree.evaluation import evaluate
from ccgtree.model import Tagger
from ccgtree.synthetic import SINGLETON_CATEGORY, compositional_corpora, overfit_corpus
from ccgtree.train import aggregate, batch_loss, multi_restart, predict_corpus, train

pytestmark = pytest.mark.acceptance


def test_category_algebra_oracles():
    with AcceptanceRecorder("category algebra: 1e5 round trips, BFS addresses, depth/size oracles") as rec:
        start = time.perf_counter()
        rng = random.Random(20240601)
        for _ in range(100_000):
            c = random_category(rng, max_depth=6)
            assert parse_infix(to_infix(c)) == c
            assert from_prefix_tokens(to_prefix_tokens(c)) == c
            bfs = oracle_bfs(c)
            assert [(a.value, l) for a, l in enumerate_addresses(c)] == bfs
            assert depth(c) == oracle_depth(c)
            assert size(c) == len(bfs)
        elapsed = time.perf_counter() - start
        rec.detail = f"{elapsed:.1f}s"
        assert elapsed < 10.0


def test_prefix_grammar_membership():
    with AcceptanceRecorder("prefix grammar: from_prefix_tokens == CFG recognizer, all sequences len <= 7") as rec:
        start = time.perf_counter()
        n = accepted = 0
        for length in range(1, 8):
            for seq in itertools.product(["/", "\\", "NP", "S"], repeat=length):
                ok = not isinstance(from_prefix_tokens(seq), Malformed)
                assert ok == cfg_accepts(seq), seq
                n += 1
                accepted += ok
        elapsed = time.perf_counter() - start
        rec.detail = f"{n} sequences, {accepted} trees, {elapsed:.1f}s"
        assert elapsed < 30.0


def _probe(out, rng):
    return sum_all(out * Tensor(rng.normal(size=out.shape)))


def test_gradient_checks():
    with AcceptanceRecorder("gradient checks: linear, mlp2, gru_cell, attention_mix, CE through softmax") as rec:
        start = time.perf_counter()
        worst = {}
        for seed in range(10):
            rng = np.random.default_rng(seed)
            arrs = [rng.normal(size=s) for s in [(3, 4), (1, 3), (2, 4)]]
            worst["linear"] = max(worst.get("linear", 0), gradcheck(
                lambda W, b, x: _probe(linear(W, b, x), np.random.default_rng(seed)), arrs))

            arrs = [rng.normal(size=s) for s in [(4, 4), (1, 4), (5, 4), (1, 5), (2, 4)]]
            worst["mlp2"] = max(worst.get("mlp2", 0), gradcheck(
                lambda W1, b1, W2, b2, x: _probe(mlp2(MLP(Linear(W1, b1), Linear(W2, b2)), x),
                                                 np.random.default_rng(seed)), arrs))

            arrs = [0.7 * rng.normal(size=s) for s in [(12, 3), (12, 4), (1, 12), (1, 12), (2, 3), (2, 4)]]
            worst["gru_cell"] = max(worst.get("gru_cell", 0), gradcheck(
                lambda Wi, Wh, bi, bh, x, h: _probe(gru_cell(GRU(Wi, Wh, bi, bh), x, h),
                                                    np.random.default_rng(seed)), arrs))

            arrs = [rng.normal(size=s) for s in [(2, 4), (3, 4)]]
            worst["attention_mix"] = max(worst.get("attention_mix", 0), gradcheck(
                lambda h, H0: _probe(attention_mix(h, H0), np.random.default_rng(seed)), arrs))

            gold = rng.integers(0, 5, size=3)
            worst["cross_entropy"] = max(worst.get("cross_entropy", 0), gradcheck(
                lambda z: cross_entropy(softmax(z), gold), [rng.normal(size=(3, 5))]))
        elapsed = time.perf_counter() - start
        rec.detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f"; {elapsed:.1f}s"
        assert max(worst.values()) <= 1e-4
        assert elapsed < 60.0


@pytest.mark.parametrize("variant", [Variant.TREE_RNN, Variant.ADDR_MLP])
def test_well_formedness_guarantee(variant):
    with AcceptanceRecorder(f"well-formedness: 1e4 random-parameter {variant.value} decodes, 0 malformed, depth <= 6") as rec:
        start = time.perf_counter()
        inventory_corpus = make_corpus([[("w", "((S[dcl]\\NP)/PP)/NP"), ("x", "N"), ("y", "S[b]"), ("z", "conj")]])
        decodes = malformed = max_depth = 0
        for trial in range(100):
            rng = np.random.default_rng(trial)
            model = Tagger.for_corpus(inventory_corpus, EncoderConfig(hidden_dim=16, embed_dim=8),
                                      DecoderConfig(variant=variant), seed=trial)
            # vary how attractive slashes are so shallow and capped trees both occur
            model.decoder.mlp.out.b.data[0, :2] += rng.normal(0, 3)
            H0 = Tensor(rng.normal(0, 1 + trial % 5, size=(100, 16)))
            for p in model.decoder.decode(H0):
                decodes += 1
                if not p.is_category:
                    malformed += 1
                else:
                    max_depth = max(max_depth, depth(p.category))
        elapsed = time.perf_counter() - start
        rec.detail = f"{decodes} decodes, {malformed} malformed, max depth {max_depth}, {elapsed:.1f}s"
        assert decodes == 10_000 and malformed == 0 and max_depth <= 6
        assert elapsed < 60.0


def test_loss_semantics():
    with AcceptanceRecorder("loss semantics: (S\\NP)/NP = 5 atomic terms; batch self-concatenation invariance") as rec:
        c = make_corpus([[("it", "NP"), ("sees", "(S\\NP)/NP")], [("a", "NP/N"), ("dog", "N"), ("runs", "S\\NP")]])
        enc = EncoderConfig(hidden_dim=8, embed_dim=8)
        for variant in (Variant.ADDR_MLP, Variant.TREE_RNN, Variant.SEQ_RNN):
            m = Tagger.for_corpus(c, enc, DecoderConfig(variant=variant, dropout=0.0), seed=0)
            H0 = m.encode(c.sentences[0].words)
            terms = m.decoder.teacher_forced_score(parse_infix("(S\\NP)/NP"), H0, 1)
            assert len(terms) == 5
            # uniform outputs: each of the five terms is log |L|
            m.decoder.mlp.out.W.data[:] = 0.0
            m.decoder.mlp.out.b.data[:] = 0.0
            one = make_corpus([[("sees", "(S\\NP)/NP")]])
            assert batch_loss(m, one.sentences).item() == pytest.approx(5 * math.log(len(m.inventory)), abs=1e-12)
        diffs = []
        for variant in Variant:
            m = Tagger.for_corpus(c, enc, DecoderConfig(variant=variant, dropout=0.0), seed=1)
            once = batch_loss(m, c.sentences).item()
            twice = batch_loss(m, c.sentences + c.sentences).item()
            diffs.append(0.0 if once == twice else abs(once - twice) / abs(once))
        rec.detail = f"max relative self-concatenation difference {max(diffs):.1e}"
        assert max(diffs) == 0.0


def _singleton_accuracy(preds, corpus):
    hits = [p.category == t.gold for ps, s in zip(preds, corpus) for p, t in zip(ps, s.tokens)
            if to_infix(t.gold) == SINGLETON_CATEGORY]
    return sum(hits) / len(hits)


@pytest.mark.slow
def test_overfit_oracle():
    with AcceptanceRecorder("overfit oracle: 20 sentences, >= 99% in <= 200 epochs, thresholded MLP 0% on singleton") as rec:
        start = time.perf_counter()
        corpus = overfit_corpus(20, seed=0)
        assert max(depth(t.gold) for t in corpus.tokens()) == 3
        assert build_vocab(corpus).frequency(parse_infix(SINGLETON_CATEGORY)) == 1
        enc = EncoderConfig(embed_dim=64, hidden_dim=64)
        cfg = TrainConfig(max_epochs=200, lr=1e-3, stop_at_accuracy=1.0)
        results = {}
        for variant in Variant:
            model = Tagger.for_corpus(corpus, enc, DecoderConfig(variant=variant, dropout=0.0), seed=14112)
            params, log = train(model, corpus, corpus, cfg, 14112)
            model.store.restore(params)
            preds = predict_corpus(model, corpus)
            results[variant] = (log.best_dev_accuracy, len(log.epochs), _singleton_accuracy(preds, corpus))
        elapsed = time.perf_counter() - start
        rec.detail = "; ".join(f"{v.value} {a:.3f}@{e} singleton {s:.0%}" for v, (a, e, s) in results.items())
        rec.detail += f"; {elapsed:.0f}s"
        for v in (Variant.ADDR_MLP, Variant.TREE_RNN, Variant.SEQ_RNN, Variant.MLP_FULL):
            assert results[v][0] >= 0.99 and results[v][1] <= 200, v
        assert results[Variant.MLP_THRESHOLDED][2] == 0.0
        assert any(results[v][2] > 0 for v in (Variant.ADDR_MLP, Variant.TREE_RNN, Variant.SEQ_RNN))
        assert elapsed < 600


@pytest.mark.slow
def test_generalization_smoke():
    with AcceptanceRecorder("generalization: AddrMLP predicts a held-out compositional category") as rec:
        train_c, test_c, held_out = compositional_corpora(copies=6, seed=0)
        held = parse_infix(held_out)
        vocab = build_vocab(train_c)
        assert vocab.frequency(held) == 0
        model = Tagger.for_corpus(train_c, EncoderConfig(), DecoderConfig(variant=Variant.ADDR_MLP, dropout=0.0),
                                  seed=14112)
        params, log = train(model, train_c, train_c, TrainConfig(max_epochs=100, lr=1e-3, stop_at_accuracy=1.0), 14112)
        model.store.restore(params)
        # probability of the whole held-out tree under teacher forcing, for its first occurrence
        s = test_c.sentences[0]
        k = [t.gold for t in s.tokens].index(held)
        scored = model.decoder.teacher_forced_score(held, model.encode(s.words), k)
        prob = math.prod(d.distribution[d.gold_index] for d in scored)
        report = evaluate(predict_corpus(model, test_c), test_c, vocab)
        rec.detail = (f"P(held-out tree) {prob:.3g}; predicted-unseen {report.predicted_unseen}, "
                      f"correct-unseen {report.correct_unseen}, novel precision {report.novel_precision}")
        assert prob > 0
        assert report.predicted_unseen > 0


def test_redistribution_correctness():
    with AcceptanceRecorder("redistribution: every test' sentence has a sub-threshold type, no train' sentence does") as rec:
        checked = 0
        for seed in range(50):
            corpus = overfit_corpus(40, seed=seed)
            for threshold in (2, 3, 5, 10):
                counts = build_vocab(corpus).counts
                tr, te = redistribute_split(corpus, threshold)
                assert len(tr) + len(te) == len(corpus)
                assert all(any(counts[g] < threshold for g in s.golds) for s in te)
                assert not any(counts[g] < threshold for s in tr for g in s.golds)
                checked += 1
        rec.detail = f"{checked} corpus/threshold pairs"


def _licensed(var):
    path = os.environ.get(var)
    if not path or not os.path.exists(path):
        pytest.skip(f"{var} not set")
    return load_corpus(path, max_depth=None)


def test_licensed_ccgbank_vocab():
    with AcceptanceRecorder("licensed CCGbank: threshold-10 vocabulary has 425 types"):
        corpus = _licensed("CCGTREE_CCGBANK_TRAIN")
        assert build_vocab(corpus, 10).n_predictable_types == 425


def test_licensed_rebank_stats():
    with AcceptanceRecorder("licensed Rebank: 511 thresholded types; 39,604 sentences, 943,204 tokens, 1,574 types"):
        corpus = _licensed("CCGTREE_REBANK_TRAIN")
        assert build_vocab(corpus, 10).n_predictable_types == 511
        stats = corpus_stats(corpus)
        assert (stats.sentences, stats.tokens, stats.category_types) == (39_604, 943_204, 1_574)


def test_multi_restart_aggregation():
    with AcceptanceRecorder("multi-restart: seeds 14112/36125/92225 aggregate == recomputation") as rec:
        corpus = overfit_corpus(12, seed=3)
        enc = EncoderConfig(hidden_dim=16, embed_dim=16)
        cfg = TrainConfig(max_epochs=3, lr=1e-3, seeds=(14112, 36125, 92225))
        report = multi_restart(lambda s: Tagger.for_corpus(corpus, enc, DecoderConfig(), s), corpus, corpus, corpus, cfg)
        assert [r.seed for r in report.runs] == [14112, 36125, 92225]
        metrics = [r.report.metrics() for r in report.runs]
        for key, agg in report.aggregate.items():
            xs = [m[key] for m in metrics]
            if any(x is None for x in xs):
                assert agg["mean"] is None
                continue
            assert agg["mean"] == statistics.fmean(xs)
            assert agg["stdev"] == statistics.stdev(xs)
            assert agg["mean"] == pytest.approx(np.mean(xs), abs=1e-12)
            assert agg["stdev"] == pytest.approx(np.std(xs, ddof=1), abs=1e-12)
        assert aggregate(metrics) == report.aggregate
        acc = report.aggregate["accuracy"]
        rec.detail = f"accuracy {acc['mean']:.4f} +- {acc['stdev']:.4f}"

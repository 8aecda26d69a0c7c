import json

import numpy as np
import pytest

from ccgtree.config import DecoderConfig, EncoderConfig, Variant
from ccgtree.corpus import make_corpus
from ccgtree.errors import CheckpointMismatch
from ccgtree.model import Tagger

CORPUS = make_corpus([
    [("the", "NP/N"), ("dog", "N"), ("sees", "(S[dcl]\\NP)/NP"), ("it", "NP")],
    [("it", "NP"), ("runs", "S[dcl]\\NP")],
])
ENC = EncoderConfig(embed_dim=6, hidden_dim=5)


@pytest.mark.parametrize("variant", list(Variant))
def test_checkpoint_roundtrip_is_exact(tmp_path, variant):
    m = Tagger.for_corpus(CORPUS, ENC, DecoderConfig(variant=variant, threshold=2), seed=3)
    path = m.save(tmp_path / "run" / "3" / "best.ckpt")
    back = Tagger.load(path)
    assert back.variant is variant
    assert back.inventory.labels == m.inventory.labels
    assert back.vocab.predictable == m.vocab.predictable
    assert back.words.words == m.words.words
    for name, p in m.store:
        np.testing.assert_array_equal(back.store[name].data, p.data)
    words = ["the", "dog", "unseen", "it"]
    assert [p.category for p in back.predict(words)] == [p.category for p in m.predict(words)]


def test_save_explicit_params(tmp_path):
    m = Tagger.for_corpus(CORPUS, ENC, DecoderConfig(), seed=0)
    snap = m.store.snapshot()
    m.store["dec.mlp.out.b"].data[:] += 1.0
    back = Tagger.load(m.save(tmp_path / "c.ckpt", snap))
    np.testing.assert_array_equal(back.store["dec.mlp.out.b"].data, snap["dec.mlp.out.b"])


def test_tampered_inventory_detected(tmp_path):
    m = Tagger.for_corpus(CORPUS, ENC, DecoderConfig(), seed=0)
    path = m.save(tmp_path / "c.ckpt")
    doc = json.loads(path.read_text())
    doc["header"]["inventory"].append("PP")
    path.write_text(json.dumps(doc))
    with pytest.raises(CheckpointMismatch):
        Tagger.load(path)


def test_not_a_checkpoint(tmp_path):
    p = tmp_path / "x.ckpt"
    p.write_text("{}")
    with pytest.raises(CheckpointMismatch):
        Tagger.load(p)
    p.write_text("not json")
    with pytest.raises(CheckpointMismatch):
        Tagger.load(p)


def test_inventory_and_vocab_from_training_corpus():
    m = Tagger.for_corpus(CORPUS, ENC, DecoderConfig(variant="MLP_Thresholded", threshold=2), seed=0)
    assert m.inventory.labels == ["/", "\\", "N", "NP", "S[dcl]"]
    assert m.vocab.threshold == 2 and m.vocab.n_predictable_types == 1

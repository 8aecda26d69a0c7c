"""Show AddrMLP building a category type it never saw in training.

Training pairs every result cue with every argument cue except one; the test
sentences use the missing pairing.
"""
import argparse
import math

from ccgtree.category import parse_infix
from ccgtree.config import DecoderConfig, EncoderConfig, TrainConfig, Variant
from ccgtree.corpus import build_vocab, format_prediction
from ccgtree.evaluation import evaluate
from ccgtree.model import Tagger
from ccgtree.synthetic import compositional_corpora
from ccgtree.train import predict_corpus, train


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=14112)
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--variant", default="AddrMLP", choices=[v.value for v in Variant])
    args = ap.parse_args()

    train_c, test_c, held_out = compositional_corpora()
    held = parse_infix(held_out)
    model = Tagger.for_corpus(train_c, EncoderConfig(), DecoderConfig(variant=Variant(args.variant), dropout=0.0),
                              args.seed)
    cfg = TrainConfig(max_epochs=args.epochs, lr=1e-3, stop_at_accuracy=1.0)
    params, log = train(model, train_c, train_c, cfg, args.seed)
    model.store.restore(params)
    print(f"trained {len(log.epochs)} epochs, train accuracy {log.best_dev_accuracy:.3f}; held-out type {held_out}")

    preds = predict_corpus(model, test_c)
    for ps, s in zip(preds, test_c):
        print("  " + " ".join(f"{w}|{format_prediction(p)}" for w, p in zip(s.words, ps)))
    if model.dec_cfg.variant.constructive:
        s = test_c.sentences[0]
        scored = model.decoder.teacher_forced_score(held, model.encode(s.words), s.golds.index(held))
        print(f"P({held_out}) at its first occurrence: {math.prod(d.distribution[d.gold_index] for d in scored):.3g}")
    report = evaluate(preds, test_c, build_vocab(train_c))
    print(f"test accuracy {report.accuracy:.3f}; predicted unseen {report.predicted_unseen}, "
          f"correct unseen {report.correct_unseen}")


if __name__ == "__main__":
    main()

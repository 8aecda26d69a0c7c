"""Train every decoder variant on the 20-sentence synthetic corpus and tabulate.

The last sentence holds a category type seen exactly once. A thresholded
classifier cannot emit it; the constructive decoders can.
"""
import argparse
import time

from ccgtree.category import parse_infix
from ccgtree.config import DecoderConfig, EncoderConfig, TrainConfig, Variant
from ccgtree.model import Tagger
from ccgtree.synthetic import SINGLETON_CATEGORY, overfit_corpus
from ccgtree.train import predict_corpus, train


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=14112)
    ap.add_argument("--epochs", type=int, default=200)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--threshold", type=int, default=2, help="MLP_Thresholded cutoff")
    args = ap.parse_args()

    corpus = overfit_corpus(20)
    singleton = parse_infix(SINGLETON_CATEGORY)
    cfg = TrainConfig(max_epochs=args.epochs, lr=args.lr, stop_at_accuracy=1.0, seeds=(args.seed,))
    print(f"{'variant':<16}{'accuracy':>9}{'epochs':>8}{'singleton':>11}{'seconds':>9}")
    for variant in Variant:
        start = time.perf_counter()
        dec = DecoderConfig(variant=variant, dropout=0.0, threshold=args.threshold)
        model = Tagger.for_corpus(corpus, EncoderConfig(), dec, args.seed)
        params, log = train(model, corpus, corpus, cfg, args.seed)
        model.store.restore(params)
        preds = predict_corpus(model, corpus)
        hit = [p.category == t.gold for ps, s in zip(preds, corpus) for p, t in zip(ps, s.tokens) if t.gold == singleton]
        print(f"{variant.value:<16}{log.best_dev_accuracy:>9.3f}{len(log.epochs):>8}"
              f"{sum(hit) / len(hit):>11.0%}{time.perf_counter() - start:>9.1f}")


if __name__ == "__main__":
    main()

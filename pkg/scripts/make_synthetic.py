"""Write the synthetic corpora and a matching run config to a directory.

    python3 scripts/make_synthetic.py data/
    ccgtree train data/overfit.cfg
"""
import argparse
from pathlib import Path

from ccgtree.corpus import write_corpus
from ccgtree.synthetic import compositional_corpora, overfit_corpus

CONFIG = """\
# tiny run on the planted-singleton corpus; trains and selects on the same file
run_name = overfit
output_dir = runs
train_path = overfit.txt
variant = {variant}
dropout = 0.0
lr = 1e-3
max_epochs = 200
stop_at_accuracy = 1.0
seeds = 14112
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("out", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--variant", default="AddrMLP")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    write_corpus(overfit_corpus(20, seed=args.seed), args.out / "overfit.txt")
    train, test, held_out = compositional_corpora(seed=args.seed)
    write_corpus(train, args.out / "compositional.train")
    write_corpus(test, args.out / "compositional.test")
    (args.out / "overfit.cfg").write_text(CONFIG.format(variant=args.variant), encoding="utf-8")
    print(f"wrote {args.out}/overfit.txt, compositional.train/.test (held-out type {held_out}), overfit.cfg")


if __name__ == "__main__":
    main()

"""``ccgtree`` command line: stats, split, train, tag, eval.

Structured output is JSON. Errors print one line ``error: CODE: message`` to
stderr and exit with 1 (usage/config), 2 (data) or 3 (numeric failure).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .category import DEFAULT_MAX_DEPTH
from .config import load_run_config, to_jsonable
from .corpus import (
    build_vocab,
    corpus_stats,
    format_prediction,
    format_sentence,
    load_corpus,
    load_predictions,
    load_words,
    redistribute_split,
    write_corpus,
)
from .decoders import LabelInventory
from .encoder import aligned_embeddings, load_embeddings
from .errors import AlignmentError, CCGTreeError, CheckpointMismatch, ConfigError
from .evaluation import compare_reports, evaluate
from .model import Tagger
from .train import multi_restart

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(_fail("USAGE", message, EXIT_USAGE))


def _fail(code: str, message: str, exit_code: int) -> int:
    print(f"error: {code}: {' '.join(str(message).split())}", file=sys.stderr)
    return exit_code


def _emit(doc, out=None):
    text = json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# --------------------------------------------------------------------------
# commands


def cmd_stats(args) -> int:
    corpus = load_corpus(args.corpus, max_depth=None)
    reference = build_vocab(load_corpus(args.reference, max_depth=None)) if args.reference else None
    _emit(corpus_stats(corpus, reference).to_json(), args.output)
    return EXIT_OK


def cmd_split(args) -> int:
    if args.threshold < 2:
        raise ConfigError("--threshold must be >= 2")
    src = Path(args.corpus)
    corpus = load_corpus(src, max_depth=None)
    train, test = redistribute_split(corpus, args.threshold)
    prefix = Path(args.prefix) if args.prefix else src.with_suffix("")
    paths = {"train": Path(f"{prefix}.train"), "test": Path(f"{prefix}.test")}
    write_corpus(train, paths["train"])
    write_corpus(test, paths["test"])
    _emit({
        "threshold": args.threshold,
        "train": {"path": str(paths["train"]), "sentences": len(train), "tokens": train.n_tokens},
        "test": {"path": str(paths["test"]), "sentences": len(test), "tokens": test.n_tokens},
    })
    return EXIT_OK


def _externals(path, corpus):
    return None if path is None else aligned_embeddings(load_embeddings(path), [s.words for s in corpus])


def cmd_train(args) -> int:
    cfg = load_run_config(args.config)
    depth = cfg.decoder.max_depth
    train = load_corpus(cfg.train_path, max_depth=depth)
    dev = load_corpus(cfg.dev_path, max_depth=depth)
    test = load_corpus(cfg.test_path, max_depth=None) if cfg.test_path else dev
    externals = {
        "train": _externals(cfg.train_embeddings, train),
        "dev": _externals(cfg.dev_embeddings, dev),
        "test": _externals(cfg.test_embeddings if cfg.test_path else cfg.dev_embeddings, test),
    }
    run_dir = Path(cfg.output_dir) / cfg.run_name
    checkpoints = {}

    def build(seed):
        return Tagger.for_corpus(train, cfg.encoder, cfg.decoder, seed)

    def save(seed, model, result):
        out = run_dir / str(seed)
        checkpoints[seed] = str(model.save(out / "best.ckpt", result.params))
        (out / "train_log.json").write_text(result.log.dumps() + "\n", encoding="utf-8")
        (out / "report.json").write_text(result.report.dumps() + "\n", encoding="utf-8")
        if not args.quiet:
            print(f"seed {seed}: best epoch {result.log.best_epoch}, dev accuracy {result.log.best_dev_accuracy:.4f}, "
                  f"eval accuracy {result.report.accuracy:.4f}", file=sys.stderr)

    report = multi_restart(build, train, dev, test, cfg.train, externals, on_run=save)
    doc = {"config": to_jsonable(cfg), "checkpoints": checkpoints, **report.to_json()}
    run_dir.mkdir(parents=True, exist_ok=True)
    _emit(doc, run_dir / "aggregate.json")
    _emit({"run_dir": str(run_dir), "checkpoints": checkpoints,
           "accuracy": report.aggregate["accuracy"]})
    return EXIT_OK


def cmd_tag(args) -> int:
    model = Tagger.load(args.checkpoint)
    if args.train:
        expected = LabelInventory.from_corpus(load_corpus(args.train, max_depth=None)).digest()
        if expected != model.inventory.digest():
            raise CheckpointMismatch(
                f"label inventory of {args.train} (sha256 {expected[:12]}) differs from the checkpoint's "
                f"(sha256 {model.inventory.digest()[:12]})")
    sentences = load_words(args.corpus)
    ext = None
    if args.embeddings:
        ext = aligned_embeddings(load_embeddings(args.embeddings), sentences)
    out = open(args.output, "w", encoding="utf-8", newline="\n") if args.output else sys.stdout
    try:
        for i, words in enumerate(sentences):
            preds = model.predict(words, None if ext is None else ext[i])
            out.write(format_sentence(words, [format_prediction(p) for p in preds]) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_eval(args) -> int:
    gold = load_corpus(args.gold, max_depth=None)
    vocab = build_vocab(load_corpus(args.train, max_depth=None))

    def run(pred_path):
        rows = load_predictions(pred_path)
        for i, (row, s) in enumerate(zip(rows, gold), 1):
            for j, ((word, _), tok) in enumerate(zip(row, s.tokens), 1):
                if word != tok.word:
                    raise AlignmentError(f"{pred_path}: sentence {i}, token {j}: word {word!r} != gold {tok.word!r}")
        preds = [[p for _, p in row] for row in rows]
        return evaluate(preds, gold, vocab, max_depth=args.max_depth, unreachable_below=args.unreachable_below)

    report = run(args.pred)
    if args.confusion_csv:
        Path(args.confusion_csv).write_text(report.confusion_csv(), encoding="utf-8")
    doc = report.to_json()
    if args.compare:
        doc = {"report": doc, "difference": compare_reports(report, run(args.compare))}
    _emit(doc, args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ccgtree", description="Constructive CCG supertagging: corpora, training, tagging, evaluation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("stats", help="corpus statistics as JSON")
    s.add_argument("corpus")
    s.add_argument("--reference", help="training corpus whose frequencies define the bands (default: the corpus itself)")
    s.add_argument("-o", "--output", help="write JSON here instead of stdout")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("split", help="move every sentence with a rare category type to a test file")
    s.add_argument("corpus")
    s.add_argument("--threshold", type=int, default=10, help="types seen fewer times than this are rare (>= 2)")
    s.add_argument("--prefix", help="output path prefix (default: corpus path without extension)")
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("train", help="train one model per configured seed")
    s.add_argument("config", help="key = value run configuration file")
    s.add_argument("-q", "--quiet", action="store_true", help="no per-seed progress on stderr")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("tag", help="tag a corpus with a trained checkpoint")
    s.add_argument("checkpoint")
    s.add_argument("corpus", help="sentences as word or word|category tokens")
    s.add_argument("-o", "--output", help="write tagged corpus here instead of stdout")
    s.add_argument("--embeddings", help="precomputed encodings aligned with the corpus (external encoder)")
    s.add_argument("--train", help="training corpus; its label inventory must match the checkpoint's")
    s.set_defaults(func=cmd_tag)

    s = sub.add_parser("eval", help="score a tagged file against gold")
    s.add_argument("gold")
    s.add_argument("pred")
    s.add_argument("train", help="training corpus defining the frequency bins and unseen categories")
    s.add_argument("--unreachable-below", type=int, metavar="T",
                   help="report null accuracy for frequency bins a threshold-T classifier cannot reach")
    s.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH, help="depth confusion size")
    s.add_argument("--confusion-csv", help="also write the depth confusion matrix as CSV")
    s.add_argument("--compare", metavar="PRED2", help="second tagged file; adds signed differences pred - PRED2")
    s.add_argument("-o", "--output", help="write JSON here instead of stdout")
    s.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except CCGTreeError as e:
        return _fail(e.code, e, e.exit_code)
    except OSError as e:
        return _fail("IO", f"{e.filename or ''}: {e.strerror or e}", EXIT_DATA)


if __name__ == "__main__":
    sys.exit(main())

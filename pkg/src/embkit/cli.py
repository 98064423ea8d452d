"""Command-line frontend.

Subcommands: train, eval-analogy, eval-classify, eval-tag, nn, convert.
Exit codes: 0 success, 1 data/format errors, 2 usage errors.  Reports go to
--out (default: standard output) and are byte-identical across runs for
identical flags and seeds.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys

from embkit import analogy, classify, corpus, tagger, train
from embkit.errors import EmbkitError
from embkit.store import load_store
from embkit.vocab import build_vocab


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _fraction(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("must be in (0, 1)")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embkit",
        description="Train word embeddings and evaluate them on analogies, "
        "text classification and morphological tagging.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train embeddings on a line-per-document corpus")
    p.add_argument("--algo", required=True, choices=train.ALGORITHMS)
    p.add_argument("--corpus", required=True)
    p.add_argument("--dim", type=_positive_int, default=100)
    p.add_argument("--window", type=_positive_int, default=5)
    p.add_argument("--min-count", type=_positive_int, default=5)
    p.add_argument("--epochs", type=_positive_int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--negatives", type=_positive_int, default=5)
    p.add_argument("--subsample", type=float, default=1e-3)
    p.add_argument("--min-n", type=_positive_int, default=3)
    p.add_argument("--max-n", type=_positive_int, default=3)
    p.add_argument("--buckets", type=_positive_int, default=2_000_000)
    p.add_argument("--x-max", type=float, default=100.0)
    p.add_argument("--alpha", type=float, default=0.75)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--out", required=True, help=".txt/.text for text, else binary")

    p = sub.add_parser("eval-analogy", help="run the word-analogy benchmark")
    p.add_argument("--model", required=True)
    p.add_argument("--questions", required=True)
    p.add_argument("--kinds", default=None, help="sidecar section-kind override file")
    p.add_argument("--restrict-vocab", type=_positive_int, default=analogy.DEFAULT_RESTRICT)
    p.add_argument(
        "--include-inputs",
        action="store_true",
        help="let the three question words compete as answers",
    )
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--out", default=None)

    p = sub.add_parser("eval-classify", help="tf-idf document classification")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help='JSON lines {"label", "text"}')
    p.add_argument("--stopwords", default=None)
    p.add_argument("--train-frac", type=_fraction, default=0.8)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--C", dest="reg_strength", type=float, default=classify.DEFAULT_C)
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--out", default=None)

    p = sub.add_parser("eval-tag", help="morphological tagging on CoNLL-U data")
    p.add_argument("--model", required=True)
    p.add_argument("--train", required=True, dest="train_path")
    p.add_argument("--test", required=True, dest="test_path")
    p.add_argument("--dev-frac", type=_fraction, default=0.2)
    p.add_argument("--epochs", type=_positive_int, default=200)
    p.add_argument("--lr", type=float, default=0.6)
    p.add_argument("--decay", type=float, default=0.05)
    p.add_argument("--seeds", type=_positive_int, default=10, help="number of seeds (0..n-1)")
    p.add_argument("--char-dim", type=_positive_int, default=30)
    p.add_argument("--char-filters", type=_positive_int, default=30)
    p.add_argument("--conv-width", type=_positive_int, default=3)
    p.add_argument("--hidden", type=_positive_int, default=150)
    p.add_argument("--out", default=None)

    p = sub.add_parser("nn", help="nearest neighbours of a word")
    p.add_argument("--model", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("-k", type=_positive_int, default=10)
    p.add_argument("--out", default=None)

    p = sub.add_parser("convert", help="convert between text and binary formats")
    p.add_argument("--in", dest="src", required=True)
    p.add_argument("--out", dest="dst", required=True)
    return parser


def _emit(text: str, out_path):
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(text)


def _is_text_path(path) -> bool:
    return str(path).endswith((".txt", ".text"))


def _cmd_train(args) -> int:
    config = train.TrainConfig(
        algorithm=args.algo,
        dim=args.dim,
        window=args.window,
        min_count=args.min_count,
        epochs=args.epochs,
        learning_rate=args.lr,
        negatives=args.negatives,
        subsample_threshold=args.subsample,
        min_n=args.min_n,
        max_n=args.max_n,
        bucket_count=args.buckets,
        x_max=args.x_max,
        alpha=args.alpha,
        seed=args.seed,
        threads=args.threads,
    )
    docs = corpus.load_raw_corpus(args.corpus)
    vocab = build_vocab(itertools.chain.from_iterable(docs), config.min_count)
    if config.algorithm == "sgns":
        store = train.train_sgns(docs, vocab, config)
    elif config.algorithm == "cbow":
        store = train.train_cbow(docs, vocab, config)
    elif config.algorithm == "subword-sg":
        store = train.train_subword_sg(docs, vocab, config.indexer(), config)
    else:
        cooc = train.build_cooccurrence(docs, vocab, config.window)
        store = train.train_glove(cooc, config)
    if _is_text_path(args.out):
        store.to_plain().save_text(args.out)
    else:
        store.save_binary(args.out)
    report = {
        "command": "train",
        "config": {k: getattr(config, k) for k in sorted(vars(config))},
        "vocabulary_size": len(vocab),
        "documents": len(docs),
        "output": args.out,
    }
    sys.stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return 0


def _cmd_eval_analogy(args) -> int:
    store = load_store(args.model)
    dataset = analogy.load_analogy_file(args.questions, kinds_path=args.kinds)
    report = analogy.evaluate(
        store,
        dataset,
        restrict=args.restrict_vocab,
        exclude_inputs=not args.include_inputs,
    )
    text = report.to_json() if args.format == "json" else report.render_table()
    _emit(text, args.out)
    return 0


def _cmd_eval_classify(args) -> int:
    store = load_store(args.model)
    docs = corpus.load_labeled_corpus(args.data)
    stoplist = corpus.load_stopwords(args.stopwords) if args.stopwords else set()
    report = classify.run_classification_experiment(
        docs,
        store,
        stoplist,
        split_seed=args.seed,
        train_fraction=args.train_frac,
        reg_strength=args.reg_strength,
    )
    text = report.to_json() if args.format == "json" else report.render_table()
    _emit(text, args.out)
    return 0


def _cmd_eval_tag(args) -> int:
    store = load_store(args.model)
    train_sents = corpus.load_conllu(args.train_path)
    test_sents = corpus.load_conllu(args.test_path)
    config = tagger.TaggerConfig(
        lr0=args.lr,
        decay=args.decay,
        epochs=args.epochs,
        dev_fraction=args.dev_frac,
        seeds=tuple(range(args.seeds)),
        char_emb_dim=args.char_dim,
        char_conv_width=args.conv_width,
        char_filters=args.char_filters,
        lstm_hidden=args.hidden,
    )
    _, report = tagger.train_tagger(train_sents, store, config, test_sentences=test_sents)
    _emit(report.to_json(), args.out)
    return 0


def _cmd_nn(args) -> int:
    store = load_store(args.model)
    vec = store.vector(args.word)
    if vec is None:
        print(f"error: {args.word!r} is not in the vocabulary", file=sys.stderr)
        return 1
    hits = store.nearest(vec, args.k, exclude={args.word})
    _emit("".join(f"{w}\t{sim:.6f}\n" for w, sim in hits), args.out)
    return 0


def _cmd_convert(args) -> int:
    store = load_store(args.src)
    if _is_text_path(args.dst):
        store.to_plain().save_text(args.dst)
    else:
        store.save_binary(args.dst)
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval-analogy": _cmd_eval_analogy,
    "eval-classify": _cmd_eval_classify,
    "eval-tag": _cmd_eval_tag,
    "nn": _cmd_nn,
    "convert": _cmd_convert,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return _COMMANDS[args.command](args)
    except (EmbkitError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())

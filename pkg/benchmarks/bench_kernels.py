#!/usr/bin/env python3
"""Benchmark the compiled training kernels against the pure-numpy fallback.

Runs one epoch of every kernel on the same synthetic corpus with identical
seeds and reports throughput plus the largest numerical deviation between
the two backends (they consume identical PRNG streams, so tables should
agree to float rounding).

    python3 benchmarks/bench_kernels.py [--tokens 200000] [--dim 64]
"""

import argparse
import itertools
import sys
import time

import numpy as np

from embkit.kernels import pure
from embkit.rng import SplitMix64
from embkit.train import _drop_probabilities, _init_matrix, encode_corpus
from embkit.vocab import SubwordIndexer, build_negative_sampler, build_vocab

try:
    from embkit.kernels import _fastkern
except ImportError:
    _fastkern = None


def synthetic_corpus(total_tokens, seed=17, vocab_size=2000, line_len=20):
    rng = SplitMix64(seed)
    lines = []
    count = 0
    # Zipf-ish draws so the negative-sampling table is non-trivial
    while count < total_tokens:
        line = []
        for _ in range(line_len):
            r = rng.uniform()
            line.append("w%d" % int(vocab_size * r * r))
        lines.append(line)
        count += line_len
    return lines


def word2vec_inputs(corpus, dim):
    vocab = build_vocab(itertools.chain.from_iterable(corpus), 1)
    tokens, offsets = encode_corpus(corpus, vocab)
    return {
        "vocab": vocab,
        "tokens": tokens,
        "offsets": offsets,
        "cdf": build_negative_sampler(vocab).cumulative,
        "drop": _drop_probabilities(vocab, 1e-4),
        "dim": dim,
    }


def run_word2vec(backend, name, inputs):
    rng = SplitMix64(42)
    syn0 = _init_matrix(len(inputs["vocab"]), inputs["dim"], rng).astype(np.float32)
    syn1 = np.zeros_like(syn0)
    args = [inputs["tokens"], inputs["offsets"], syn0, syn1]
    if name == "subword":
        indexer = SubwordIndexer(3, 3, 50_000)
        ids, offs = [], [0]
        for word in inputs["vocab"].words:
            ids.extend(indexer.buckets(word))
            offs.append(len(ids))
        buckets = _init_matrix(50_000, inputs["dim"], rng).astype(np.float32)
        args = [
            inputs["tokens"], inputs["offsets"], syn0, buckets, syn1,
            np.array(ids, dtype=np.int32), np.array(offs, dtype=np.int64),
        ]
    fn = {"sgns": backend.sgns_epoch, "cbow": backend.cbow_epoch,
          "subword": backend.subword_epoch}[name]
    start = time.perf_counter()
    fn(*args, inputs["cdf"], inputs["drop"], 5, 5, 0.025,
       int(inputs["tokens"].size), 0, 777)
    elapsed = time.perf_counter() - start
    return elapsed, syn0


def glove_inputs(corpus, dim):
    from embkit.train import build_cooccurrence

    vocab = build_vocab(itertools.chain.from_iterable(corpus), 1)
    cooc = build_cooccurrence(corpus, vocab, 8)
    ii, jj, xx = cooc.to_arrays()
    return {
        "n_words": len(vocab),
        "ii": ii,
        "jj": jj,
        "logx": np.log(xx),
        "fw": np.minimum((xx / 100.0) ** 0.75, 1.0),
        "dim": dim,
    }


def run_glove(backend, inputs):
    rng = SplitMix64(5)
    w = _init_matrix(inputs["n_words"], inputs["dim"], rng)
    wc = _init_matrix(inputs["n_words"], inputs["dim"], rng)
    b = np.zeros(inputs["n_words"])
    bc = np.zeros(inputs["n_words"])
    gw = np.ones_like(w)
    gwc = np.ones_like(wc)
    gb = np.ones_like(b)
    gbc = np.ones_like(bc)
    order = np.arange(len(inputs["ii"]), dtype=np.int64)
    start = time.perf_counter()
    backend.glove_epoch(order, inputs["ii"], inputs["jj"], inputs["logx"],
                        inputs["fw"], w, wc, b, bc, gw, gwc, gb, gbc, 0.05)
    elapsed = time.perf_counter() - start
    return elapsed, w + wc


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--tokens", type=int, default=200_000)
    parser.add_argument("--dim", type=int, default=64)
    args = parser.parse_args()

    if _fastkern is None:
        print("compiled kernels not built (python3 setup.py build_ext --inplace)",
              file=sys.stderr)

    corpus = synthetic_corpus(args.tokens)
    w2v = word2vec_inputs(corpus, args.dim)
    glv = glove_inputs(corpus, args.dim)
    n_tokens = int(w2v["tokens"].size)
    n_entries = len(glv["ii"])

    print(f"corpus: {n_tokens} tokens, vocab {len(w2v['vocab'])}, dim {args.dim}, "
          f"cooc entries {n_entries}")
    print(f"{'kernel':<10} {'unit':<12} {'pure':>12} {'cython':>12} "
          f"{'speedup':>8} {'max|diff|':>10}")

    for name in ("sgns", "cbow", "subword"):
        t_pure, out_pure = run_word2vec(pure, name, w2v)
        row = [name, "tokens/s", f"{n_tokens / t_pure:,.0f}"]
        if _fastkern is not None:
            t_fast, out_fast = run_word2vec(_fastkern, name, w2v)
            diff = float(np.abs(out_pure - out_fast).max())
            row += [f"{n_tokens / t_fast:,.0f}", f"{t_pure / t_fast:.1f}x",
                    f"{diff:.1e}"]
        else:
            row += ["-", "-", "-"]
        print(f"{row[0]:<10} {row[1]:<12} {row[2]:>12} {row[3]:>12} "
              f"{row[4]:>8} {row[5]:>10}")

    t_pure, out_pure = run_glove(pure, glv)
    row = ["glove", "entries/s", f"{n_entries / t_pure:,.0f}"]
    if _fastkern is not None:
        t_fast, out_fast = run_glove(_fastkern, glv)
        diff = float(np.abs(out_pure - out_fast).max())
        row += [f"{n_entries / t_fast:,.0f}", f"{t_pure / t_fast:.1f}x",
                f"{diff:.1e}"]
    else:
        row += ["-", "-", "-"]
    print(f"{row[0]:<10} {row[1]:<12} {row[2]:>12} {row[3]:>12} "
          f"{row[4]:>8} {row[5]:>10}")


if __name__ == "__main__":
    main()

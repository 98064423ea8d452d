"""Embedding trainers: SGNS, CBOW, GloVe and subword SkipGram.

All four share the same mechanics: a deterministic splitmix64 PRNG drives
initialization, subsampling, window sizing and noise draws, and the per-epoch
inner loops are delegated to the kernel backend (compiled or pure, see
embkit.kernels).  Single-threaded runs with a fixed seed are bit-reproducible.
With threads > 1 the corpus is sharded and parameter updates are applied
lock-free (last write wins), trading reproducibility for speed.
"""

from __future__ import annotations

import logging
import math
import struct
import threading
from dataclasses import dataclass

import numpy as np

from embkit import kernels
from embkit.errors import DataError, FormatError
from embkit.rng import SplitMix64, derive_seed
from embkit.store import EmbeddingStore, SubwordTable
from embkit.vocab import (
    DEFAULT_BUCKETS,
    SubwordIndexer,
    Vocabulary,
    build_negative_sampler,
)

logger = logging.getLogger(__name__)

ALGORITHMS = ("sgns", "cbow", "glove", "subword-sg")

# Salts for deriving independent PRNG streams from the config seed.
_INIT_SALT = 0x1A17
_EPOCH_SALT = 0xE70C
_SHUFFLE_SALT = 0x5F1E

_DEFAULT_LR = {"sgns": 0.025, "subword-sg": 0.025, "cbow": 0.05, "glove": 0.05}


@dataclass
class TrainConfig:
    algorithm: str = "sgns"
    dim: int = 100
    window: int = 5
    min_count: int = 5
    epochs: int | None = None
    learning_rate: float | None = None
    negatives: int = 5
    subsample_threshold: float = 1e-3
    min_n: int = 3
    max_n: int = 3
    bucket_count: int = DEFAULT_BUCKETS
    x_max: float = 100.0
    alpha: float = 0.75
    seed: int = 1
    threads: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.learning_rate is None:
            self.learning_rate = _DEFAULT_LR[self.algorithm]
        if self.epochs is None:
            self.epochs = 15 if self.algorithm == "glove" else 5
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.algorithm != "glove" and self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def indexer(self) -> SubwordIndexer:
        return SubwordIndexer(self.min_n, self.max_n, self.bucket_count)


def encode_corpus(docs, vocab: Vocabulary):
    """Map documents to vocabulary ids, dropping OOV tokens.

    Returns (tokens, offsets): a flat int32 id array plus int64 line
    boundaries, the layout the kernels iterate without touching Python
    objects.
    """
    ids = []
    offsets = [0]
    for doc in docs:
        for tok in doc:
            idx = vocab.index.get(tok)
            if idx is not None:
                ids.append(idx)
        offsets.append(len(ids))
    return np.array(ids, dtype=np.int32), np.array(offsets, dtype=np.int64)


def _init_matrix(rows, dim, rng: SplitMix64, dtype=np.float64) -> np.ndarray:
    """Uniform [-0.5/dim, 0.5/dim) initialization, filled in row-major order.

    Chunked so that large tables (subword buckets) never materialize a
    full-size float64 intermediate.
    """
    half = 0.5 / dim
    out = np.empty(rows * dim, dtype=dtype)
    chunk = 1 << 22
    for start in range(0, out.size, chunk):
        u = rng.uniform_block(min(chunk, out.size - start))
        out[start : start + u.size] = -half + 2.0 * half * u
    return out.reshape(rows, dim)


def _drop_probabilities(vocab: Vocabulary, threshold: float) -> np.ndarray:
    """Per-id probability of dropping a token during subsampling."""
    probs = np.zeros(len(vocab), dtype=np.float64)
    if threshold <= 0:
        return probs
    freqs = vocab.counts.astype(np.float64) / vocab.total_count
    with np.errstate(invalid="ignore"):
        probs = np.maximum(0.0, 1.0 - np.sqrt(threshold / freqs))
    return probs


def _shard_offsets(offsets: np.ndarray, threads: int):
    """Split line boundaries into contiguous per-thread offset arrays."""
    n_lines = len(offsets) - 1
    shards = []
    for t in range(threads):
        lo = n_lines * t // threads
        hi = n_lines * (t + 1) // threads
        if hi > lo:
            shards.append(offsets[lo : hi + 1])
    return shards or [offsets]


def _run_word2vec(kernel, arrays, corpus, vocab, config, on_epoch):
    """Shared driver for the sgns/cbow/subword kernels."""
    tokens, offsets = encode_corpus(corpus, vocab)
    if tokens.size == 0:
        raise DataError("corpus contains no in-vocabulary tokens")
    neg_cdf = build_negative_sampler(vocab).cumulative
    drop_prob = _drop_probabilities(vocab, config.subsample_threshold)
    shards = _shard_offsets(offsets, config.threads)
    shard_tokens = [int(s[-1] - s[0]) for s in shards]
    totals = [config.epochs * n for n in shard_tokens]
    processed = [0] * len(shards)

    def run_shard(si, epoch):
        state = derive_seed(config.seed, _EPOCH_SALT, epoch, si)
        processed[si] = kernel(
            tokens,
            shards[si],
            *arrays,
            neg_cdf,
            drop_prob,
            config.window,
            config.negatives,
            config.learning_rate,
            totals[si],
            processed[si],
            state,
        )

    for epoch in range(config.epochs):
        if len(shards) == 1:
            run_shard(0, epoch)
        else:
            workers = [
                threading.Thread(target=run_shard, args=(si, epoch))
                for si in range(len(shards))
            ]
            for w in workers:
                w.start()
            for w in workers:
                w.join()
        logger.info("%s epoch %d/%d done", config.algorithm, epoch + 1, config.epochs)
        if on_epoch is not None:
            on_epoch(epoch, {"lr": _current_lr(config, processed, totals)})


def _current_lr(config, processed, totals):
    done = sum(processed)
    total = sum(totals)
    return max(
        config.learning_rate * (1.0 - done / total),
        config.learning_rate * 1e-4,
    )


def train_sgns(corpus, vocab: Vocabulary, config: TrainConfig, on_epoch=None) -> EmbeddingStore:
    """SkipGram with negative sampling over a tokenized corpus.

    ``corpus`` is a sequence of token lists; windows never cross lines.
    """
    _check_corpus(corpus)
    rng = SplitMix64(derive_seed(config.seed, _INIT_SALT))
    syn0 = _init_matrix(len(vocab), config.dim, rng, dtype=np.float32)
    syn1 = np.zeros((len(vocab), config.dim), dtype=np.float32)
    _run_word2vec(kernels.sgns_epoch, (syn0, syn1), corpus, vocab, config, on_epoch)
    _check_finite(syn0)
    return EmbeddingStore(vocab.words, syn0)


def train_cbow(corpus, vocab: Vocabulary, config: TrainConfig, on_epoch=None) -> EmbeddingStore:
    """Continuous bag-of-words: mean-of-context input predicts the center."""
    _check_corpus(corpus)
    rng = SplitMix64(derive_seed(config.seed, _INIT_SALT))
    syn0 = _init_matrix(len(vocab), config.dim, rng, dtype=np.float32)
    syn1 = np.zeros((len(vocab), config.dim), dtype=np.float32)
    _run_word2vec(kernels.cbow_epoch, (syn0, syn1), corpus, vocab, config, on_epoch)
    _check_finite(syn0)
    return EmbeddingStore(vocab.words, syn0)


def train_subword_sg(
    corpus,
    vocab: Vocabulary,
    indexer: SubwordIndexer,
    config: TrainConfig,
    on_epoch=None,
) -> EmbeddingStore:
    """SkipGram whose input vectors are composed from hashed n-gram buckets.

    The emitted store keeps both the word table and the bucket table so
    out-of-vocabulary words can be composed at query time.
    """
    _check_corpus(corpus)
    if (indexer.min_n, indexer.max_n, indexer.bucket_count) != (
        config.min_n,
        config.max_n,
        config.bucket_count,
    ):
        raise ValueError("indexer does not match config")
    ngram_ids, ngram_offsets = _word_buckets(vocab, indexer)
    rng = SplitMix64(derive_seed(config.seed, _INIT_SALT))
    syn0 = _init_matrix(len(vocab), config.dim, rng, dtype=np.float32)
    buckets = _init_matrix(indexer.bucket_count, config.dim, rng, dtype=np.float32)
    syn1 = np.zeros((len(vocab), config.dim), dtype=np.float32)
    kernel = kernels.subword_epoch

    def bound_kernel(tokens, offsets, s0, s1, *rest):
        return kernel(tokens, offsets, s0, buckets, s1, ngram_ids, ngram_offsets, *rest)

    _run_word2vec(bound_kernel, (syn0, syn1), corpus, vocab, config, on_epoch)
    _check_finite(syn0)
    _check_finite(buckets)
    return EmbeddingStore(
        vocab.words,
        syn0,
        SubwordTable(indexer.min_n, indexer.max_n, buckets),
    )


def _word_buckets(vocab: Vocabulary, indexer: SubwordIndexer):
    """Flattened per-word n-gram bucket ids plus offsets into them."""
    ids = []
    offsets = [0]
    for word in vocab.words:
        ids.extend(indexer.buckets(word))
        offsets.append(len(ids))
    return np.array(ids, dtype=np.int32), np.array(offsets, dtype=np.int64)


def _check_corpus(corpus):
    if not corpus or all(len(doc) == 0 for doc in corpus):
        raise DataError("corpus is empty")


def _check_finite(arr):
    if not np.isfinite(arr).all():
        raise DataError("training produced non-finite values")


# -- co-occurrence + GloVe --------------------------------------------------


class CooccurrenceMatrix:
    """Sparse symmetric co-occurrence weights keyed by (word id, word id).

    Carries the vocabulary's word list so a store can be emitted after
    factorization.
    """

    def __init__(self, words, data=None):
        self.words = list(words)
        self.data = dict(data or {})

    def __len__(self):
        return len(self.data)

    def add(self, i: int, j: int, weight: float):
        self.data[(i, j)] = self.data.get((i, j), 0.0) + weight

    def to_arrays(self):
        """Deterministic (ii, jj, xx) arrays sorted by (i, j)."""
        items = sorted(self.data.items())
        ii = np.array([k[0] for k, _ in items], dtype=np.int32)
        jj = np.array([k[1] for k, _ in items], dtype=np.int32)
        xx = np.array([v for _, v in items], dtype=np.float64)
        return ii, jj, xx

    def save(self, path):
        """Spill to little-endian (u32 i, u32 j, f64 x) triples."""
        ii, jj, xx = self.to_arrays()
        with open(path, "wb") as f:
            for i, j, x in zip(ii, jj, xx):
                f.write(struct.pack("<IId", int(i), int(j), float(x)))

    @classmethod
    def load(cls, path, words):
        rec = struct.Struct("<IId")
        data = {}
        with open(path, "rb") as f:
            while True:
                chunk = f.read(rec.size)
                if not chunk:
                    break
                if len(chunk) != rec.size:
                    raise FormatError("truncated co-occurrence record")
                i, j, x = rec.unpack(chunk)
                data[(i, j)] = x
        return cls(words, data)


def build_cooccurrence(corpus, vocab: Vocabulary, window: int) -> CooccurrenceMatrix:
    """Distance-weighted co-occurrence counts within each line.

    Every forward pair (center, center+d) with d <= window adds 1/d to both
    X[i][j] and X[j][i]; same-word pairs therefore add 2/d to the diagonal
    entry.  Windows never cross line boundaries.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    cooc = CooccurrenceMatrix(vocab.words)
    data = cooc.data
    index = vocab.index
    for doc in corpus:
        ids = [index[t] for t in doc if t in index]
        n = len(ids)
        for pos in range(n):
            i = ids[pos]
            for d in range(1, min(window, n - 1 - pos) + 1):
                j = ids[pos + d]
                w = 1.0 / d
                data[(i, j)] = data.get((i, j), 0.0) + w
                data[(j, i)] = data.get((j, i), 0.0) + w
    return cooc


def train_glove(cooc: CooccurrenceMatrix, config: TrainConfig, on_epoch=None) -> EmbeddingStore:
    """AdaGrad factorization of log co-occurrence counts.

    The emitted vector for each word is the sum of its main and context
    factors.  ``on_epoch`` receives (epoch, {"loss": ...}) with the weighted
    squared-error loss summed over the entries of that epoch.
    """
    if len(cooc) == 0:
        raise DataError("co-occurrence matrix is empty")
    ii, jj, xx = cooc.to_arrays()
    if (xx <= 0).any():
        raise DataError("co-occurrence weights must be positive (log undefined)")
    logx = np.log(xx)
    fweight = np.minimum((xx / config.x_max) ** config.alpha, 1.0)
    n_words = len(cooc.words)
    rng = SplitMix64(derive_seed(config.seed, _INIT_SALT))
    w = _init_matrix(n_words, config.dim, rng)
    wc = _init_matrix(n_words, config.dim, rng)
    b = np.zeros(n_words, dtype=np.float64)
    bc = np.zeros(n_words, dtype=np.float64)
    gw = np.ones((n_words, config.dim), dtype=np.float64)
    gwc = np.ones((n_words, config.dim), dtype=np.float64)
    gb = np.ones(n_words, dtype=np.float64)
    gbc = np.ones(n_words, dtype=np.float64)
    order = np.arange(len(xx), dtype=np.int64)
    shuffle_rng = SplitMix64(derive_seed(config.seed, _SHUFFLE_SALT))
    for epoch in range(config.epochs):
        shuffle_rng.shuffle(order)
        if config.threads == 1:
            loss = kernels.glove_epoch(
                order, ii, jj, logx, fweight, w, wc, b, bc, gw, gwc, gb, gbc,
                config.learning_rate,
            )
        else:
            losses = [0.0] * config.threads
            chunks = np.array_split(order, config.threads)

            def run_chunk(ti):
                losses[ti] = kernels.glove_epoch(
                    chunks[ti], ii, jj, logx, fweight, w, wc, b, bc,
                    gw, gwc, gb, gbc, config.learning_rate,
                )

            workers = [
                threading.Thread(target=run_chunk, args=(ti,))
                for ti in range(config.threads)
            ]
            for t in workers:
                t.start()
            for t in workers:
                t.join()
            loss = math.fsum(losses)
        logger.info("glove epoch %d/%d loss %.6f", epoch + 1, config.epochs, loss)
        if on_epoch is not None:
            on_epoch(epoch, {"loss": float(loss)})
    vectors = (w + wc).astype(np.float32)
    _check_finite(vectors)
    return EmbeddingStore(cooc.words, vectors)

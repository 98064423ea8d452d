"""Vocabulary construction, subword n-gram hashing and negative sampling."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from embkit.errors import DataError, ParseError
from embkit.rng import SplitMix64

FNV_OFFSET = 0x811C9DC5
FNV_PRIME = 0x01000193

DEFAULT_BUCKETS = 2_000_000
NEGATIVE_POWER = 0.75


class Vocabulary:
    """Words with frequencies, ordered by descending count then lexically.

    Ids are dense indices 0..V-1 following that order.
    """

    def __init__(self, words, counts):
        self.words = list(words)
        self.counts = np.asarray(counts, dtype=np.int64)
        if len(self.words) != len(self.counts):
            raise ValueError("words and counts length mismatch")
        self.index = {w: i for i, w in enumerate(self.words)}

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def get(self, word):
        """Id of ``word`` or None when absent."""
        return self.index.get(word)

    @property
    def total_count(self) -> int:
        return int(self.counts.sum())

    def save(self, path):
        """Write "word<TAB>count" lines in id order."""
        with open(path, "w", encoding="utf-8") as f:
            for word, count in zip(self.words, self.counts):
                f.write(f"{word}\t{int(count)}\n")

    @classmethod
    def load(cls, path):
        words, counts = [], []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or not parts[1].lstrip("-").isdigit():
                    raise ParseError("expected 'word<TAB>count'", path, lineno)
                words.append(parts[0])
                counts.append(int(parts[1]))
        if not words:
            raise DataError(f"empty vocabulary file {path}")
        return cls(words, counts)


def build_vocab(token_stream: Iterable[str], min_count: int = 1) -> Vocabulary:
    """Count tokens and keep those with frequency >= ``min_count``.

    Orders by descending count, ties broken lexicographically, which fixes
    the id assignment deterministically.
    """
    counts = Counter(token_stream)
    kept = [(w, c) for w, c in counts.items() if c >= min_count]
    if not kept:
        raise DataError("vocabulary is empty after applying min_count")
    kept.sort(key=lambda wc: (-wc[1], wc[0]))
    return Vocabulary([w for w, _ in kept], [c for _, c in kept])


def fnv1a_32(data: bytes) -> int:
    """32-bit FNV-1a hash, stable across runs and platforms."""
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & 0xFFFFFFFF
    return h


def ngram_bucket(ngram: str, bucket_count: int) -> int:
    """Bucket index of an n-gram: FNV-1a of its UTF-8 bytes mod bucket_count."""
    if bucket_count <= 0:
        raise ValueError("bucket_count must be positive")
    return fnv1a_32(ngram.encode("utf-8")) % bucket_count


@dataclass(frozen=True)
class SubwordIndexer:
    """N-gram length bounds and bucket table size for subword vectors."""

    min_n: int = 3
    max_n: int = 3
    bucket_count: int = DEFAULT_BUCKETS

    def __post_init__(self):
        if not 1 <= self.min_n <= self.max_n:
            raise ValueError(f"need 1 <= min_n <= max_n, got {self.min_n}..{self.max_n}")
        if self.bucket_count <= 0:
            raise ValueError("bucket_count must be positive")

    def ngrams(self, word: str) -> list:
        return extract_ngrams(word, self)

    def buckets(self, word: str) -> list:
        return [ngram_bucket(g, self.bucket_count) for g in self.ngrams(word)]


def extract_ngrams(word: str, indexer: SubwordIndexer) -> list:
    """Character n-grams of the boundary-marked word "<word>".

    Emitted shorter lengths first, left to right within a length.  When the
    marked form is shorter than min_n it is returned as the single subword,
    so every word has at least one n-gram.
    """
    if not word:
        raise ValueError("word must be non-empty")
    marked = f"<{word}>"
    if len(marked) < indexer.min_n:
        return [marked]
    grams = []
    for n in range(indexer.min_n, indexer.max_n + 1):
        for i in range(len(marked) - n + 1):
            grams.append(marked[i : i + n])
    return grams


class NegativeSampler:
    """Draws word ids with probability proportional to count**power.

    Implemented as a binary search over the cumulative mass table; the caller
    supplies the PRNG so concurrent users never share mutable state.
    """

    def __init__(self, cumulative: np.ndarray):
        self.cumulative = np.asarray(cumulative, dtype=np.float64)
        if self.cumulative.size == 0 or self.cumulative[-1] <= 0:
            raise DataError("sampler needs positive total mass")

    def draw(self, rng: SplitMix64) -> int:
        u = rng.uniform() * self.cumulative[-1]
        idx = int(np.searchsorted(self.cumulative, u, side="right"))
        return min(idx, len(self.cumulative) - 1)


def build_negative_sampler(vocab: Vocabulary, power: float = NEGATIVE_POWER) -> NegativeSampler:
    if len(vocab) == 0:
        raise DataError("cannot build a sampler from an empty vocabulary")
    mass = vocab.counts.astype(np.float64) ** power
    return NegativeSampler(np.cumsum(mass))

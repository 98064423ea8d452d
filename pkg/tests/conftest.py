"""Shared helpers and fixtures for the test suite."""

import numpy as np
import pytest

from embkit.corpus import ConlluToken
from embkit.rng import SplitMix64
from embkit.store import EmbeddingStore


def save_conllu(sentences, path):
    """Minimal CoNLL-U writer used for round-trip tests.

    Fills the columns the reader ignores with '_' and numbers tokens from 1.
    """
    with open(path, "w", encoding="utf-8") as f:
        for sent in sentences:
            f.write("# test sentence\n")
            for i, tok in enumerate(sent, start=1):
                cols = [str(i), tok.form, "_", tok.upos, "_", tok.feats,
                        "0", "_", "_", "_"]
                f.write("\t".join(cols) + "\n")
            f.write("\n")


def random_store(words, dim, seed, scale=1.0):
    """Plain store with deterministic uniform vectors in [-scale, scale)."""
    rng = SplitMix64(seed)
    vecs = (2.0 * scale * rng.uniform_block(len(words) * dim) - scale).reshape(
        len(words), dim
    )
    return EmbeddingStore(words, vecs.astype(np.float32))


def two_block_corpus(total_tokens=100_000, seed=7):
    """Synthetic corpus with two interchangeable words in one topic block.

    Block one alternates context words c0..c3 with x1/x2 (interchangeable by
    construction); block two alternates d0..d3 with y1/y2.  The vocabularies
    of the two blocks are disjoint.
    """
    rng = SplitMix64(seed)
    lines = []
    count = 0
    while count < total_tokens:
        line = []
        if rng.randint(2) == 0:
            for _ in range(10):
                line.append("c%d" % rng.randint(4))
                line.append("x1" if rng.randint(2) else "x2")
        else:
            for _ in range(10):
                line.append("d%d" % rng.randint(4))
                line.append("y1" if rng.randint(2) else "y2")
        lines.append(line)
        count += len(line)
    return lines


# Published 13-section benchmark layout: (name, kind, accuracy %, questions).
# The accuracy column is one released model's section scores, used as frozen
# input for the aggregation oracle.
REFERENCE_SECTIONS = [
    ("capital-common-countries", "semantic", 75.3, 506),
    ("capital-world", "semantic", 49.14, 4369),
    ("currency", "semantic", 2.19, 866),
    ("city-in-state", "semantic", 23.21, 56),
    ("family", "semantic", 15.8, 506),
    ("gram1-adjective-to-adverb", "syntactic", 6.55, 992),
    ("gram2-opposite", "syntactic", 11.2, 812),
    ("gram3-superlative", "syntactic", 12.74, 1122),
    ("gram4-present-participle", "syntactic", 2.27, 1056),
    ("gram5-nationality-adjective", "syntactic", 47.71, 1599),
    ("gram6-past-tense", "syntactic", 1.85, 1560),
    ("gram7-plural", "syntactic", 20.49, 1332),
    ("gram8-plural-verbs", "syntactic", 5.4, 870),
]

TOY_LEXICON = {
    "the": ("DET", "_"),
    "a": ("DET", "_"),
    "cat": ("NOUN", "Number=Sing"),
    "dog": ("NOUN", "Number=Sing"),
    "cats": ("NOUN", "Number=Plur"),
    "dogs": ("NOUN", "Number=Plur"),
    "sees": ("VERB", "Number=Sing|Tense=Pres"),
    "saw": ("VERB", "Tense=Past"),
    "run": ("VERB", "Number=Plur|Tense=Pres"),
    "ran": ("VERB", "Tense=Past"),
    "big": ("ADJ", "Degree=Pos"),
    "small": ("ADJ", "Degree=Pos"),
}

TOY_PATTERNS = [
    ["the", "cat", "sees", "a", "dog"],
    ["a", "dog", "saw", "the", "cat"],
    ["the", "big", "cats", "run"],
    ["small", "dogs", "ran"],
    ["the", "dogs", "run"],
    ["a", "big", "dog", "sees", "cats"],
    ["cats", "saw", "small", "dogs"],
    ["the", "small", "cat", "ran"],
    ["dogs", "sees", "the", "big", "cat"],
    ["a", "cats", "run", "the", "dog"],
]


def toy_treebank():
    """Ten sentences with a fixed tag pair per word."""
    return [
        [ConlluToken(w, *TOY_LEXICON[w]) for w in pattern]
        for pattern in TOY_PATTERNS
    ]


@pytest.fixture
def toy_tag_store():
    """Embeddings covering the toy treebank lexicon."""
    return random_store(sorted(TOY_LEXICON), dim=12, seed=5, scale=0.5)

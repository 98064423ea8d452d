"""Text ingestion: normalization, tokenization, dataset readers, random splits.

Three on-disk formats are understood:

* raw corpus        -- UTF-8 plain text, one document per line
* labeled corpus    -- UTF-8 JSON lines, ``{"label": str, "text": str}``
* treebank          -- CoNLL-U (10 tab-separated columns)

A "document" throughout the package is simply a list of normalized token
strings.
"""

from __future__ import annotations

import json
from typing import Iterable, NamedTuple

from embkit.errors import ConfigError, DataError, ParseError
from embkit.rng import SplitMix64

Document = list  # list[str]; alias kept for readability of signatures


class LabeledDocument(NamedTuple):
    label: str
    tokens: list


class ConlluToken(NamedTuple):
    form: str
    upos: str
    feats: str


# A sentence is a non-empty list of ConlluToken.
ConlluSentence = list


def normalize_and_tokenize(text: str) -> list:
    """Lowercase ``text`` and split it into maximal runs of letters.

    Every non-letter character (punctuation, digits, symbols, whitespace)
    acts as a separator and is dropped.  Empty input yields an empty list.
    """
    cleaned = "".join(ch if ch.isalpha() else " " for ch in text.lower())
    return cleaned.split()


def remove_stopwords(tokens: Iterable[str], stoplist) -> list:
    """Return the tokens not present in ``stoplist``, preserving order."""
    return [t for t in tokens if t not in stoplist]


def load_stopwords(path) -> set:
    """Load a stop-word list, one word per line (UTF-8)."""
    try:
        with open(path, encoding="utf-8") as f:
            return {line.strip() for line in f if line.strip()}
    except OSError as exc:
        raise ConfigError(f"cannot read stop-word list {path}: {exc}") from exc


def load_raw_corpus(path) -> list:
    """Read a plain-text corpus, one document per line, normalizing each."""
    with open(path, encoding="utf-8") as f:
        return [normalize_and_tokenize(line) for line in f]


def load_labeled_corpus(path) -> list:
    """Read a JSON-lines corpus of ``{"label": ..., "text": ...}`` objects."""
    docs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", path, lineno) from exc
            if not isinstance(obj, dict) or "label" not in obj or "text" not in obj:
                raise ParseError('expected {"label": ..., "text": ...}', path, lineno)
            label = obj["label"]
            if not isinstance(label, str) or not label:
                raise ParseError("label must be a non-empty string", path, lineno)
            docs.append(LabeledDocument(label, normalize_and_tokenize(obj["text"])))
    return docs


def _skippable_id(token_id: str) -> bool:
    """True for multiword ranges ("3-4") and empty nodes ("3.1")."""
    for sep in ("-", "."):
        if sep in token_id:
            left, _, right = token_id.partition(sep)
            if left.isdigit() and right.isdigit():
                return True
    return False


def load_conllu(path) -> list:
    """Parse a CoNLL-U file into sentences of (form, upos, feats) tokens.

    Comment lines, multiword-token ranges and empty nodes are skipped.  FEATS
    strings are normalized to the canonical alphabetically-sorted order.
    """
    sentences = []
    current = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                if current:
                    sentences.append(current)
                    current = []
                continue
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 10:
                raise ParseError(
                    f"expected 10 tab-separated columns, got {len(cols)}",
                    path,
                    lineno,
                )
            if cols[0].isdigit():
                feats = cols[5]
                if feats != "_":
                    feats = "|".join(sorted(feats.split("|")))
                current.append(ConlluToken(cols[1], cols[3], feats))
            elif not _skippable_id(cols[0]):
                raise ParseError(f"bad token id {cols[0]!r}", path, lineno)
    if current:
        sentences.append(current)
    return sentences


def split_random(items, fraction: float, seed: int):
    """Split ``items`` into two disjoint random parts.

    The items are shuffled with a seeded splitmix64 generator and the last
    ``round(fraction * len(items))`` of the shuffled order become the second
    part.  Deterministic for a fixed seed.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    items = list(items)
    if not items:
        raise DataError("cannot split an empty list")
    rng = SplitMix64(seed)
    rng.shuffle(items)
    size_b = round(fraction * len(items))
    cut = len(items) - size_b
    return items[:cut], items[cut:]

"""Immutable embedding stores: lookup, OOV composition, similarity, formats.

Two persistent formats exist.  The text format is the common interchange
format ("V dim" header, then one word and its values per line) and can only
carry plain stores.  The binary format additionally carries the hashed
subword bucket table that enables out-of-vocabulary composition:

    magic "EMBW" | u32 version=1 | u32 dim | u32 V | u32 B | u8 min_n | u8 max_n
    V x (u16 utf-8 length, word bytes, dim float32)
    B x (dim float32)

All integers and floats are little-endian; round-trips are bit-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from embkit.errors import FormatError, ParseError
from embkit.vocab import SubwordIndexer

MAGIC = b"EMBW"
VERSION = 1


@dataclass(frozen=True)
class SubwordTable:
    """Hashed n-gram bucket vectors attached to a store."""

    min_n: int
    max_n: int
    vectors: np.ndarray  # (bucket_count, dim) float32

    @property
    def bucket_count(self) -> int:
        return self.vectors.shape[0]

    def indexer(self) -> SubwordIndexer:
        return SubwordIndexer(self.min_n, self.max_n, self.bucket_count)


class EmbeddingStore:
    """Dense word-vector table, optionally with a subword bucket table.

    Immutable after construction; all query operations are safe for any
    number of concurrent readers.
    """

    def __init__(self, words, vectors, subword: SubwordTable | None = None):
        self.words = list(words)
        self.vectors = np.ascontiguousarray(vectors, dtype=np.float32)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.words):
            raise ValueError("vectors must be a (len(words), dim) matrix")
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("duplicate words in store")
        self.subword = subword
        self._normed = None

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    # -- lookup ---------------------------------------------------------

    def vector(self, word: str):
        """Vector of ``word`` or None when it cannot be resolved.

        Plain store: the word's row, or None when out of vocabulary.
        Subword store: mean of the word's row and its n-gram bucket rows;
        for OOV words the mean of the bucket rows alone.  The mean is
        accumulated in float64 and rounded once to float32.
        """
        idx = self.index.get(word)
        if self.subword is None:
            return self.vectors[idx].copy() if idx is not None else None
        if not word:
            return None
        buckets = self.subword.indexer().buckets(word)
        rows = [self.vectors[idx]] if idx is not None else []
        rows.extend(self.subword.vectors[b] for b in buckets)
        total = np.zeros(self.dim, dtype=np.float64)
        for row in rows:
            total += row
        return (total / len(rows)).astype(np.float32)

    # -- similarity -----------------------------------------------------

    def _normalized(self) -> np.ndarray:
        if self._normed is None:
            norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
            norms[norms == 0.0] = 1.0
            self._normed = (self.vectors / norms).astype(np.float32)
        return self._normed

    def nearest(self, query, k: int, exclude=()):
        """Top-k vocabulary words by cosine to ``query``.

        Bucket rows are never candidates.  Results are ordered by descending
        similarity with ties broken by ascending word id.
        """
        if k < 0:
            raise ValueError("k must be non-negative")
        if k == 0 or len(self.words) == 0:
            return []
        q = np.asarray(query, dtype=np.float32)
        qnorm = float(np.linalg.norm(q))
        if qnorm == 0.0:
            raise ValueError("cosine similarity is undefined for a zero vector")
        sims = self._normalized() @ (q / qnorm)
        for word in exclude:
            idx = self.index.get(word)
            if idx is not None:
                sims[idx] = -np.inf
        order = np.lexsort((np.arange(len(sims)), -sims))
        out = []
        for idx in order[:k]:
            if sims[idx] == -np.inf:
                break
            out.append((self.words[idx], float(sims[idx])))
        return out

    def restrict(self, n: int) -> "EmbeddingStore":
        """Keep only the first ``n`` words in id (frequency) order.

        The subword table, if any, is kept intact.
        """
        if n < 1:
            raise ValueError("n must be >= 1")
        if n >= len(self.words):
            return self
        return EmbeddingStore(self.words[:n], self.vectors[:n], self.subword)

    def to_plain(self) -> "EmbeddingStore":
        """Materialize composed per-word vectors into a plain store."""
        if self.subword is None:
            return self
        rows = np.vstack([self.vector(w) for w in self.words])
        return EmbeddingStore(self.words, rows)

    # -- text format ------------------------------------------------------

    def save_text(self, path):
        if self.subword is not None:
            raise FormatError(
                "text format cannot carry subword tables; "
                "use save_binary or to_plain() first"
            )
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"{len(self.words)} {self.dim}\n")
            for word, row in zip(self.words, self.vectors):
                f.write(word + " " + " ".join("%.6f" % v for v in row) + "\n")

    @classmethod
    def load_text(cls, path) -> "EmbeddingStore":
        with open(path, encoding="utf-8") as f:
            header = f.readline()
            parts = header.split()
            if len(parts) != 2 or not all(p.isdigit() for p in parts):
                raise ParseError("expected header 'V dim'", path, 1)
            count, dim = int(parts[0]), int(parts[1])
            words, rows = [], np.empty((count, dim), dtype=np.float32)
            seen = set()
            lineno = 1
            for lineno, line in enumerate(f, start=2):
                if lineno - 2 >= count:
                    if line.strip():
                        raise ParseError(
                            f"more rows than the declared {count}", path, lineno
                        )
                    continue
                cols = line.rstrip("\n").split(" ")
                if len(cols) != dim + 1:
                    raise ParseError(
                        f"expected word + {dim} values, got {len(cols)} fields",
                        path,
                        lineno,
                    )
                word = cols[0]
                if word in seen:
                    raise ParseError(f"duplicate word {word!r}", path, lineno)
                seen.add(word)
                try:
                    rows[lineno - 2] = [float(v) for v in cols[1:]]
                except ValueError as exc:
                    raise ParseError(f"bad float value: {exc}", path, lineno) from exc
                words.append(word)
        if len(words) != count:
            raise ParseError(
                f"header declared {count} rows but file has {len(words)}", path
            )
        return cls(words, rows)

    # -- binary format ----------------------------------------------------

    def save_binary(self, path):
        sub = self.subword
        bucket_count = sub.bucket_count if sub is not None else 0
        min_n = sub.min_n if sub is not None else 0
        max_n = sub.max_n if sub is not None else 0
        with open(path, "wb") as f:
            f.write(MAGIC)
            f.write(
                struct.pack(
                    "<IIIIBB", VERSION, self.dim, len(self.words), bucket_count, min_n, max_n
                )
            )
            for word, row in zip(self.words, self.vectors):
                data = word.encode("utf-8")
                if len(data) > 0xFFFF:
                    raise FormatError(f"word too long for binary format: {word[:32]}...")
                f.write(struct.pack("<H", len(data)))
                f.write(data)
                f.write(row.astype("<f4", copy=False).tobytes())
            if sub is not None:
                f.write(sub.vectors.astype("<f4", copy=False).tobytes())

    @classmethod
    def load_binary(cls, path) -> "EmbeddingStore":
        with open(path, "rb") as f:
            magic = f.read(4)
            if magic != MAGIC:
                raise FormatError(f"bad magic {magic!r}; not an embedding file")
            head = f.read(18)
            if len(head) != 18:
                raise FormatError("truncated header")
            version, dim, count, bucket_count, min_n, max_n = struct.unpack("<IIIIBB", head)
            if version != VERSION:
                raise FormatError(f"unsupported version {version}")
            words = []
            rows = np.empty((count, dim), dtype=np.float32)
            row_bytes = dim * 4
            for i in range(count):
                lenbuf = f.read(2)
                if len(lenbuf) != 2:
                    raise FormatError("truncated word entry")
                (wlen,) = struct.unpack("<H", lenbuf)
                data = f.read(wlen + row_bytes)
                if len(data) != wlen + row_bytes:
                    raise FormatError("truncated word entry")
                words.append(data[:wlen].decode("utf-8"))
                rows[i] = np.frombuffer(data[wlen:], dtype="<f4")
            subword = None
            if bucket_count:
                payload = f.read(bucket_count * row_bytes)
                if len(payload) != bucket_count * row_bytes:
                    raise FormatError("truncated bucket table")
                buckets = np.frombuffer(payload, dtype="<f4").reshape(bucket_count, dim)
                subword = SubwordTable(min_n, max_n, buckets.copy())
            if f.read(1):
                raise FormatError("trailing bytes after payload")
        return cls(words, rows, subword)


def load_store(path) -> EmbeddingStore:
    """Open either format, auto-detected by the binary magic bytes."""
    with open(path, "rb") as f:
        magic = f.read(4)
    if magic == MAGIC:
        return EmbeddingStore.load_binary(path)
    return EmbeddingStore.load_text(path)


def cosine(u, v) -> float:
    """Cosine similarity of two non-zero vectors, clipped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def unit(v) -> np.ndarray:
    """Unit-normalized float32 copy of ``v``."""
    v = np.asarray(v, dtype=np.float32)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return (v / norm).astype(np.float32)

"""Word embedding container plus word2vec text and binary I/O."""

from __future__ import annotations

import logging
import struct
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "Embedding",
    "EmbeddingFormatError",
    "load_word2vec_text",
    "save_word2vec_text",
    "load_binary",
    "save_binary",
    "load_embedding",
    "save_embedding",
    "common_vocab",
    "nearest_neighbors",
]

BINARY_MAGIC = b"EMBV1\n"


class EmbeddingFormatError(ValueError):
    pass


class Embedding:
    """Immutable vocabulary + ``|V| x d`` matrix.

    Row ``i`` of ``matrix`` is the vector of ``words[i]``. Lookups are exact
    (case-sensitive).
    """

    def __init__(self, words: Sequence[str], matrix, dim: int | None = None):
        words = list(words)
        matrix = np.asarray(matrix)
        if matrix.ndim != 2:
            if matrix.size == 0 and dim is not None:
                matrix = matrix.reshape(0, dim)
            else:
                raise ValueError(f"matrix must be 2-D, got shape {matrix.shape}")
        if matrix.shape[0] != len(words):
            raise ValueError(f"{len(words)} words but {matrix.shape[0]} rows")
        if dim is not None and matrix.shape[1] != dim:
            raise ValueError(f"expected dim {dim}, matrix has {matrix.shape[1]} columns")
        if matrix.shape[1] < 1:
            raise ValueError("dim must be positive")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("embedding contains non-finite values")
        index = {}
        for i, w in enumerate(words):
            if w in index:
                raise ValueError(f"duplicate word {w!r}")
            index[w] = i
        matrix = matrix.copy() if matrix.flags.writeable else matrix
        matrix.setflags(write=False)
        self.words = tuple(words)
        self.vocab = index
        self.matrix = matrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word) -> bool:
        return word in self.vocab

    def __getitem__(self, word: str) -> np.ndarray:
        return self.matrix[self.vocab[word]]

    def vector(self, word: str) -> np.ndarray | None:
        """Row for ``word`` or ``None`` when it is out of vocabulary."""
        i = self.vocab.get(word)
        return None if i is None else self.matrix[i]

    def rows(self, words: Iterable[str], dtype=np.float64) -> np.ndarray:
        idx = [self.vocab[w] for w in words]
        return np.asarray(self.matrix[idx], dtype=dtype).reshape(len(idx), self.dim)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Embedding):
            return NotImplemented
        return (
            self.words == other.words
            and self.matrix.shape == other.matrix.shape
            and bool(np.array_equal(self.matrix, other.matrix))
        )

    def __repr__(self) -> str:
        return f"Embedding(|V|={len(self)}, dim={self.dim}, dtype={self.matrix.dtype})"


def _format_row(row: np.ndarray) -> str:
    if row.dtype == np.float64:
        return " ".join(repr(v) for v in row.tolist())
    # numpy scalars print their shortest round-tripping repr for their own width
    return " ".join(str(v) for v in row)


def save_word2vec_text(emb: Embedding, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(emb)} {emb.dim}\n")
        for w, row in zip(emb.words, emb.matrix):
            fh.write(f"{w} {_format_row(row)}\n")


def load_word2vec_text(path, dtype=np.float32) -> Embedding:
    """Parse the word2vec text format (``N D`` header, then ``word f1 .. fD``).

    Duplicate words keep their first occurrence and log a warning.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise EmbeddingFormatError(f"{path}: malformed header, expected 'N D'")
        try:
            n, d = int(header[0]), int(header[1])
        except ValueError as exc:
            raise EmbeddingFormatError(f"{path}: malformed header {header!r}") from exc
        if n < 0 or d < 1:
            raise EmbeddingFormatError(f"{path}: bad header values N={n}, D={d}")
        words: list[str] = []
        seen: set[str] = set()
        matrix = np.empty((n, d), dtype=dtype)
        row = 0
        nlines = 0
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            nlines += 1
            if nlines > n:
                raise EmbeddingFormatError(f"{path}:{lineno}: more rows than header N={n}")
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if len(parts) != d + 1:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected {d} values, got {len(parts) - 1}"
                )
            word = parts[0]
            if word in seen:
                logger.warning("%s:%d: duplicate word %r ignored", path, lineno, word)
                continue
            try:
                matrix[row] = np.array(parts[1:], dtype=dtype)
            except ValueError as exc:
                raise EmbeddingFormatError(f"{path}:{lineno}: {exc}") from exc
            seen.add(word)
            words.append(word)
            row += 1
    if nlines < n:
        raise EmbeddingFormatError(f"{path}: header declares {n} rows, found {nlines}")
    return Embedding(words, matrix[:row], dim=d)


def save_binary(emb: Embedding, path) -> None:
    """Sidecar format: magic, ``<u8 N, <u4 D``, then per word ``<u4 len`` + UTF-8 + D ``<f4``."""
    mat = np.ascontiguousarray(emb.matrix, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(BINARY_MAGIC)
        fh.write(struct.pack("<QI", len(emb), emb.dim))
        for w, row in zip(emb.words, mat):
            b = w.encode("utf-8")
            fh.write(struct.pack("<I", len(b)))
            fh.write(b)
            fh.write(row.tobytes())


def load_binary(path) -> Embedding:
    with open(path, "rb") as fh:
        if fh.read(len(BINARY_MAGIC)) != BINARY_MAGIC:
            raise EmbeddingFormatError(f"{path}: not an embedding sidecar file")
        n, d = struct.unpack("<QI", fh.read(12))
        words, seen = [], set()
        matrix = np.empty((n, d), dtype=np.float32)
        row = 0
        for _ in range(n):
            (ln,) = struct.unpack("<I", fh.read(4))
            w = fh.read(ln).decode("utf-8")
            vec = np.frombuffer(fh.read(4 * d), dtype="<f4")
            if vec.size != d:
                raise EmbeddingFormatError(f"{path}: truncated record for {w!r}")
            if w in seen:
                logger.warning("%s: duplicate word %r ignored", path, w)
                continue
            seen.add(w)
            words.append(w)
            matrix[row] = vec
            row += 1
    return Embedding(words, matrix[:row], dim=d)


def load_embedding(path, dtype=np.float32) -> Embedding:
    """Load either format, sniffing the binary magic."""
    with open(path, "rb") as fh:
        binary = fh.read(len(BINARY_MAGIC)) == BINARY_MAGIC
    return load_binary(path) if binary else load_word2vec_text(path, dtype=dtype)


def save_embedding(emb: Embedding, path) -> None:
    if str(path).endswith(".bin"):
        save_binary(emb, path)
    else:
        save_word2vec_text(emb, path)


def common_vocab(a: Embedding, b: Embedding) -> list[str]:
    """Words present in both embeddings, sorted lexicographically."""
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    return sorted(w for w in small.words if w in large.vocab)


def _word_ranks(emb: Embedding) -> np.ndarray:
    order = sorted(range(len(emb)), key=emb.words.__getitem__)
    ranks = np.empty(len(emb), dtype=np.int64)
    ranks[order] = np.arange(len(emb))
    return ranks


def nearest_neighbors(emb: Embedding, query, k: int = 10, metric: str = "cosine"):
    """``k`` best ``(word, score)`` pairs for a word or vector query.

    Score is cosine similarity (descending) or Euclidean distance (ascending).
    A word query is excluded from its own results. Ties go to the
    lexicographically smaller word.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if metric not in ("cosine", "euclidean"):
        raise ValueError(f"unknown metric {metric!r}")
    exclude = None
    if isinstance(query, str):
        if query not in emb.vocab:
            raise KeyError(f"query word {query!r} not in vocabulary")
        exclude = emb.vocab[query]
        q = np.asarray(emb.matrix[exclude], dtype=np.float64)
    else:
        q = np.asarray(query, dtype=np.float64)
        if q.shape != (emb.dim,):
            raise ValueError(f"query vector must have {emb.dim} components")
    M = np.asarray(emb.matrix, dtype=np.float64)
    if metric == "euclidean":
        scores = np.sqrt(np.maximum(((M - q) ** 2).sum(axis=1), 0.0))
        key = scores
    else:
        norms = np.linalg.norm(M, axis=1) * np.linalg.norm(q)
        with np.errstate(invalid="ignore", divide="ignore"):
            scores = np.where(norms > 0, M @ q / np.where(norms > 0, norms, 1.0), 0.0)
        key = -scores
    order = np.lexsort((_word_ranks(emb), key))
    if exclude is not None:
        order = order[order != exclude]
    return [(emb.words[i], float(scores[i])) for i in order[:k]]

"""Tweet feature extraction: bag-of-words, lexicons, embedding averages.

Also holds the dataset / lexicon file readers and the train-only min-max
scaler.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from embaug.embedding import Embedding

logger = logging.getLogger(__name__)

__all__ = [
    "EMOTIONS",
    "LabeledDataset",
    "load_dataset",
    "save_dataset",
    "BowVocab",
    "fit_bow",
    "bow_vector",
    "bow_matrix",
    "CategoryLexicon",
    "load_category_lexicon",
    "category_percentages",
    "dataset_category_profile",
    "EmotionLexicon",
    "load_emotion_lexicon",
    "emotion_scores",
    "avg_embedding",
    "average_embeddings",
    "pad_concat",
    "MinMaxScaler",
    "fit_minmax",
    "apply_minmax",
]

EMOTIONS = ("anger", "anticipation", "disgust", "fear", "joy", "sadness", "surprise", "trust")


@dataclass(frozen=True)
class LabeledDataset:
    texts: tuple[str, ...]
    labels: np.ndarray  # int, 1 = depressive

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (len(self.texts),):
            raise ValueError("one label per text required")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.texts)

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledDataset(tuple(self.texts[i] for i in idx), self.labels[idx])


def load_dataset(path) -> LabeledDataset:
    """Read ``label<TAB>text`` lines."""
    texts, labels = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            label, sep, text = line.partition("\t")
            if not sep or label.strip() not in ("0", "1"):
                raise ValueError(f"{path}:{lineno}: expected 'label<TAB>text' with label 0/1")
            labels.append(int(label))
            texts.append(text)
    return LabeledDataset(tuple(texts), np.array(labels, dtype=np.int64))


def save_dataset(ds: LabeledDataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for y, t in zip(ds.labels, ds.texts):
            fh.write(f"{int(y)}\t{t}\n")


# ---------------------------------------------------------------- bag of words


@dataclass(frozen=True)
class BowVocab:
    terms: tuple[str, ...]
    counts: tuple[int, ...]

    @property
    def index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.terms)}

    def __len__(self) -> int:
        return len(self.terms)


def fit_bow(train_docs: Sequence[Sequence[str]], size: int = 400) -> BowVocab:
    """Most frequent ``size`` terms of the (already preprocessed) training docs."""
    if len(train_docs) == 0:
        raise ValueError("empty training set")
    counts = Counter(t for doc in train_docs for t in doc)
    top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:size]
    return BowVocab(tuple(t for t, _ in top), tuple(c for _, c in top))


def bow_vector(tokens: Iterable[str], vocab: BowVocab) -> np.ndarray:
    index = vocab.index
    v = np.zeros(len(vocab))
    for t in tokens:
        i = index.get(t)
        if i is not None:
            v[i] += 1
    return v


def bow_matrix(docs: Sequence[Sequence[str]], vocab: BowVocab) -> np.ndarray:
    return np.array([bow_vector(d, vocab) for d in docs]).reshape(len(docs), len(vocab))


# ----------------------------------------------------------- category lexicon


@dataclass
class CategoryLexicon:
    """LIWC-style dictionary: exact words and ``prefix*`` patterns mapped to categories."""

    categories: dict[int, str]
    exact: dict[str, frozenset[int]] = field(default_factory=dict)
    prefixes: dict[str, frozenset[int]] = field(default_factory=dict)

    def __post_init__(self):
        for table in (self.exact, self.prefixes):
            for pat, cats in table.items():
                if not cats or not set(cats) <= set(self.categories):
                    raise ValueError(f"pattern {pat!r} maps to unknown or no categories")

    @property
    def ids(self) -> list[int]:
        return sorted(self.categories)

    @property
    def names(self) -> list[str]:
        return [self.categories[i] for i in self.ids]

    def match(self, token: str) -> set[int]:
        cats = set(self.exact.get(token, ()))
        for n in range(len(token) + 1):
            hit = self.prefixes.get(token[:n])
            if hit:
                cats |= hit
        return cats

    @classmethod
    def from_patterns(cls, categories: dict[int, str], patterns: dict[str, Iterable[int]]):
        exact, prefixes = {}, {}
        for pat, cats in patterns.items():
            pat = pat.lower()
            table = prefixes if pat.endswith("*") else exact
            key = pat.rstrip("*")
            table[key] = frozenset(table.get(key, frozenset()) | set(cats))
        return cls(dict(categories), exact, prefixes)


def load_category_lexicon(path) -> CategoryLexicon:
    """Parse a ``.dic`` file.

    A ``%`` line opens and closes the header of ``id<TAB>name`` lines; each
    remaining line is ``pattern<TAB>id[,id...]`` (tab-separated ids are also
    accepted). A trailing ``*`` marks a prefix pattern.
    """
    categories: dict[int, str] = {}
    patterns: dict[str, set[int]] = {}
    section = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line == "%":
                section += 1
                continue
            if section == 1:
                cid, _, name = line.partition("\t")
                if not name:
                    parts = line.split(None, 1)
                    if len(parts) != 2:
                        raise ValueError(f"{path}:{lineno}: bad category line")
                    cid, name = parts
                categories[int(cid)] = name.strip()
            elif section >= 2:
                fields = [f for f in line.replace(",", "\t").split("\t") if f.strip()]
                if len(fields) < 2:
                    raise ValueError(f"{path}:{lineno}: pattern without categories")
                try:
                    ids = {int(f) for f in fields[1:]}
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from exc
                patterns.setdefault(fields[0].strip(), set()).update(ids)
            else:
                raise ValueError(f"{path}:{lineno}: expected '%' header start")
    return CategoryLexicon.from_patterns(categories, patterns)


def category_percentages(tokens: Sequence[str], lex: CategoryLexicon) -> np.ndarray:
    """Per category, 100 x (matching tokens) / (all tokens)."""
    ids = lex.ids
    pos = {c: i for i, c in enumerate(ids)}
    v = np.zeros(len(ids))
    if not tokens:
        return v
    for t in tokens:
        for c in lex.match(t):
            v[pos[c]] += 1
    return 100.0 * v / len(tokens)


def dataset_category_profile(docs: Sequence[Sequence[str]], lex: CategoryLexicon) -> dict[str, float]:
    if len(docs) == 0:
        raise ValueError("empty subset")
    mean = np.mean([category_percentages(d, lex) for d in docs], axis=0)
    return {name: float(x) for name, x in zip(lex.names, mean)}


# ------------------------------------------------------------ emotion lexicon


@dataclass
class EmotionLexicon:
    scores: dict[str, np.ndarray]

    def __post_init__(self):
        for w, s in self.scores.items():
            if s.shape != (len(EMOTIONS),) or (s < 0).any():
                raise ValueError(f"bad emotion scores for {w!r}")


def load_emotion_lexicon(path) -> EmotionLexicon:
    """Read ``word<TAB>emotion<TAB>score`` rows.

    Files in the NRC ordering (``emotion<TAB>word<TAB>score``) are detected
    per row and accepted too.
    """
    pos = {e: i for i, e in enumerate(EMOTIONS)}
    scores: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields")
            word, emo, score = parts
            if emo not in pos and word in pos:
                word, emo = emo, word
            if emo not in pos:
                raise ValueError(f"{path}:{lineno}: unknown emotion {emo!r}")
            value = float(score)
            if value < 0:
                raise ValueError(f"{path}:{lineno}: negative score")
            scores.setdefault(word.lower(), np.zeros(len(EMOTIONS)))[pos[emo]] += value
    return EmotionLexicon(scores)


def emotion_scores(tokens: Iterable[str], lex: EmotionLexicon) -> np.ndarray:
    v = np.zeros(len(EMOTIONS))
    for t in tokens:
        s = lex.scores.get(t)
        if s is not None:
            v += s
    return v


# ------------------------------------------------------------------ embeddings


def avg_embedding(tokens: Iterable[str], emb: Embedding) -> np.ndarray:
    """Mean of in-vocabulary token vectors; zero vector if none are known."""
    idx = [emb.vocab[t] for t in tokens if t in emb.vocab]
    if not idx:
        return np.zeros(emb.dim)
    return np.asarray(emb.matrix[idx], dtype=np.float64).mean(axis=0)


def average_embeddings(docs: Sequence[Sequence[str]], emb: Embedding) -> tuple[np.ndarray, np.ndarray]:
    """Stack ``avg_embedding`` over docs; also return the all-OOV row mask."""
    X = np.zeros((len(docs), emb.dim))
    all_oov = np.zeros(len(docs), dtype=bool)
    for i, d in enumerate(docs):
        if any(t in emb.vocab for t in d):
            X[i] = avg_embedding(d, emb)
        else:
            all_oov[i] = True
    if all_oov.any():
        logger.debug("%d of %d documents have no in-vocabulary token", all_oov.sum(), len(docs))
    return X, all_oov


def pad_concat(tokens: Sequence[str], emb: Embedding, max_len: int) -> np.ndarray:
    """Concatenate token vectors, zero for OOV, truncated / zero-padded to ``max_len``."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    out = np.zeros((max_len, emb.dim))
    for i, t in enumerate(tokens[:max_len]):
        v = emb.vector(t)
        if v is not None:
            out[i] = v
    return out.ravel()


# -------------------------------------------------------------------- scaling


@dataclass(frozen=True)
class MinMaxScaler:
    min_: np.ndarray
    max_: np.ndarray

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.min_.size:
            raise ValueError(f"expected {self.min_.size} columns, got {X.shape[-1]}")
        span = self.max_ - self.min_
        safe = np.where(span > 0, span, 1.0)
        # constant columns map to 0; out-of-range values are not clamped
        return np.where(span > 0, (X - self.min_) / safe, 0.0)


def fit_minmax(X) -> MinMaxScaler:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need a non-empty 2-D training matrix")
    return MinMaxScaler(X.min(axis=0), X.max(axis=0))


def apply_minmax(scaler: MinMaxScaler, X) -> np.ndarray:
    return scaler.transform(X)

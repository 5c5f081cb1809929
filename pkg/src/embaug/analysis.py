"""PCA projections of word lists and cluster-separation diagnostics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from embaug.embedding import Embedding

__all__ = [
    "PcaModel",
    "pca_fit",
    "silhouette",
    "ProjectionResult",
    "project_wordlists",
    "frequent_words",
    "write_projection",
]


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    axes: np.ndarray  # q x d, orthonormal rows
    explained_variance_ratio: np.ndarray

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) @ self.axes.T

    def inverse_transform(self, Z) -> np.ndarray:
        return np.asarray(Z) @ self.axes + self.mean


def pca_fit(vectors, q: int = 2) -> PcaModel:
    """Top-``q`` eigenvectors of the sample covariance.

    Each axis is oriented so that its largest-magnitude component is positive.
    """
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < q + 1:
        raise ValueError(f"need at least {q + 1} vectors for a {q}-component PCA")
    if q > X.shape[1]:
        raise ValueError("q exceeds the vector dimension")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (X.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    axes = evecs[:, order[:q]].T.copy()
    for row in axes:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    total = evals.sum()
    ratios = evals[:q] / total if total > 0 else np.zeros(q)
    return PcaModel(mean, axes, ratios)


def silhouette(points, labels) -> float:
    """Mean silhouette coefficient with Euclidean distance (singleton clusters score 0)."""
    P = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise ValueError("silhouette needs at least two labels")
    D = np.sqrt(np.maximum(((P[:, None, :] - P[None, :, :]) ** 2).sum(-1), 0.0))
    s = np.zeros(P.shape[0])
    for i in range(P.shape[0]):
        own = labels == labels[i]
        if own.sum() == 1:
            continue
        a = D[i, own].sum() / (own.sum() - 1)
        b = min(D[i, labels == c].mean() for c in uniq if c != labels[i])
        s[i] = (b - a) / max(a, b) if max(a, b) > 0 else 0.0
    return float(s.mean())


@dataclass
class ProjectionResult:
    records: list[tuple[str, str, float, float]]  # word, list name, x, y
    missing: dict[str, list[str]]
    model: PcaModel
    silhouette: float | None


def project_wordlists(emb: Embedding, lists: Mapping[str, Iterable[str]]) -> ProjectionResult:
    """2-D PCA of the union of the listed words that ``emb`` knows.

    A word listed under several names is kept under the first one. Words
    missing from the embedding are reported in ``missing``.
    """
    words, labels, missing, seen = [], [], {}, set()
    for name, ws in lists.items():
        missing[name] = []
        for w in ws:
            if w not in emb.vocab:
                missing[name].append(w)
            elif w not in seen:
                seen.add(w)
                words.append(w)
                labels.append(name)
    if len(words) < 3:
        raise ValueError(f"only {len(words)} listed words are in the embedding; need at least 3")
    X = emb.rows(words)
    model = pca_fit(X, 2)
    Z = model.transform(X)
    records = [(w, lab, float(x), float(y)) for w, lab, (x, y) in zip(words, labels, Z)]
    sil = silhouette(Z, labels) if len(set(labels)) > 1 else None
    return ProjectionResult(records, missing, model, sil)


def frequent_words(docs: Sequence[Sequence[str]], min_count: int) -> set[str]:
    counts = Counter(t for d in docs for t in d)
    return {w for w, c in counts.items() if c >= min_count}


def write_projection(result: ProjectionResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        sil = "nan" if result.silhouette is None else repr(result.silhouette)
        ratios = " ".join(repr(float(r)) for r in result.model.explained_variance_ratio)
        fh.write(f"# silhouette={sil}\n# explained_variance_ratio={ratios}\n")
        for name, ws in result.missing.items():
            if ws:
                fh.write(f"# missing[{name}]={','.join(ws)}\n")
        fh.write("word\tlabel\tx\ty\n")
        for w, lab, x, y in result.records:
            fh.write(f"{w}\t{lab}\t{x!r}\t{y!r}\n")

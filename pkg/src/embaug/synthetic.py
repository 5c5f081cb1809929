"""Synthetic data with known ground truth.

These generators back the test-suite oracles and the bundled benchmark in
which a classifier only does well if it can use domain semantics for words
the domain embedding never saw.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from embaug.embedding import Embedding, save_word2vec_text
from embaug.features import LabeledDataset, save_dataset
from embaug.mapper import MlpMapper, init_mapper

__all__ = [
    "MappingTask",
    "make_mapping_task",
    "make_two_topic_corpus",
    "Benchmark",
    "make_benchmark",
    "write_benchmark",
]


@dataclass
class MappingTask:
    te: Embedding
    de: Embedding  # only the shared words
    target: MlpMapper
    true_de: np.ndarray = field(repr=False)  # noiseless-target rows for every TE word
    shared: list[str] = field(default_factory=list)
    oov: list[str] = field(default_factory=list)


def make_mapping_task(n_words: int = 2000, dim: int = 20, oov_fraction: float = 0.2,
                      noise: float = 0.01, target_hidden: int = 40, seed: int = 0) -> MappingTask:
    """TE ~ N(0, I); DE = target_mlp(TE) + N(0, noise^2), kept for a subset of words.

    The words left out of DE play the role of out-of-vocabulary words whose
    true domain vectors are known.
    """
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n_words, dim))
    target = init_mapper(dim, dim, target_hidden, seed=seed + 1)
    target.W1 *= 2.0
    Y = target.predict(X)
    Yn = Y + rng.normal(0.0, noise, size=Y.shape)
    words = [f"w{i:05d}" for i in range(n_words)]
    n_oov = int(round(n_words * oov_fraction))
    perm = rng.permutation(n_words)
    oov_idx, shared_idx = np.sort(perm[:n_oov]), np.sort(perm[n_oov:])
    te = Embedding(words, X.astype(np.float32))
    de = Embedding([words[i] for i in shared_idx], Yn[shared_idx].astype(np.float32))
    return MappingTask(te, de, target, Yn, [words[i] for i in shared_idx], [words[i] for i in oov_idx])


def make_two_topic_corpus(n_tokens: int = 50_000, words_per_topic: int = 50, sentence_len: int = 10,
                          seed: int = 0) -> tuple[list[list[str]], list[str], list[str]]:
    """Sentences that each draw from one of two disjoint topic vocabularies."""
    rng = np.random.default_rng(seed)
    a = [f"alpha{i}" for i in range(words_per_topic)]
    b = [f"beta{i}" for i in range(words_per_topic)]
    sents, n = [], 0
    while n < n_tokens:
        topic = a if rng.random() < 0.5 else b
        sents.append([topic[i] for i in rng.integers(0, words_per_topic, sentence_len)])
        n += sentence_len
    return sents, a, b


@dataclass
class Benchmark:
    dataset: LabeledDataset
    te: Embedding
    de: Embedding
    forum_words: list[str]
    synonyms: list[str]


def _xor_resolver(dim: int, rng) -> MlpMapper:
    """ReLU net whose first output is |x0 + x1| - |x0 - x1|, the rest random features."""
    n_rand = 4 * dim
    W2 = np.zeros((4 + n_rand, dim))
    W2[0, :2] = (1, 1)
    W2[1, :2] = (-1, -1)
    W2[2, :2] = (1, -1)
    W2[3, :2] = (-1, 1)
    W2[4:, 2:] = rng.normal(0, 1 / np.sqrt(dim), size=(n_rand, dim - 2))
    W1 = np.zeros((dim, 4 + n_rand))
    W1[0, :4] = (1, 1, -1, -1)
    W1[1:, 4:] = rng.normal(0, 0.5 / np.sqrt(n_rand), size=(dim - 1, n_rand))
    return MlpMapper(W2, np.zeros(4 + n_rand), W1, np.zeros(dim))


def make_benchmark(n_tweets: int = 400, n_concepts: int = 60, dim: int = 20, seed: int = 0,
                   label_noise: float = 0.05) -> Benchmark:
    """Short-text benchmark where the class signal is non-linear in the general space.

    Each concept sits in one quadrant of the first two general-embedding
    axes; "depressive" concepts occupy (+,+) and (-,-), control concepts
    (+,-) and (-,+). Averaged general vectors of a tweet therefore do not
    separate the classes linearly. The domain embedding resolves the
    quadrant into a single signed axis but only covers each concept's
    forum words; every concept also has synonyms that exist in the general
    embedding alone. Tweets mix forum words, synonyms and neutral fillers.
    """
    rng = np.random.default_rng(seed)
    a = 2.0
    quads = np.array([(1, 1), (-1, -1), (1, -1), (-1, 1)], dtype=np.float64)
    polarity = np.arange(n_concepts) % 2  # 1 = depressive
    quad = np.where(polarity == 1, rng.integers(0, 2, n_concepts), 2 + rng.integers(0, 2, n_concepts))
    centers = np.zeros((n_concepts, dim))
    centers[:, :2] = a * quads[quad]
    centers[:, 2:] = rng.normal(0, 1.0, size=(n_concepts, dim - 2))

    te_words, te_rows, forum, syn = [], [], {}, {}
    for k in range(n_concepts):
        for kind, store in (("f", forum), ("s", syn)):
            names = [f"c{k:03d}{kind}{j}" for j in range(3)]
            store[k] = names
            for nm in names:
                te_words.append(nm)
                te_rows.append(centers[k] + rng.normal(0, 0.15, dim))
    fillers = [f"fill{j:02d}" for j in range(30)]
    for nm in fillers:
        te_words.append(nm)
        v = rng.normal(0, 1.0, dim)
        v[:2] *= 0.2
        te_rows.append(v)
    general = [f"gen{j:04d}" for j in range(400)]
    for nm in general:
        te_words.append(nm)
        te_rows.append(rng.normal(0, 1.5, dim))
    TE = np.array(te_rows)
    te = Embedding(te_words, TE.astype(np.float32))

    resolver = _xor_resolver(dim, rng)
    de_words = [w for k in range(n_concepts) for w in forum[k]] + fillers + general[:200]
    DE = resolver.predict(te.rows(de_words)) + rng.normal(0, 0.05, size=(len(de_words), dim))
    de = Embedding(de_words, DE.astype(np.float32))

    texts, labels = [], []
    by_pol = [np.flatnonzero(polarity == p) for p in (0, 1)]
    for i in range(n_tweets):
        y = i % 2
        toks = []
        for k in rng.choice(by_pol[y], size=rng.integers(2, 4), replace=True):
            pool = forum[k] if rng.random() < 0.5 else syn[k]
            toks.append(pool[rng.integers(0, 3)])
        toks += [fillers[j] for j in rng.integers(0, len(fillers), rng.integers(2, 5))]
        rng.shuffle(toks)
        texts.append(" ".join(toks))
        labels.append(y if rng.random() >= label_noise else 1 - y)
    ds = LabeledDataset(tuple(texts), np.array(labels))
    return Benchmark(ds, te, de, sorted(w for v in forum.values() for w in v),
                     sorted(w for v in syn.values() for w in v))


def write_benchmark(out_dir, **kwargs) -> dict[str, str]:
    """Write ``dataset.tsv``, ``te.vec`` and ``de.vec`` into ``out_dir``."""
    bench = make_benchmark(**kwargs)
    os.makedirs(out_dir, exist_ok=True)
    paths = {k: os.path.join(out_dir, f) for k, f in
             (("dataset", "dataset.tsv"), ("te", "te.vec"), ("de", "de.vec"))}
    save_dataset(bench.dataset, paths["dataset"])
    save_word2vec_text(bench.te, paths["te"])
    save_word2vec_text(bench.de, paths["de"])
    return paths

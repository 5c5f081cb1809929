"""Skip-gram with negative sampling, trained from scratch on a sentence corpus.

The inner loop is compiled with numba. It uses its own xorshift generator so a
run is fully determined by ``SgnsConfig.seed`` when ``workers == 1``.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numba
import numpy as np

from embaug.embedding import Embedding

logger = logging.getLogger(__name__)

__all__ = [
    "SgnsConfig",
    "CorpusVocab",
    "build_vocab",
    "negative_sample",
    "train_sgns",
    "SgnsResult",
]

SAMPLING_EXPONENT = 0.75


@dataclass(frozen=True)
class SgnsConfig:
    dim: int = 400
    window: int = 5
    mincount: int = 10
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    min_learning_rate_ratio: float = 1e-4
    subsample: float = 0.0
    seed: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.negatives < 1 or self.mincount < 1:
            raise ValueError("dim, window, negatives and mincount must all be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class CorpusVocab:
    words: list[str]
    counts: np.ndarray
    total: int
    probs: np.ndarray = field(repr=False)
    cdf: np.ndarray = field(repr=False)

    @property
    def index(self) -> dict[str, int]:
        return {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)


def build_vocab(sentences: Iterable[Sequence[str]], mincount: int = 10) -> CorpusVocab:
    """Count tokens and keep words seen at least ``mincount`` times.

    Words are ordered by descending count, then lexicographically.
    ``total`` counts every token, including the discarded rare ones.
    """
    counter: Counter = Counter()
    for sent in sentences:
        counter.update(sent)
    if not counter:
        raise ValueError("empty corpus")
    kept = sorted(((w, c) for w, c in counter.items() if c >= mincount), key=lambda wc: (-wc[1], wc[0]))
    words = [w for w, _ in kept]
    counts = np.array([c for _, c in kept], dtype=np.int64)
    weights = counts.astype(np.float64) ** SAMPLING_EXPONENT
    probs = weights / weights.sum() if len(weights) else weights
    cdf = np.cumsum(probs)
    if len(cdf):
        cdf[-1] = 1.0
    return CorpusVocab(words, counts, int(sum(counter.values())), probs, cdf)


def negative_sample(vocab: CorpusVocab, rng: np.random.Generator) -> int:
    """Draw a word index from the smoothed unigram distribution."""
    if len(vocab) == 0:
        raise ValueError("empty vocabulary")
    return int(min(np.searchsorted(vocab.cdf, rng.random(), side="right"), len(vocab) - 1))


@numba.njit(cache=True)
def _xorshift(state):
    state ^= (state << np.uint64(13)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    state ^= state >> np.uint64(7)
    state ^= (state << np.uint64(17)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    return state


@numba.njit(cache=True)
def _uniform(state):
    state = _xorshift(state)
    return state, (state >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True)
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@numba.njit(cache=True)
def _train_span(tokens, sent_ends, start_sent, stop_sent, w_in, w_out, cdf, keep_prob,
                window, negatives, alpha0, alpha_min, words_done, total_words, state):
    """Run SGNS over sentences [start_sent, stop_sent); returns (loss sum, pairs, words, state)."""
    dim = w_in.shape[1]
    nvocab = w_in.shape[0]
    neu1e = np.zeros(dim)
    loss = 0.0
    pairs = 0
    seen = words_done
    sent_buf = np.empty(tokens.shape[0], dtype=np.int64)
    for s in range(start_sent, stop_sent):
        lo = 0 if s == 0 else sent_ends[s - 1]
        hi = sent_ends[s]
        n = 0
        for p in range(lo, hi):
            t = tokens[p]
            seen += 1
            if keep_prob[t] < 1.0:
                state, u = _uniform(state)
                if u >= keep_prob[t]:
                    continue
            sent_buf[n] = t
            n += 1
        alpha = alpha0 * (1.0 - seen / (total_words + 1.0))
        if alpha < alpha_min:
            alpha = alpha_min
        for pos in range(n):
            center = sent_buf[pos]
            state = _xorshift(state)
            b = np.int64(state % np.uint64(window))
            span = window - b
            for cpos in range(pos - span, pos + span + 1):
                if cpos == pos or cpos < 0 or cpos >= n:
                    continue
                ctx = sent_buf[cpos]
                for j in range(dim):
                    neu1e[j] = 0.0
                for d in range(negatives + 1):
                    if d == 0:
                        target = ctx
                        label = 1.0
                    else:
                        state, u = _uniform(state)
                        target = np.searchsorted(cdf, u, side="right")
                        if target >= nvocab:
                            target = nvocab - 1
                        if target == ctx:
                            continue
                        label = 0.0
                    f = 0.0
                    for j in range(dim):
                        f += w_in[center, j] * w_out[target, j]
                    sg = _sigmoid(f)
                    if label == 1.0:
                        loss -= np.log(max(sg, 1e-300))
                    else:
                        loss -= np.log(max(1.0 - sg, 1e-300))
                    g = (label - sg) * alpha
                    for j in range(dim):
                        neu1e[j] += g * w_out[target, j]
                        w_out[target, j] += g * w_in[center, j]
                for j in range(dim):
                    w_in[center, j] += neu1e[j]
                pairs += 1
    return loss, pairs, seen, state


@numba.njit(cache=True, parallel=True)
def _train_parallel(tokens, sent_ends, bounds, w_in, w_out, cdf, keep_prob, window, negatives,
                    alpha0, alpha_min, offsets, total_words, states, out_loss, out_pairs):
    # Hogwild: chunks race on shared rows by design
    for c in numba.prange(bounds.shape[0] - 1):
        loss, pairs, _, st = _train_span(tokens, sent_ends, bounds[c], bounds[c + 1], w_in, w_out,
                                         cdf, keep_prob, window, negatives, alpha0, alpha_min,
                                         offsets[c], total_words, states[c])
        out_loss[c] = loss
        out_pairs[c] = pairs
        states[c] = st


@dataclass
class SgnsResult:
    embedding: Embedding
    vocab: CorpusVocab
    epoch_losses: list[float]
    output_vectors: np.ndarray = field(repr=False)


def _encode(sentences, index):
    tokens, ends = [], []
    for sent in sentences:
        for w in sent:
            i = index.get(w)
            if i is not None:
                tokens.append(i)
        ends.append(len(tokens))
    return np.array(tokens, dtype=np.int64), np.array(ends, dtype=np.int64)


def _seed_state(seed: int, stream: int = 0) -> np.uint64:
    s = np.random.SeedSequence(seed, spawn_key=(stream,)).generate_state(1, dtype=np.uint64)[0]
    return np.uint64(s or 0x9E3779B97F4A7C15)


def train_sgns(sentences: Sequence[Sequence[str]], config: SgnsConfig = SgnsConfig(),
               return_details: bool = False):
    """Train skip-gram negative-sampling word vectors.

    Returns the input (target-word) vectors as a float32 :class:`Embedding`,
    or an :class:`SgnsResult` with per-epoch mean loss when
    ``return_details`` is set. The loss is the negative SGNS objective
    averaged over positive pairs.
    """
    sentences = [list(s) for s in sentences]
    vocab = build_vocab(sentences, config.mincount)
    if len(vocab) < 2:
        raise ValueError(f"need at least 2 words with count >= {config.mincount}, got {len(vocab)}")
    tokens, ends = _encode(sentences, vocab.index)
    rng = np.random.default_rng(config.seed)
    d = config.dim
    w_in = (rng.random((len(vocab), d)) - 0.5) / d
    w_out = np.zeros((len(vocab), d))

    if config.subsample > 0:
        freq = vocab.counts / tokens.size
        keep = (np.sqrt(freq / config.subsample) + 1) * config.subsample / freq
        keep_prob = np.minimum(keep, 1.0)
    else:
        keep_prob = np.ones(len(vocab))

    total = float(tokens.size) * config.epochs
    alpha_min = config.learning_rate * config.min_learning_rate_ratio
    losses = []
    state = _seed_state(config.seed)
    for epoch in range(config.epochs):
        done = float(tokens.size) * epoch
        if config.workers == 1:
            loss, pairs, _, state = _train_span(tokens, ends, 0, len(ends), w_in, w_out, vocab.cdf,
                                                keep_prob, config.window, config.negatives,
                                                config.learning_rate, alpha_min, done, total, state)
        else:
            bounds = np.linspace(0, len(ends), config.workers + 1).astype(np.int64)
            starts = np.concatenate([[0], ends])[bounds[:-1]]
            offsets = done + starts.astype(np.float64)
            states = np.array([_seed_state(config.seed, 1 + epoch * config.workers + c)
                               for c in range(config.workers)], dtype=np.uint64)
            out_loss = np.zeros(config.workers)
            out_pairs = np.zeros(config.workers, dtype=np.int64)
            numba.set_num_threads(min(config.workers, numba.config.NUMBA_NUM_THREADS))
            _train_parallel(tokens, ends, bounds, w_in, w_out, vocab.cdf, keep_prob, config.window,
                            config.negatives, config.learning_rate, alpha_min, offsets, total,
                            states, out_loss, out_pairs)
            loss, pairs = out_loss.sum(), out_pairs.sum()
        losses.append(loss / max(pairs, 1))
        logger.info("sgns epoch %d: loss %.5f over %d pairs", epoch + 1, losses[-1], pairs)

    emb = Embedding(vocab.words, w_in.astype(np.float32))
    if return_details:
        return SgnsResult(emb, vocab, losses, w_out)
    return emb

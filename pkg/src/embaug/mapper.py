"""Non-linear mapping from a general embedding space into a domain space.

A one-hidden-layer regressor ``g(x) = W1 relu(W2 x + b2) + b1`` is fitted on
the words both embeddings know, then applied to every general-vocabulary word
to produce the adjusted embedding. Centroid variants regress onto
neighbourhood means in the domain space instead of the raw domain vectors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from embaug.embedding import Embedding, _word_ranks, common_vocab
from embaug.training import TrainConfig, TrainHistory, fit_minibatch

logger = logging.getLogger(__name__)

__all__ = [
    "MlpMapper",
    "LinearMapper",
    "MapperTrainConfig",
    "CentroidConfig",
    "MapperObjective",
    "forward",
    "mse_loss",
    "gradient",
    "init_mapper",
    "train_mapper",
    "build_ate",
    "build_partial_adjusted",
    "centroid_target",
    "centroid_targets",
    "train_centroid_mapper",
    "save_mapper",
    "load_mapper",
]

CHECKPOINT_VERSION = 1


@dataclass
class MlpMapper:
    W2: np.ndarray  # hidden x d_in
    b2: np.ndarray  # hidden
    W1: np.ndarray  # d_out x hidden
    b1: np.ndarray  # d_out

    kind = "mlp"

    def __post_init__(self):
        h, d_in = self.W2.shape
        if self.b2.shape != (h,) or self.W1.shape[1] != h or self.b1.shape != (self.W1.shape[0],):
            raise ValueError("inconsistent mapper parameter shapes")

    @property
    def d_in(self) -> int:
        return self.W2.shape[1]

    @property
    def d_out(self) -> int:
        return self.W1.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {"W2": self.W2, "b2": self.b2, "W1": self.W1, "b1": self.b1}

    def copy(self) -> "MlpMapper":
        return MlpMapper(**{k: v.copy() for k, v in self.params().items()})

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self._forward(X)[0]

    def _forward(self, X):
        Z = X @ self.W2.T + self.b2
        H = np.maximum(Z, 0.0)
        return H @ self.W1.T + self.b1, (Z, H)

    def _backward(self, X, cache, dP):
        Z, H = cache
        dH = dP @ self.W1
        dZ = dH * (Z > 0)
        return {"W1": dP.T @ H, "b1": dP.sum(axis=0), "W2": dZ.T @ X, "b2": dZ.sum(axis=0)}


@dataclass
class LinearMapper:
    """Affine map ``W x + b``; the hidden layer is bypassed."""

    W: np.ndarray
    b: np.ndarray

    kind = "linear"

    @property
    def d_in(self) -> int:
        return self.W.shape[1]

    @property
    def d_out(self) -> int:
        return self.W.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {"W": self.W, "b": self.b}

    def copy(self) -> "LinearMapper":
        return LinearMapper(self.W.copy(), self.b.copy())

    def predict(self, X):
        return X @ self.W.T + self.b

    def _forward(self, X):
        return self.predict(X), None

    def _backward(self, X, cache, dP):
        return {"W": dP.T @ X, "b": dP.sum(axis=0)}


@dataclass(frozen=True)
class MapperTrainConfig:
    hidden_units: int = 400
    epochs: int = 200
    batch_size: int = 128
    learning_rate: float = 0.01
    momentum: float = 0.9
    validation_fraction: float = 0.1
    patience: int = 5
    seed: int = 0
    linear: bool = False

    def __post_init__(self):
        if self.hidden_units < 1:
            raise ValueError("hidden_units must be >= 1")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in [0, 1)")

    def optimizer(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                           learning_rate=self.learning_rate, momentum=self.momentum,
                           validation_fraction=self.validation_fraction,
                           patience=self.patience, seed=self.seed)


@dataclass(frozen=True)
class CentroidConfig:
    k_near: int = 10
    k_far: int = 10
    far_weight: float = 0.1
    variant: int = 1
    cap_factor: float = 10.0

    def __post_init__(self):
        if self.k_near < 1:
            raise ValueError("k_near must be >= 1")
        if self.variant == 2 and self.k_far < 1:
            raise ValueError("k_far must be >= 1")
        if self.far_weight < 0:
            raise ValueError("far_weight must be >= 0")
        if self.variant not in (1, 2):
            raise ValueError("variant must be 1 or 2")


def _as_batch(X, d: int, what: str) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[-1] != d:
        raise ValueError(f"{what}: expected {d} components, got {X.shape[-1]}")
    return X


def forward(m, x) -> np.ndarray:
    """Map one vector (or a batch of rows) through the mapper."""
    x = np.asarray(x, dtype=np.float64)
    out = m.predict(_as_batch(x, m.d_in, "forward"))
    return out[0] if x.ndim == 1 else out


@dataclass
class MapperObjective:
    """Mean squared distance to ``near`` targets, optionally minus a capped far term.

    ``loss = mean_i ||p_i - near_i||^2 - far_weight * min(||p_i - far_i||^2, cap)``
    """

    near: np.ndarray
    far: np.ndarray | None = None
    far_weight: float = 0.0
    cap: float = np.inf

    def __call__(self, P: np.ndarray, idx: np.ndarray | None = None) -> tuple[float, np.ndarray]:
        near = self.near if idx is None else self.near[idx]
        m = P.shape[0]
        R = P - near
        loss = float((R * R).sum()) / m
        dP = (2.0 / m) * R
        if self.far is not None:
            far = self.far if idx is None else self.far[idx]
            F = P - far
            dist = (F * F).sum(axis=1)
            capped = np.minimum(dist, self.cap)
            loss = loss + (-self.far_weight * float(capped.sum()) / m)
            active = (dist < self.cap).astype(np.float64)
            dP = dP + (-self.far_weight * 2.0 / m) * (active[:, None] * F)
        return loss, dP


def _check_rows(X, Y):
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"row count mismatch: {X.shape[0]} vs {Y.shape[0]}")
    if X.shape[0] == 0:
        raise ValueError("need at least one row")


def objective_and_grad(m, X, objective: MapperObjective, idx=None):
    Xb = X if idx is None else X[idx]
    P, cache = m._forward(Xb)
    loss, dP = objective(P, idx)
    return loss, m._backward(Xb, cache, dP)


def mse_loss(m, X, Y) -> float:
    """``(1/m) sum_i ||g(x_i) - y_i||^2``."""
    X = _as_batch(X, m.d_in, "mse_loss")
    Y = _as_batch(Y, m.d_out, "mse_loss")
    _check_rows(X, Y)
    return MapperObjective(Y)(m.predict(X))[0]


def gradient(m, X, Y, objective: MapperObjective | None = None) -> dict[str, np.ndarray]:
    """Backprop gradients of the mean squared error (or ``objective``).

    The ReLU subgradient at zero is taken as zero.
    """
    X = _as_batch(X, m.d_in, "gradient")
    Y = _as_batch(Y, m.d_out, "gradient")
    _check_rows(X, Y)
    return objective_and_grad(m, X, objective or MapperObjective(Y))[1]


def init_mapper(d_in: int, d_out: int, hidden: int = 400, seed: int = 0, linear: bool = False):
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)

    def glorot(fan_out, fan_in):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-lim, lim, size=(fan_out, fan_in))

    if linear:
        return LinearMapper(glorot(d_out, d_in), np.zeros(d_out))
    return MlpMapper(glorot(hidden, d_in), np.zeros(hidden), glorot(d_out, hidden), np.zeros(d_out))


def _fit(m, X, objective: MapperObjective, cfg: MapperTrainConfig) -> TrainHistory:
    params = m.params()

    def loss_grad(_params, idx):
        return objective_and_grad(m, X, objective, idx)

    return fit_minibatch(params, loss_grad, X.shape[0], cfg.optimizer())


def _pairs(te: Embedding, de: Embedding):
    vocab = common_vocab(te, de)
    if len(vocab) < 2:
        raise ValueError(f"common vocabulary has {len(vocab)} words; need at least 2")
    return vocab, te.rows(vocab), de.rows(vocab)


def train_mapper(te: Embedding, de: Embedding, cfg: MapperTrainConfig = MapperTrainConfig(),
                 return_history: bool = False):
    """Fit ``g`` on ``{(TE(w), DE(w)) : w in TE and DE}`` by mini-batch SGD."""
    _, X, Y = _pairs(te, de)
    m = init_mapper(te.dim, de.dim, cfg.hidden_units, cfg.seed, cfg.linear)
    hist = _fit(m, X, MapperObjective(Y), cfg)
    logger.info("mapper trained: loss %.5g -> %.5g (best epoch %d)",
                hist.train_loss[0], hist.train_loss[-1], hist.best_epoch)
    return (m, hist) if return_history else m


def _map_rows(m, matrix, chunk: int = 65536) -> np.ndarray:
    out = np.empty((matrix.shape[0], m.d_out), dtype=np.float32)
    for s in range(0, matrix.shape[0], chunk):
        out[s:s + chunk] = m.predict(np.asarray(matrix[s:s + chunk], dtype=np.float64))
    return out


def build_ate(te: Embedding, m, de: Embedding | None = None, copy_common: bool = False) -> Embedding:
    """Adjusted embedding: ``g(TE(w))`` for every word of ``te``.

    With ``copy_common`` (requires ``de``), words known to the domain
    embedding take their domain vector verbatim instead.
    """
    if te.dim != m.d_in:
        raise ValueError(f"embedding dim {te.dim} does not match mapper input {m.d_in}")
    out = _map_rows(m, te.matrix)
    if copy_common:
        if de is None:
            raise ValueError("copy_common needs the domain embedding")
        for w in common_vocab(te, de):
            out[te.vocab[w]] = de[w]
    return Embedding(te.words, out)


def build_partial_adjusted(te: Embedding, de: Embedding, m) -> Embedding:
    """Replace only the shared words by ``g(TE(w))``; every other row stays as in ``te``."""
    if m.d_out != m.d_in or te.dim != m.d_in:
        raise ValueError("partial adjustment needs a square mapper matching the embedding dim")
    shared = common_vocab(te, de)
    out = np.array(te.matrix, copy=True)
    idx = np.array([te.vocab[w] for w in shared], dtype=np.int64)
    if idx.size:
        out[idx] = _map_rows(m, te.matrix[idx]).astype(out.dtype)
    return Embedding(te.words, out)


def _select(dist_row, ranks, k, largest):
    """Indices of the ``k`` smallest (or largest) values, ties to the lower rank."""
    key = -dist_row if largest else dist_row
    k = min(k, key.size)
    if k < key.size:
        part = np.argpartition(key, k - 1)[:k]
        thr = key[part].max()
        cand = np.flatnonzero(key <= thr)
    else:
        cand = np.arange(key.size)
    order = np.lexsort((ranks[cand], key[cand]))
    return cand[order[:k]]


def centroid_targets(de: Embedding, words, k_near: int, k_far: int = 0, chunk: int = 512):
    """Near (and far) centroids for each word, by Euclidean distance in ``de``.

    The near centroid averages the word itself with its ``k_near`` nearest
    neighbours; the far centroid averages the ``k_far`` most distant words.
    """
    n = len(de)
    for w in words:
        if w not in de.vocab:
            raise KeyError(f"{w!r} is not in the domain embedding")
    if k_near > n - 1 or k_far > n - 1:
        raise ValueError(f"neighbour counts must be <= {n - 1}")
    M = np.asarray(de.matrix, dtype=np.float64)
    sq = (M * M).sum(axis=1)
    ranks = _word_ranks(de)
    qidx = np.array([de.vocab[w] for w in words], dtype=np.int64)
    near = np.empty((qidx.size, de.dim))
    far = np.empty((qidx.size, de.dim)) if k_far > 0 else None
    for s in range(0, qidx.size, chunk):
        q = qidx[s:s + chunk]
        D = np.maximum(sq[q, None] + sq[None, :] - 2.0 * M[q] @ M.T, 0.0)
        # exact distances for ranking ties; cheap relative to the matmul
        for r, i in enumerate(q):
            row = D[r].copy()
            row[i] = np.inf
            nn = _select(row, ranks, k_near, largest=False)
            near[s + r] = (M[i] + M[nn].sum(axis=0)) / (k_near + 1)
            if far is not None:
                row[i] = -np.inf
                ff = _select(row, ranks, k_far, largest=True)
                far[s + r] = M[ff].mean(axis=0)
    return near, far


def centroid_target(de: Embedding, word: str, cfg: CentroidConfig, which: str = "near") -> np.ndarray:
    if which not in ("near", "far"):
        raise ValueError("which must be 'near' or 'far'")
    if word not in de.vocab:
        raise KeyError(f"{word!r} is not in the domain embedding")
    near, far = centroid_targets(de, [word], cfg.k_near, cfg.k_far if which == "far" else 0)
    return near[0] if which == "near" else far[0]


def train_centroid_mapper(te: Embedding, de: Embedding, cfg: MapperTrainConfig = MapperTrainConfig(),
                          ccfg: CentroidConfig = CentroidConfig(), return_history: bool = False):
    """Fit ``g`` towards near centroids (variant 1), and away from far ones (variant 2).

    The far term is capped at ``cap_factor`` times the mean near loss at
    initialization so the objective stays bounded below.
    """
    vocab, X, _ = _pairs(te, de)
    near, far = centroid_targets(de, vocab, ccfg.k_near, ccfg.k_far if ccfg.variant == 2 else 0)
    m = init_mapper(te.dim, de.dim, cfg.hidden_units, cfg.seed, cfg.linear)
    if ccfg.variant == 1:
        objective = MapperObjective(near)
    else:
        cap = ccfg.cap_factor * MapperObjective(near)(m.predict(X))[0]
        objective = MapperObjective(near, far, ccfg.far_weight, cap)
    hist = _fit(m, X, objective, cfg)
    return (m, hist) if return_history else m


def save_mapper(m, path) -> None:
    with open(path, "wb") as fh:
        np.savez(fh, format_version=np.int64(CHECKPOINT_VERSION), kind=np.array(m.kind), **m.params())


def load_mapper(path):
    with np.load(path, allow_pickle=False) as z:
        version = int(z["format_version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported mapper checkpoint version {version}")
        kind = str(z["kind"])
        if kind == "mlp":
            return MlpMapper(z["W2"], z["b2"], z["W1"], z["b1"])
        if kind == "linear":
            return LinearMapper(z["W"], z["b"])
    raise ValueError(f"unknown mapper kind {kind!r}")

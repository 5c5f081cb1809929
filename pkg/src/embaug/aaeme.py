"""Averaged autoencoded meta-embedding (AAEME) over two source embeddings.

Each source has its own encoder into a shared meta space; the meta vector of a
word is the mean of its two encodings, and one decoder per source must
reconstruct the source vectors from it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from embaug.embedding import Embedding, common_vocab
from embaug.training import TrainConfig, TrainHistory, fit_minibatch

logger = logging.getLogger(__name__)

__all__ = [
    "AaemeModel",
    "AaemeConfig",
    "init_aaeme",
    "meta_embed",
    "reconstruction_loss",
    "loss_and_grad",
    "train_aaeme",
    "build_meta_embedding",
    "save_aaeme",
    "load_aaeme",
]

CHECKPOINT_VERSION = 1
_PARAMS = ("E1", "c1", "E2", "c2", "D1", "e1", "D2", "e2")


@dataclass
class AaemeModel:
    E1: np.ndarray  # meta x d1
    c1: np.ndarray
    E2: np.ndarray  # meta x d2
    c2: np.ndarray
    D1: np.ndarray  # d1 x meta
    e1: np.ndarray
    D2: np.ndarray  # d2 x meta
    e2: np.ndarray
    activation: str = "linear"
    normalize: bool = True

    def __post_init__(self):
        k = self.meta_dim
        ok = (
            self.E2.shape[0] == k and self.c1.shape == (k,) and self.c2.shape == (k,)
            and self.D1.shape == (self.d1, k) and self.D2.shape == (self.d2, k)
            and self.e1.shape == (self.d1,) and self.e2.shape == (self.d2,)
        )
        if not ok:
            raise ValueError("inconsistent AAEME parameter shapes")
        if self.activation not in ("linear", "tanh"):
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def meta_dim(self) -> int:
        return self.E1.shape[0]

    @property
    def d1(self) -> int:
        return self.E1.shape[1]

    @property
    def d2(self) -> int:
        return self.E2.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k) for k in _PARAMS}

    def _act(self, Z):
        return np.tanh(Z) if self.activation == "tanh" else Z

    def _forward(self, X1, X2):
        Z1 = X1 @ self.E1.T + self.c1
        Z2 = X2 @ self.E2.T + self.c2
        A1, A2 = self._act(Z1), self._act(Z2)
        meta = 0.5 * (A1 + A2)
        R1 = meta @ self.D1.T + self.e1
        R2 = meta @ self.D2.T + self.e2
        return meta, R1, R2, (A1, A2)


@dataclass(frozen=True)
class AaemeConfig:
    meta_dim: int | None = None  # defaults to the first source's dim
    activation: str = "linear"
    normalize: bool = True
    epochs: int = 200
    batch_size: int = 128
    learning_rate: float = 0.01
    momentum: float = 0.9
    validation_fraction: float = 0.1
    patience: int = 5
    seed: int = 0

    def optimizer(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                           learning_rate=self.learning_rate, momentum=self.momentum,
                           validation_fraction=self.validation_fraction,
                           patience=self.patience, seed=self.seed)


def init_aaeme(d1: int, d2: int, meta_dim: int, seed: int = 0, activation: str = "linear",
               normalize: bool = True) -> AaemeModel:
    rng = np.random.default_rng(seed)

    def glorot(fan_out, fan_in):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-lim, lim, size=(fan_out, fan_in))

    return AaemeModel(
        glorot(meta_dim, d1), np.zeros(meta_dim), glorot(meta_dim, d2), np.zeros(meta_dim),
        glorot(d1, meta_dim), np.zeros(d1), glorot(d2, meta_dim), np.zeros(d2),
        activation=activation, normalize=normalize,
    )


def _check(model, X1, X2):
    X1 = np.asarray(X1, dtype=np.float64)
    X2 = np.asarray(X2, dtype=np.float64)
    if X1.shape[-1] != model.d1 or X2.shape[-1] != model.d2:
        raise ValueError(f"expected source dims ({model.d1}, {model.d2}), "
                         f"got ({X1.shape[-1]}, {X2.shape[-1]})")
    return X1, X2


def meta_embed(model: AaemeModel, x1, x2) -> np.ndarray:
    """``(enc1(x1) + enc2(x2)) / 2`` for a pair of vectors or two row batches.

    Inputs are used as given; normalization is the caller's job.
    """
    x1, x2 = _check(model, x1, x2)
    single = x1.ndim == 1
    meta = model._forward(np.atleast_2d(x1), np.atleast_2d(x2))[0]
    return meta[0] if single else meta


def loss_and_grad(model: AaemeModel, X1, X2):
    m = X1.shape[0]
    meta, R1, R2, (A1, A2) = model._forward(X1, X2)
    d1 = R1 - X1
    d2 = R2 - X2
    loss = float((d1 * d1).sum() + (d2 * d2).sum()) / m
    g1 = (2.0 / m) * d1
    g2 = (2.0 / m) * d2
    dmeta = g1 @ model.D1 + g2 @ model.D2
    dZ1 = 0.5 * dmeta
    dZ2 = 0.5 * dmeta
    if model.activation == "tanh":
        dZ1 = dZ1 * (1.0 - A1 * A1)
        dZ2 = dZ2 * (1.0 - A2 * A2)
    grads = {
        "D1": g1.T @ meta, "e1": g1.sum(axis=0),
        "D2": g2.T @ meta, "e2": g2.sum(axis=0),
        "E1": dZ1.T @ X1, "c1": dZ1.sum(axis=0),
        "E2": dZ2.T @ X2, "c2": dZ2.sum(axis=0),
    }
    return loss, grads


def reconstruction_loss(model: AaemeModel, X1, X2) -> float:
    """``(1/m) sum_w ||dec1(meta) - x1||^2 + ||dec2(meta) - x2||^2``."""
    X1, X2 = _check(model, np.atleast_2d(X1), np.atleast_2d(X2))
    if X1.shape[0] != X2.shape[0]:
        raise ValueError("row count mismatch")
    if X1.shape[0] == 0:
        raise ValueError("need at least one row")
    return loss_and_grad(model, X1, X2)[0]


def _unit_rows(X):
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return X / np.where(norms > 0, norms, 1.0)


def _sources(model_normalize: bool, src1: Embedding, src2: Embedding, vocab):
    X1, X2 = src1.rows(vocab), src2.rows(vocab)
    if model_normalize:
        X1, X2 = _unit_rows(X1), _unit_rows(X2)
    return X1, X2


def train_aaeme(src1: Embedding, src2: Embedding, cfg: AaemeConfig = AaemeConfig(),
                return_history: bool = False):
    """Minimize reconstruction loss over the shared vocabulary."""
    vocab = common_vocab(src1, src2)
    if len(vocab) < 2:
        raise ValueError(f"common vocabulary has {len(vocab)} words; need at least 2")
    model = init_aaeme(src1.dim, src2.dim, cfg.meta_dim or src1.dim, cfg.seed,
                       cfg.activation, cfg.normalize)
    X1, X2 = _sources(cfg.normalize, src1, src2, vocab)

    def lg(_params, idx):
        return loss_and_grad(model, X1[idx], X2[idx])

    hist: TrainHistory = fit_minibatch(model.params(), lg, len(vocab), cfg.optimizer())
    logger.info("aaeme trained: loss %.5g -> %.5g", hist.train_loss[0], hist.train_loss[-1])
    return (model, hist) if return_history else model


def build_meta_embedding(model: AaemeModel, src1: Embedding, src2: Embedding,
                         chunk: int = 65536) -> Embedding:
    """Meta vectors for every word the two sources share."""
    vocab = common_vocab(src1, src2)
    out = np.empty((len(vocab), model.meta_dim), dtype=np.float32)
    for s in range(0, len(vocab), chunk):
        X1, X2 = _sources(model.normalize, src1, src2, vocab[s:s + chunk])
        out[s:s + chunk] = meta_embed(model, X1, X2).reshape(-1, model.meta_dim)
    return Embedding(vocab, out, dim=model.meta_dim)


def save_aaeme(model: AaemeModel, path) -> None:
    with open(path, "wb") as fh:
        np.savez(fh, format_version=np.int64(CHECKPOINT_VERSION), kind=np.array("aaeme"),
                 activation=np.array(model.activation), normalize=np.array(model.normalize),
                 **model.params())


def load_aaeme(path) -> AaemeModel:
    with np.load(path, allow_pickle=False) as z:
        if int(z["format_version"]) != CHECKPOINT_VERSION or str(z["kind"]) != "aaeme":
            raise ValueError("not a supported AAEME checkpoint")
        return AaemeModel(*(z[k] for k in _PARAMS), activation=str(z["activation"]),
                          normalize=bool(z["normalize"]))

"""Mini-batch SGD loop shared by the mapper and the autoencoder meta-embedding."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)

__all__ = ["TrainConfig", "TrainHistory", "fit_minibatch", "split_validation"]

Params = dict[str, np.ndarray]
# (params, row indices) -> (loss, grads)
LossGrad = Callable[[Params, np.ndarray], tuple[float, Params]]


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings.

    SGD with Nesterov momentum. The learning rate is halved when the
    validation loss fails to improve, and training stops after
    ``patience`` epochs without improvement. The best parameters seen on
    the validation rows are the ones returned.
    """

    epochs: int = 200
    batch_size: int = 128
    learning_rate: float = 0.01
    momentum: float = 0.9
    lr_decay: float = 0.5
    plateau_patience: int = 2
    patience: int = 5
    min_delta: float = 1e-6
    validation_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in [0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    learning_rates: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False


def split_validation(n: int, fraction: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    perm = rng.permutation(n)
    n_val = int(np.floor(n * fraction))
    if n_val >= n:
        n_val = n - 1
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def fit_minibatch(params: Params, loss_grad: LossGrad, n: int, cfg: TrainConfig) -> TrainHistory:
    """Optimize ``params`` in place over ``n`` training rows.

    Entry 0 of ``history.train_loss`` is the full-batch loss at
    initialization; entry ``e`` is the loss after epoch ``e``.
    """
    rng = np.random.default_rng(cfg.seed)
    train_idx, val_idx = split_validation(n, cfg.validation_fraction, rng)
    monitor = val_idx if val_idx.size else train_idx
    hist = TrainHistory()
    hist.train_loss.append(loss_grad(params, train_idx)[0])
    best = loss_grad(params, monitor)[0]
    hist.val_loss.append(best)
    if cfg.epochs == 0:
        return hist

    best_params = {k: v.copy() for k, v in params.items()}
    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    lr = cfg.learning_rate
    since_best = 0
    since_decay = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(train_idx)
        for start in range(0, order.size, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            # Nesterov: evaluate the gradient at the look-ahead point
            for k in params:
                params[k] += cfg.momentum * velocity[k]
            _, grads = loss_grad(params, batch)
            for k in params:
                params[k] -= cfg.momentum * velocity[k]
                velocity[k] = cfg.momentum * velocity[k] - lr * grads[k]
                params[k] += velocity[k]
        hist.train_loss.append(loss_grad(params, train_idx)[0])
        current = loss_grad(params, monitor)[0]
        hist.val_loss.append(current)
        hist.learning_rates.append(lr)
        if not np.isfinite(current):
            logger.warning("loss diverged at epoch %d; keeping best parameters", epoch)
            break
        if current < best - cfg.min_delta * max(1.0, abs(best)):
            best = current
            best_params = {k: v.copy() for k, v in params.items()}
            hist.best_epoch = epoch
            since_best = since_decay = 0
        else:
            since_best += 1
            since_decay += 1
            if since_decay >= cfg.plateau_patience:
                lr *= cfg.lr_decay
                since_decay = 0
            if since_best >= cfg.patience:
                hist.stopped_early = True
                logger.info("early stop at epoch %d (best %d)", epoch, hist.best_epoch)
                break
    for k in params:
        params[k][...] = best_params[k]
    return hist

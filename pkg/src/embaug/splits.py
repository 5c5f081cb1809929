"""Stratified train/test splits, stratified k-fold, and binary P/R/F1."""

from __future__ import annotations

import logging
import math
import warnings

import numpy as np

logger = logging.getLogger(__name__)

__all__ = ["stratified_split", "stratified_kfold", "prf1", "run_seed"]


def run_seed(master_seed: int, run: int) -> int:
    """Seed for repetition ``run``; independent of how many runs there are."""
    return int(np.random.SeedSequence(master_seed, spawn_key=(run,)).generate_state(1)[0])


def _largest_remainder(class_sizes: list[int], frac: float) -> list[int]:
    quotas = [n * frac for n in class_sizes]
    alloc = [math.floor(q) for q in quotas]
    target = math.floor(sum(class_sizes) * frac + 0.5)
    # hand out the remaining units by descending remainder (ties: lower class first)
    order = sorted(range(len(quotas)), key=lambda c: (-(quotas[c] - alloc[c]), c))
    for c in order[: max(0, target - sum(alloc))]:
        alloc[c] += 1
    return alloc


def stratified_split(labels, train_frac: float = 0.7, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Return sorted (train, test) index arrays preserving class proportions.

    Per-class train counts are ``floor(n_c * train_frac)`` plus
    largest-remainder top-up so the train total is ``round(n * train_frac)``.
    """
    labels = np.asarray(labels)
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must be in (0, 1)")
    classes = np.unique(labels)
    members = [np.flatnonzero(labels == c) for c in classes]
    for c, m in zip(classes, members):
        if m.size < 2:
            raise ValueError(f"class {c!r} has {m.size} sample(s); need at least 2")
    alloc = _largest_remainder([m.size for m in members], train_frac)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for m, k in zip(members, alloc):
        perm = rng.permutation(m)
        train.append(perm[:k])
        test.append(perm[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def stratified_kfold(labels, k: int = 10, seed: int = 0) -> list[np.ndarray]:
    """Split positions ``0..n-1`` into ``k`` stratified, disjoint folds.

    Each class is shuffled and dealt round-robin, continuing the deal across
    classes, so fold sizes differ by at most one and every fold's class
    count is within one of its share. ``k`` shrinks (with a warning) when a
    class has fewer than ``k`` members.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    classes, sizes = np.unique(labels, return_counts=True)
    if sizes.min() < 2:
        raise ValueError("every class needs at least 2 samples for cross-validation")
    if sizes.min() < k:
        warnings.warn(f"reducing folds from {k} to {sizes.min()}: smallest class too small", stacklevel=2)
        k = int(sizes.min())
    rng = np.random.default_rng(seed)
    deal = np.concatenate([rng.permutation(np.flatnonzero(labels == c)) for c in classes])
    fold_of = np.empty(labels.size, dtype=np.int64)
    fold_of[deal] = np.arange(deal.size) % k
    return [np.flatnonzero(fold_of == f) for f in range(k)]


def prf1(y_true, y_pred, positive: int = 1) -> tuple[float, float, float]:
    """Precision, recall, F1 for the positive class; 0 where undefined."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError("length mismatch")
    if y_true.size == 0:
        raise ValueError("empty label vectors")
    tp = int(np.sum((y_pred == positive) & (y_true == positive)))
    fp = int(np.sum((y_pred == positive) & (y_true != positive)))
    fn = int(np.sum((y_pred != positive) & (y_true == positive)))
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f

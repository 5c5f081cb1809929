"""Binary classifiers and grid-search cross-validation.

* multinomial naive Bayes with Laplace smoothing
* L2-regularized logistic regression, ``1/2 |w|^2 + C sum log(1 + exp(-y f(x)))``
* linear and RBF-kernel SVMs, ``1/2 |w|^2 + C sum max(0, 1 - y f(x))``, solved in
  the dual by SMO with maximal-violating-pair working-set selection

Labels are 0/1 on the outside; the margin models use -1/+1 internally. The
intercept is never regularized.
"""

from __future__ import annotations

import itertools
import logging
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from embaug.splits import prf1, stratified_kfold

logger = logging.getLogger(__name__)

__all__ = [
    "NbModel",
    "LinearModel",
    "KernelSvmModel",
    "ParamGrid",
    "DEFAULT_GRID",
    "train_multinomial_nb",
    "train_logreg",
    "train_linear_svm",
    "train_rbf_svm",
    "predict",
    "train_model",
    "grid_search_cv",
    "GridSearchResult",
    "FAMILIES",
    "logreg_objective",
    "hinge_objective",
    "save_model",
    "load_model",
]

FAMILIES = ("nb", "lr", "lsvm", "rsvm")
CHECKPOINT_VERSION = 1


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with one row per label")
    if not np.isfinite(X).all():
        raise ValueError("non-finite feature value")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    if np.unique(y).size < 2:
        raise ValueError("both classes must be present")
    return X, y


def _check_features(model, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise ValueError(f"model expects {model.n_features} features, got {X.shape[1]}")
    return X


# ---------------------------------------------------------------- naive Bayes


@dataclass
class NbModel:
    class_log_prior: np.ndarray  # (2,)
    feature_log_prob: np.ndarray  # (2, f)
    alpha: float = 1.0

    family = "nb"

    @property
    def n_features(self) -> int:
        return self.feature_log_prob.shape[1]

    def decision_function(self, X) -> np.ndarray:
        """Log posterior odds of class 1 over class 0."""
        X = _check_features(self, X)
        jll = X @ self.feature_log_prob.T + self.class_log_prior
        return jll[:, 1] - jll[:, 0]

    def predict_proba(self, X) -> np.ndarray:
        s = self.decision_function(X)
        return 0.5 * (1.0 + np.tanh(0.5 * s))


def train_multinomial_nb(X, y, alpha: float = 1.0) -> NbModel:
    X, y = _check_xy(X, y)
    if (X < 0).any():
        raise ValueError("multinomial NB needs non-negative features")
    counts = np.stack([X[y == c].sum(axis=0) for c in (0, 1)]) + alpha
    feature_log_prob = np.log(counts) - np.log(counts.sum(axis=1, keepdims=True))
    prior = np.log(np.array([np.sum(y == 0), np.sum(y == 1)], dtype=np.float64) / y.size)
    return NbModel(prior, feature_log_prob, alpha)


# ------------------------------------------------------------- linear models


@dataclass
class LinearModel:
    w: np.ndarray
    b: float
    objective: str  # "logreg" or "hinge"
    C: float = 1.0

    @property
    def family(self) -> str:
        return "lr" if self.objective == "logreg" else "lsvm"

    @property
    def n_features(self) -> int:
        return self.w.size

    def decision_function(self, X) -> np.ndarray:
        return _check_features(self, X) @ self.w + self.b


def _signed(y):
    return np.where(np.asarray(y) == 1, 1.0, -1.0)


def logreg_objective(w, b, X, y, C) -> float:
    z = _signed(y) * (np.asarray(X, dtype=np.float64) @ w + b)
    return 0.5 * float(w @ w) + C * float(np.logaddexp(0.0, -z).sum())


def hinge_objective(w, b, X, y, C) -> float:
    z = _signed(y) * (np.asarray(X, dtype=np.float64) @ w + b)
    return 0.5 * float(w @ w) + C * float(np.maximum(0.0, 1.0 - z).sum())


def train_logreg(X, y, C: float = 1.0, tol: float = 1e-6, max_iter: int = 10_000) -> LinearModel:
    X, y = _check_xy(X, y)
    ys = _signed(y)
    f = X.shape[1]

    def fun(theta):
        w, b = theta[:f], theta[f]
        z = ys * (X @ w + b)
        loss = 0.5 * w @ w + C * np.logaddexp(0.0, -z).sum()
        # d/dz log(1+e^-z) = -sigmoid(-z)
        g = -C * ys * (0.5 * (1.0 - np.tanh(0.5 * z)))
        return loss, np.concatenate([w + X.T @ g, [g.sum()]])

    res = minimize(fun, np.zeros(f + 1), jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iter, "gtol": tol, "ftol": 0.0, "maxcor": 20})
    gnorm = np.linalg.norm(fun(res.x)[1])
    if gnorm > tol:
        logger.debug("logreg stopped with gradient norm %.3g (%s)", gnorm, res.message)
    return LinearModel(res.x[:f].copy(), float(res.x[f]), "logreg", C)


# ---------------------------------------------------------------------- SMO


class _KernelRows:
    """On-demand kernel rows with an LRU cache bounded in bytes."""

    def __init__(self, X, kernel: str, gamma: float, cache_bytes: int):
        self.X = X
        self.kernel = kernel
        self.gamma = gamma
        self.sq = (X * X).sum(axis=1)
        n = X.shape[0]
        self.full = None
        if n * n * 8 <= cache_bytes:
            self.full = self._rows(np.arange(n))
        self.cache: OrderedDict[int, np.ndarray] = OrderedDict()
        self.capacity = max(2, cache_bytes // max(1, n * 8))

    def _rows(self, idx):
        G = self.X[idx] @ self.X.T
        if self.kernel == "linear":
            return G
        D = np.maximum(self.sq[idx, None] + self.sq[None, :] - 2.0 * G, 0.0)
        return np.exp(-self.gamma * D)

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        r = self.cache.get(i)
        if r is None:
            r = self._rows(np.array([i]))[0]
            self.cache[i] = r
            if len(self.cache) > self.capacity:
                self.cache.popitem(last=False)
        else:
            self.cache.move_to_end(i)
        return r

    def diag(self) -> np.ndarray:
        if self.kernel == "linear":
            return self.sq.copy()
        return np.ones(self.X.shape[0])


def _smo(K: _KernelRows, ys: np.ndarray, C: float, tol: float, max_iter: int):
    """Solve ``min 1/2 a'Qa - e'a`` s.t. ``0 <= a <= C``, ``y'a = 0``.

    Returns (alpha, rho, violation, iterations); the decision function is
    ``sum_i alpha_i y_i K(x_i, x) - rho``.
    """
    n = ys.size
    alpha = np.zeros(n)
    G = -np.ones(n)  # gradient Q a - e
    Kd = K.diag()
    eps = 1e-12
    it = 0
    violation = np.inf
    while it < max_iter:
        up = ((ys > 0) & (alpha < C)) | ((ys < 0) & (alpha > 0))
        low = ((ys > 0) & (alpha > 0)) | ((ys < 0) & (alpha < C))
        score = -ys * G
        i = int(np.argmax(np.where(up, score, -np.inf)))
        j = int(np.argmin(np.where(low, score, np.inf)))
        violation = score[i] - score[j]
        if violation <= tol:
            break
        Ki, Kj = K.row(i), K.row(j)
        yi, yj = ys[i], ys[j]
        ai_old, aj_old = alpha[i], alpha[j]
        quad = max(Kd[i] + Kd[j] - 2.0 * Ki[j], eps)
        if yi != yj:
            delta = (-G[i] - G[j]) / quad
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            delta = (G[i] - G[j]) / quad
            s = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if s > C:
                if ai > C:
                    ai, aj = C, s - C
            elif aj < 0:
                aj, ai = 0.0, s
            if s > C:
                if aj > C:
                    aj, ai = C, s - C
            elif ai < 0:
                ai, aj = 0.0, s
        dai, daj = ai - ai_old, aj - aj_old
        alpha[i], alpha[j] = ai, aj
        G += ys * (yi * dai * Ki + yj * daj * Kj)
        it += 1
    if it >= max_iter:
        logger.warning("SMO hit max_iter=%d with violation %.3g", max_iter, violation)

    yG = ys * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(yG[free].mean())
    else:
        ub, lb = np.inf, -np.inf
        for t in range(n):
            at_low = alpha[t] <= 0
            if (ys[t] > 0 and at_low) or (ys[t] < 0 and not at_low):
                ub = min(ub, yG[t])
            else:
                lb = max(lb, yG[t])
        rho = float((ub + lb) / 2)
    return alpha, rho, float(max(violation, 0.0)), it


@dataclass
class KernelSvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i for the support vectors
    bias: float
    gamma: float
    C: float
    kkt_violation: float = 0.0
    alpha: np.ndarray = field(default=None, repr=False)  # full dual vector (training order)

    family = "rsvm"

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    def decision_function(self, X) -> np.ndarray:
        X = _check_features(self, X)
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        sv = self.support_vectors
        D = (X * X).sum(1)[:, None] + (sv * sv).sum(1)[None, :] - 2.0 * X @ sv.T
        return np.exp(-self.gamma * np.maximum(D, 0.0)) @ self.dual_coef + self.bias


def train_rbf_svm(X, y, C: float = 1.0, gamma: float = 1.0, tol: float = 1e-3,
                  max_iter: int = 1_000_000, cache_mb: float = 64) -> KernelSvmModel:
    X, y = _check_xy(X, y)
    if gamma <= 0 or C <= 0:
        raise ValueError("C and gamma must be positive")
    ys = _signed(y)
    K = _KernelRows(X, "rbf", gamma, int(cache_mb * 2**20))
    alpha, rho, viol, _ = _smo(K, ys, C, tol, max_iter)
    sv = alpha > 0
    return KernelSvmModel(X[sv].copy(), (alpha * ys)[sv], -rho, gamma, C, viol, alpha)


def train_linear_svm(X, y, C: float = 1.0, tol: float = 1e-3, max_iter: int = 1_000_000,
                     cache_mb: float = 64) -> LinearModel:
    X, y = _check_xy(X, y)
    if C <= 0:
        raise ValueError("C must be positive")
    ys = _signed(y)
    K = _KernelRows(X, "linear", 0.0, int(cache_mb * 2**20))
    alpha, rho, _, _ = _smo(K, ys, C, tol, max_iter)
    w = X.T @ (alpha * ys)
    return LinearModel(w, -rho, "hinge", C)


# ----------------------------------------------------------------- dispatch


def predict(model, X) -> tuple[np.ndarray, np.ndarray]:
    """Labels and decision scores; label is 1 iff score > 0 (ties go to 0)."""
    scores = model.decision_function(X)
    return (scores > 0).astype(np.int64), scores


def train_model(family: str, X, y, params: dict | None = None):
    params = dict(params or {})
    if family == "nb":
        return train_multinomial_nb(X, y, **params)
    if family == "lr":
        return train_logreg(X, y, **params)
    if family == "lsvm":
        return train_linear_svm(X, y, **params)
    if family == "rsvm":
        return train_rbf_svm(X, y, **params)
    raise ValueError(f"unknown model family {family!r}; choose from {FAMILIES}")


@dataclass(frozen=True)
class ParamGrid:
    C: tuple[float, ...] = tuple(2.0**e for e in range(-9, 6, 2))
    gamma: tuple[float, ...] = tuple(2.0**e for e in (-11, -9, -7, -5, -3, -1, 1, 2))

    def __post_init__(self):
        if any(v <= 0 for v in self.C + self.gamma):
            raise ValueError("grid values must be positive")

    def cells(self, family: str) -> list[dict]:
        if family == "nb":
            return [{}]
        if family in ("lr", "lsvm"):
            return [{"C": c} for c in sorted(self.C)]
        if family == "rsvm":
            return [{"C": c, "gamma": g} for c, g in itertools.product(sorted(self.C), sorted(self.gamma))]
        raise ValueError(f"unknown model family {family!r}")


DEFAULT_GRID = ParamGrid()


@dataclass
class GridSearchResult:
    best_params: dict
    best_score: float
    cell_scores: list[tuple[dict, float]]
    fold_predictions: dict  # cell index -> list of (val idx, y_true, y_pred)
    folds: list[np.ndarray]
    model: object


def _eval_cell(args):
    family, X, y, folds, params = args
    preds, scores = [], []
    for f, val in enumerate(folds):
        train = np.concatenate([folds[g] for g in range(len(folds)) if g != f])
        model = train_model(family, X[train], y[train], params)
        yp = predict(model, X[val])[0]
        preds.append((val, y[val], yp))
        scores.append(prf1(y[val], yp)[2])
    return float(np.mean(scores)), preds


def grid_search_cv(X, y, family: str, grid: ParamGrid = DEFAULT_GRID, folds: int = 10, seed: int = 0,
                   workers: int = 1) -> GridSearchResult:
    """Exhaustive grid search by mean F1 over stratified folds, then refit on all rows.

    Ties prefer smaller ``C``, then smaller ``gamma``. Families without
    hyperparameters skip cross-validation.
    """
    X, y = _check_xy(X, y)
    cells = grid.cells(family)
    if len(cells) == 1 and not cells[0]:
        return GridSearchResult({}, float("nan"), [({}, float("nan"))], {}, [], train_model(family, X, y))
    if y.size < folds:
        raise ValueError(f"{y.size} samples cannot fill {folds} folds")
    fold_idx = stratified_kfold(y, folds, seed)
    jobs = [(family, X, y, fold_idx, p) for p in cells]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_eval_cell, jobs))
    else:
        results = [_eval_cell(j) for j in jobs]
    # cells are ordered by (C, gamma) ascending, so the first maximum wins ties
    best_i = max(range(len(cells)), key=lambda i: (results[i][0], -i))
    best = cells[best_i]
    model = train_model(family, X, y, best)
    return GridSearchResult(
        best, results[best_i][0], [(c, r[0]) for c, r in zip(cells, results)],
        {i: r[1] for i, r in enumerate(results)}, fold_idx, model,
    )


# -------------------------------------------------------------- checkpoints


def save_model(model, path) -> None:
    payload = {"format_version": np.int64(CHECKPOINT_VERSION), "family": np.array(model.family)}
    if isinstance(model, NbModel):
        payload.update(class_log_prior=model.class_log_prior, feature_log_prob=model.feature_log_prob,
                       alpha=np.float64(model.alpha))
    elif isinstance(model, LinearModel):
        payload.update(w=model.w, b=np.float64(model.b), objective=np.array(model.objective),
                       C=np.float64(model.C))
    else:
        payload.update(support_vectors=model.support_vectors, dual_coef=model.dual_coef,
                       bias=np.float64(model.bias), gamma=np.float64(model.gamma), C=np.float64(model.C),
                       kkt_violation=np.float64(model.kkt_violation))
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_model(path):
    with np.load(path, allow_pickle=False) as z:
        if int(z["format_version"]) != CHECKPOINT_VERSION:
            raise ValueError("unsupported classifier checkpoint version")
        family = str(z["family"])
        if family == "nb":
            return NbModel(z["class_log_prior"], z["feature_log_prob"], float(z["alpha"]))
        if family in ("lr", "lsvm"):
            return LinearModel(z["w"], float(z["b"]), str(z["objective"]), float(z["C"]))
        if family == "rsvm":
            return KernelSvmModel(z["support_vectors"], z["dual_coef"], float(z["bias"]), float(z["gamma"]),
                                  float(z["C"]), float(z["kkt_violation"]))
    raise ValueError(f"unknown model family {family!r}")

"""Repeated train/test experiments, report aggregation, and the OOV ablation suite."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from embaug import features as F
from embaug.aaeme import AaemeConfig, build_meta_embedding, train_aaeme
from embaug.classifiers import FAMILIES, DEFAULT_GRID, ParamGrid, grid_search_cv, predict
from embaug.embedding import Embedding
from embaug.mapper import (
    CentroidConfig,
    MapperTrainConfig,
    build_ate,
    build_partial_adjusted,
    train_centroid_mapper,
    train_mapper,
)
from embaug.splits import prf1, run_seed, stratified_kfold, stratified_split
from embaug.text import bow_tokens, tokenize_tweet

logger = logging.getLogger(__name__)

__all__ = [
    "FeatureSpec",
    "ExperimentSpec",
    "RunRecord",
    "EvalReport",
    "stratified_split",
    "stratified_kfold",
    "prf1",
    "run_experiment",
    "repeat_experiments",
    "ablation_suite",
    "ABLATION_SPACES",
    "comparison_table",
]

FEATURE_KINDS = ("bow", "category", "emotion", "embedding")


@dataclass(frozen=True)
class FeatureSpec:
    kind: str
    embedding: Embedding | None = None
    category_lexicon: F.CategoryLexicon | None = None
    emotion_lexicon: F.EmotionLexicon | None = None
    bow_size: int = 400

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}; choose from {FEATURE_KINDS}")
        needed = {"embedding": self.embedding, "category": self.category_lexicon,
                  "emotion": self.emotion_lexicon}
        if self.kind in needed and needed[self.kind] is None:
            raise ValueError(f"{self.kind} features need their resource loaded")

    @property
    def nonnegative(self) -> bool:
        return self.kind != "embedding"


@dataclass(frozen=True)
class ExperimentSpec:
    dataset: F.LabeledDataset
    features: FeatureSpec
    model: str = "lsvm"
    grid: ParamGrid = DEFAULT_GRID
    runs: int = 30
    seed: int = 0
    folds: int = 10
    train_frac: float = 0.7
    scale: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.model not in FAMILIES:
            raise ValueError(f"unknown model {self.model!r}")
        if self.model == "nb" and not self.scale and not self.features.nonnegative:
            raise ValueError("naive Bayes on unscaled embedding features is invalid; enable scaling")


@dataclass
class RunRecord:
    run: int
    seed: int
    precision: float
    recall: float
    f1: float
    params: dict
    cv_f1: float | None
    n_train: int
    n_test: int
    all_oov_test: int = 0


def _tokens(texts: Sequence[str], kind: str) -> list[list[str]]:
    if kind == "bow":
        return [bow_tokens(t) for t in texts]
    return [tokenize_tweet(t) for t in texts]


class _Featurizer:
    """Fitted on the training split only."""

    def __init__(self, spec: FeatureSpec):
        self.spec = spec
        self.bow: F.BowVocab | None = None

    def fit(self, docs):
        if self.spec.kind == "bow":
            self.bow = F.fit_bow(docs, self.spec.bow_size)
        return self

    def transform(self, docs) -> tuple[np.ndarray, int]:
        s = self.spec
        if s.kind == "bow":
            return F.bow_matrix(docs, self.bow), 0
        if s.kind == "category":
            return np.array([F.category_percentages(d, s.category_lexicon) for d in docs]), 0
        if s.kind == "emotion":
            return np.array([F.emotion_scores(d, s.emotion_lexicon) for d in docs]).reshape(len(docs), -1), 0
        X, oov = F.average_embeddings(docs, s.embedding)
        return X, int(oov.sum())


def run_experiment(spec: ExperimentSpec, seed: int, run: int = 0, docs=None) -> RunRecord:
    """One split: fit features on train, grid-search on train, score on test."""
    ds = spec.dataset
    if docs is None:
        docs = _tokens(ds.texts, spec.features.kind)
    train, test = stratified_split(ds.labels, spec.train_frac, seed)
    cv_seed = run_seed(seed, 1)
    feat = _Featurizer(spec.features).fit([docs[i] for i in train])
    Xtr, _ = feat.transform([docs[i] for i in train])
    Xte, oov = feat.transform([docs[i] for i in test])
    if spec.scale:
        scaler = F.fit_minmax(Xtr)
        Xtr, Xte = scaler.transform(Xtr), scaler.transform(Xte)
    ytr, yte = ds.labels[train], ds.labels[test]
    gs = grid_search_cv(Xtr, ytr, spec.model, spec.grid, spec.folds, cv_seed, workers=spec.workers)
    p, r, f = prf1(yte, predict(gs.model, Xte)[0])
    cv = None if math.isnan(gs.best_score) else gs.best_score
    return RunRecord(run, seed, p, r, f, gs.best_params, cv, int(train.size), int(test.size), oov)


def _run_job(args):
    spec, i, docs = args
    return run_experiment(spec, run_seed(spec.seed, i), i, docs)


@dataclass
class EvalReport:
    name: str
    runs: list[RunRecord]

    def _agg(self, key: str) -> tuple[float, float]:
        vals = np.array([getattr(r, key) for r in self.runs], dtype=np.float64)
        std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        return float(vals.mean()), std

    @property
    def std_defined(self) -> bool:
        return len(self.runs) > 1

    @property
    def aggregates(self) -> dict[str, dict[str, float]]:
        return {k: dict(zip(("mean", "std"), self._agg(k))) for k in ("precision", "recall", "f1")}

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_runs": len(self.runs),
            "std_defined": self.std_defined,
            "aggregates": self.aggregates,
            "runs": [asdict(r) for r in self.runs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_table(self) -> str:
        return comparison_table([self])


def comparison_table(reports: Sequence[EvalReport]) -> str:
    """Aligned text table: one row per report, mean and std of P/R/F1."""
    head = ["Model-Feat.", "Precision", "Recall", "F1"]
    rows = []
    for rep in reports:
        a = rep.aggregates
        cells = [rep.name]
        for k in ("precision", "recall", "f1"):
            cells.append(f"{a[k]['mean']:.4f} ± {a[k]['std']:.4f}" + ("" if rep.std_defined else "*"))
        rows.append(cells)
    widths = [max(len(r[c]) for r in [head] + rows) for c in range(len(head))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(head, widths)), "  ".join("-" * w for w in widths)]
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
    if any(not r.std_defined for r in reports):
        lines.append("* single run: std reported as 0")
    return "\n".join(lines) + "\n"


def repeat_experiments(spec: ExperimentSpec, name: str | None = None) -> EvalReport:
    """``spec.runs`` independent splits with seeds derived from ``spec.seed``.

    With ``spec.workers > 1`` the runs execute in worker processes; records
    are collected in run order, so the report does not depend on scheduling.
    """
    docs = _tokens(spec.dataset.texts, spec.features.kind)
    if spec.workers > 1 and spec.runs > 1:
        inner = replace(spec, workers=1)
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            records = list(pool.map(_run_job, [(inner, i, docs) for i in range(spec.runs)]))
    else:
        records = [_run_job((spec, i, docs)) for i in range(spec.runs)]
    label = name or f"{spec.model.upper()}-{spec.features.kind}"
    rep = EvalReport(label, records)
    a = rep.aggregates["f1"]
    logger.info("%s: F1 %.4f ± %.4f over %d runs", label, a["mean"], a["std"], len(records))
    return rep


ABLATION_SPACES = (
    "TE", "DE", "ATE", "TE∩DE-in-TE-adjusted",
    "ATE-Centroid-1", "ATE-Centroid-2", "ATE-AAEME", "ATE-AAEME-OOV",
)


@dataclass
class AblationResult:
    reports: dict[str, EvalReport]
    embeddings: dict[str, Embedding] = field(repr=False)

    def table(self) -> str:
        return comparison_table(list(self.reports.values()))


def ablation_suite(spec: ExperimentSpec, te: Embedding, de: Embedding,
                   mapper_cfg: MapperTrainConfig = MapperTrainConfig(),
                   centroid_cfg: CentroidConfig = CentroidConfig(),
                   aaeme_cfg: AaemeConfig = AaemeConfig(),
                   spaces: Sequence[str] = ABLATION_SPACES) -> AblationResult:
    """Evaluate each embedding-derived feature space under the same seeds and splits.

    ATE and the partial adjustment share one trained mapper.
    """
    unknown = set(spaces) - set(ABLATION_SPACES)
    if unknown:
        raise ValueError(f"unknown feature spaces {sorted(unknown)}")
    embs: dict[str, Embedding] = {"TE": te, "DE": de}
    need_map = {"ATE", "TE∩DE-in-TE-adjusted", "ATE-AAEME-OOV"} & set(spaces)
    if need_map:
        mapper = train_mapper(te, de, mapper_cfg)
        embs["ATE"] = build_ate(te, mapper)
        if "TE∩DE-in-TE-adjusted" in spaces:
            embs["TE∩DE-in-TE-adjusted"] = build_partial_adjusted(te, de, mapper)
    for variant in (1, 2):
        name = f"ATE-Centroid-{variant}"
        if name in spaces:
            cm = train_centroid_mapper(te, de, mapper_cfg, replace(centroid_cfg, variant=variant))
            embs[name] = build_ate(te, cm)
    if "ATE-AAEME" in spaces:
        embs["ATE-AAEME"] = build_meta_embedding(train_aaeme(te, de, aaeme_cfg), te, de)
    if "ATE-AAEME-OOV" in spaces:
        ate = embs["ATE"]
        embs["ATE-AAEME-OOV"] = build_meta_embedding(train_aaeme(te, ate, aaeme_cfg), te, ate)
    reports = {}
    for name in spaces:
        s = replace(spec, features=replace(spec.features, kind="embedding", embedding=embs[name]))
        reports[name] = repeat_experiments(s, name=f"{spec.model.upper()}-{name}")
    return AblationResult(reports, {k: embs[k] for k in spaces})

"""Search over clusterer/classifier pairs and their hyperparameters, ranked by stability."""

from __future__ import annotations

import csv
import functools
import io
import itertools
import json
from dataclasses import dataclass, field, replace

from .classification import ClassifierConfig
from .clustering import ClustererConfig
from .data import CvGrid, Dataset
from .selection import (TIE_TOL, EvaluationReport, best_nclust_cv, evaluate, evaluate_auto)

# cheaper algorithms first when stabilities tie
CLUSTERER_RANK = {"dbscan": 0, "kmeans": 1, "ward": 2}
CLASSIFIER_RANK = {"logreg": 0, "knn": 0, "random": 1}

TABLE_COLUMNS = ["dataset", "classes", "clusters", "model", "preprocessing",
                 "validation stability", "test ACC", "AMI", "ACC", "MCC"]


@dataclass
class PairSpec:
    clusterer: ClustererConfig
    classifier: ClassifierConfig
    grid: dict[str, list] = field(default_factory=dict)


@dataclass
class SearchSpace:
    pairs: list[PairSpec]
    cv: CvGrid
    true_k: int | None = None

    def __post_init__(self):
        if not self.pairs:
            raise ValueError("search space has no clusterer/classifier pairs")


@dataclass
class SearchEntry:
    clusterer: ClustererConfig
    classifier: ClassifierConfig
    k_star: int | None = None
    mean_norm: float | None = None
    sd: float | None = None
    evaluation: EvaluationReport | None = None
    error: str | None = None

    @property
    def name(self) -> str:
        return f"{self.classifier.kind}/{self.clusterer.kind}"

    def config_key(self) -> str:
        return json.dumps({"clusterer": self.clusterer.to_dict(),
                           "classifier": self.classifier.to_dict()}, sort_keys=True)

    def to_dict(self) -> dict:
        return {"model": self.name, "clusterer": self.clusterer.to_dict(),
                "classifier": self.classifier.to_dict(), "k_star": self.k_star,
                "mean_norm": self.mean_norm, "sd": self.sd,
                "evaluation": None if self.evaluation is None else self.evaluation.to_dict(),
                "error": self.error}


@dataclass
class SearchOutcome:
    ranked: list[SearchEntry]
    best: int | None
    best_matching_true_k: int | None = None

    def to_dict(self) -> dict:
        return {"tie_rule": "stability, then clusterer cost (dbscan<kmeans<ward), then "
                            "classifier cost (knn=logreg<random), then config text",
                "best": self.best, "best_matching_true_k": self.best_matching_true_k,
                "ranked": [e.to_dict() for e in self.ranked]}


def _dedup(values: list) -> list:
    out = []
    for v in values:
        if v not in out:
            out.append(v)
    return out


def expand_grid(space: SearchSpace | PairSpec) -> list[tuple[ClustererConfig, ClassifierConfig]]:
    """Cartesian product of every pair's hyperparameter lists.

    Parameter names are ``clusterer.<field>`` or ``classifier.<field>``.
    Parameters vary in sorted-name order (last name fastest); repeated
    values are dropped, keeping first occurrences.
    """
    pairs = [space] if isinstance(space, PairSpec) else space.pairs
    out = []
    for pair in pairs:
        names = sorted(pair.grid)
        for name in names:
            if not pair.grid[name]:
                raise ValueError(f"empty value list for parameter {name!r}")
            if name.split(".", 1)[0] not in ("clusterer", "classifier") or "." not in name:
                raise ValueError(f"parameter {name!r} must be 'clusterer.<field>' or "
                                 "'classifier.<field>'")
        values = [_dedup(list(pair.grid[name])) for name in names]
        for combo in itertools.product(*values):
            cl, clf = {}, {}
            for name, v in zip(names, combo):
                side, field_name = name.split(".", 1)
                (cl if side == "clusterer" else clf)[field_name] = v
            try:
                out.append((replace(pair.clusterer, **cl), replace(pair.classifier, **clf)))
            except TypeError as exc:
                raise ValueError(f"unknown hyperparameter: {exc}") from None
    return out


def _compare(a: SearchEntry, b: SearchEntry) -> int:
    if (a.error is None) != (b.error is None):
        return -1 if a.error is None else 1
    if a.error is None and abs(a.mean_norm - b.mean_norm) > TIE_TOL:
        return -1 if a.mean_norm < b.mean_norm else 1
    ka = (CLUSTERER_RANK[a.clusterer.kind], CLASSIFIER_RANK[a.classifier.kind], a.config_key())
    kb = (CLUSTERER_RANK[b.clusterer.kind], CLASSIFIER_RANK[b.classifier.kind], b.config_key())
    return (ka > kb) - (ka < kb)


def search(train: Dataset, space: SearchSpace, stratifier=None, test: Dataset | None = None,
           workers: int | None = None) -> SearchOutcome:
    """Run the stability selection for every grid point and rank the results.

    Every point reuses the same cross-validation seed, so its stability equals
    a standalone run with that grid. Failing points are kept, with their
    error, at the end of the ranking. With ``test`` given, each successful
    point is also evaluated on held-out data.
    """
    entries = []
    for clusterer, classifier in expand_grid(space):
        entry = SearchEntry(clusterer, classifier)
        cv = space.cv
        if clusterer.auto_k and cv.k_values:
            cv = replace(cv, k_values=())
        try:
            res = best_nclust_cv(train, clusterer, classifier, cv, stratifier, workers)
            entry.k_star = res.k_star
            entry.mean_norm = res.per_k[res.k_star].mean_norm
            entry.sd = res.per_k[res.k_star].sd
            if test is not None:
                if clusterer.auto_k:
                    entry.evaluation = evaluate_auto(train, test, res, clusterer, classifier,
                                                     cv, stratifier)
                else:
                    entry.evaluation = evaluate(train, test, res.k_star, clusterer, classifier,
                                                seed=cv.base_seed)
        except Exception as exc:
            entry.error = f"{type(exc).__name__}: {exc}"
        entries.append(entry)

    ranked = sorted(entries, key=functools.cmp_to_key(_compare))
    ok = [i for i, e in enumerate(ranked) if e.error is None]
    best = ok[0] if ok else None
    match = None
    if space.true_k is not None:
        match = next((i for i in ok if ranked[i].k_star == space.true_k), None)
    return SearchOutcome(ranked, best, match)


def leaderboard_csv(outcome: SearchOutcome, dataset: str, classes: int | None,
                    preprocessing: str) -> str:
    """Table with one row per ranked entry, stability reported as ``mean (sd)``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS + ["best", "matches_true_k", "error"])

    def fmt(v):
        return "" if v is None else f"{v:.4f}"

    for i, e in enumerate(outcome.ranked):
        ev = e.evaluation
        stab = "" if e.mean_norm is None else f"{e.mean_norm:.4f} ({e.sd:.4f})"
        w.writerow([dataset, "" if classes is None else classes,
                    "" if e.k_star is None else e.k_star, e.name, preprocessing, stab,
                    fmt(ev and ev.acc), fmt(ev and ev.ami), fmt(ev and ev.acc_true),
                    fmt(ev and ev.mcc_true), int(i == outcome.best),
                    int(i == outcome.best_matching_true_k), e.error or ""])
    return buf.getvalue()

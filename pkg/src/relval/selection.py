"""Number-of-clusters selection by repeated cross-validation and held-out evaluation."""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import classification
from .assignment import Permutation, misclassification_distance, relabel
from .classification import ClassifierConfig
from .clustering import ClustererConfig, fit_clusterer
from .data import NOISE, CvGrid, Dataset, as_matrix, cv_folds, n_clusters
from .metrics import ami, mcc, precision_recall_f1
from .rng import TAG_CELL, TAG_EVAL, derive_seed
from .stability import CellError, StabilityCell, stability_cell

WORKERS_ENV = "RELVAL_WORKERS"
TIE_TOL = 1e-12
Z95 = 1.96


class SelectionError(RuntimeError):
    pass


def resolve_workers(workers: int | None = None) -> int:
    """Explicit argument, else the ``RELVAL_WORKERS`` environment variable, else 1."""
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers < 1:
        raise ValueError("worker count must be >= 1")
    return workers


@dataclass
class KSummary:
    mean_norm: float
    sd: float
    ci95: tuple[float, float]
    mean_train: float
    cells: list[StabilityCell] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"mean_norm": self.mean_norm, "sd": self.sd, "ci95": list(self.ci95),
                "mean_train": self.mean_train, "cells": [c.to_dict() for c in self.cells]}


@dataclass
class StabilityResult:
    per_k: dict[int, KSummary]
    k_star: int
    mode: str = "fixed-k"
    selected_cell: tuple[int, int] | None = None  # (fold, rep), auto-k only
    skipped: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "k_star": self.k_star,
                "selected_cell": None if self.selected_cell is None else list(self.selected_cell),
                "ci_method": "normal approximation: mean +/- 1.96*sd/sqrt(n_cells)",
                "per_k": {str(k): s.to_dict() for k, s in sorted(self.per_k.items())},
                "skipped": self.skipped}

    @classmethod
    def from_dict(cls, d: dict) -> "StabilityResult":
        per_k = {}
        for k, s in d["per_k"].items():
            per_k[int(k)] = KSummary(s["mean_norm"], s["sd"], tuple(s["ci95"]), s["mean_train"],
                                     [StabilityCell.from_dict(c) for c in s["cells"]])
        sel = d.get("selected_cell")
        return cls(per_k, int(d["k_star"]), d["mode"], None if sel is None else tuple(sel),
                   list(d.get("skipped", [])))


def _nested_mean(cells: list[StabilityCell], attr: str) -> float:
    """Average over folds within each repetition, then over repetitions."""
    by_rep: dict[int, list[float]] = {}
    for c in cells:
        by_rep.setdefault(c.rep, []).append(getattr(c, attr))
    return float(np.mean([np.mean(v) for _, v in sorted(by_rep.items())]))


def summarize(cells: list[StabilityCell]) -> KSummary:
    cells = sorted(cells, key=lambda c: (c.rep, c.fold))
    values = np.array([c.normalized for c in cells])
    mean = _nested_mean(cells, "normalized")
    sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
    half = Z95 * sd / math.sqrt(values.size)
    return KSummary(mean, sd, (mean - half, mean + half), _nested_mean(cells, "train_distance"),
                    cells)


def select_k(means: dict[int, float]) -> int:
    """Largest k whose mean is within ``TIE_TOL`` of the minimum."""
    if not means:
        raise SelectionError("no k values to select from")
    best = min(means.values())
    return max(k for k, v in means.items() if v - best <= TIE_TOL)


def _run_cell(task):
    k, fold, rep, x_tr, x_val, clusterer, classifier, n_rnd, seed = task
    try:
        return stability_cell(x_tr, x_val, clusterer, classifier, k, n_rnd, seed, fold, rep)
    except Exception as exc:  # reported with the cell coordinates by the caller
        return exc


def _tasks(x, clusterer, classifier, grid, stratifier, ks):
    for rep in range(grid.n_rep):
        for fold, (tr, val) in enumerate(cv_folds(len(x), grid, rep, stratifier)):
            for k in ks:
                seed = derive_seed(grid.base_seed, TAG_CELL, k or 0, fold, rep)
                yield (k, fold, rep, x[tr], x[val], clusterer, classifier, grid.n_rnd, seed)


def _execute(tasks: list, workers: int) -> list:
    if workers == 1 or len(tasks) == 1:
        return [_run_cell(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_cell, tasks, chunksize=chunk))


def best_nclust_cv(train, clusterer: ClustererConfig, classifier: ClassifierConfig,
                   grid: CvGrid, stratifier=None, workers: int | None = None) -> StabilityResult:
    """Evaluate every (k, fold, repetition) cell and return the most stable k.

    Cell seeds depend only on ``(base_seed, k, fold, rep)``, so the result is
    the same for any worker count.
    """
    if clusterer.auto_k:
        return best_nclust_cv_auto(train, clusterer, classifier, grid, stratifier, workers)
    if not grid.k_values:
        raise ValueError("fixed-k clusterers need a non-empty k_values list")
    x = as_matrix(train)
    grid.validate(len(x))
    tasks = list(_tasks(x, clusterer, classifier, grid, stratifier, grid.k_values))
    cells: dict[int, list[StabilityCell]] = {k: [] for k in grid.k_values}
    for task, out in zip(tasks, _execute(tasks, resolve_workers(workers))):
        if isinstance(out, Exception):
            k, fold, rep = task[:3]
            raise SelectionError(f"cell (k={k}, fold={fold}, rep={rep}) failed: {out}") from out
        cells[task[0]].append(out)
    per_k = {k: summarize(v) for k, v in cells.items()}
    return StabilityResult(per_k, select_k({k: s.mean_norm for k, s in per_k.items()}))


def best_nclust_cv_auto(train, clusterer: ClustererConfig, classifier: ClassifierConfig,
                        grid: CvGrid, stratifier=None,
                        workers: int | None = None) -> StabilityResult:
    """Auto-k variant: run each (fold, rep) once and group cells by the k found."""
    if not clusterer.auto_k:
        raise ValueError(f"{clusterer.kind} is not an auto-k clusterer")
    if grid.k_values:
        raise ValueError("auto-k selection takes an empty k_values list")
    x = as_matrix(train)
    grid.validate(len(x))
    tasks = list(_tasks(x, clusterer, classifier, grid, stratifier, [None]))
    groups: dict[int, list[StabilityCell]] = {}
    skipped = []
    for task, out in zip(tasks, _execute(tasks, resolve_workers(workers))):
        if isinstance(out, CellError):
            skipped.append({"fold": task[1], "rep": task[2], "reason": str(out)})
        elif isinstance(out, Exception):
            raise SelectionError(f"cell (fold={task[1]}, rep={task[2]}) failed: {out}") from out
        else:
            groups.setdefault(out.k, []).append(out)
    if not groups:
        raise SelectionError("k_found < 2 in all cells")
    per_k = {k: summarize(v) for k, v in sorted(groups.items())}
    k_star = select_k({k: s.mean_norm for k, s in per_k.items()})
    best = min(per_k[k_star].cells, key=lambda c: (c.normalized, c.rep, c.fold))
    return StabilityResult(per_k, k_star, "auto-k", (best.fold, best.rep), skipped)


# -- held-out evaluation -----------------------------------------------------


@dataclass
class EvaluationReport:
    acc: float
    mcc: float
    f1_macro: float
    precision_macro: float
    recall_macro: float
    permutation: Permutation
    k_train: int
    k_test: int
    ami: float | None = None
    acc_true: float | None = None
    mcc_true: float | None = None
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"acc": self.acc, "mcc": self.mcc, "f1_macro": self.f1_macro,
                "precision_macro": self.precision_macro, "recall_macro": self.recall_macro,
                "ami": self.ami, "acc_true": self.acc_true, "mcc_true": self.mcc_true,
                "permutation": self.permutation.to_list(), "k_train": self.k_train,
                "k_test": self.k_test, "flags": self.flags}

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        d = dict(d)
        d["permutation"] = Permutation(tuple(d["permutation"]))
        return cls(**d)


def score_predictions(predicted, clustered, true_labels=None, k_train: int = 0,
                      ) -> EvaluationReport:
    """Align test clustering labels to classifier predictions and score them.

    ``acc`` is the best agreement over relabelings of the clustering output.
    Noise samples in ``clustered`` are left out of the classification
    scores. ``ami``, ``acc_true`` and ``mcc_true`` compare against
    ``true_labels`` when given.
    """
    pred = np.asarray(predicted, dtype=np.int64)
    clus = np.asarray(clustered, dtype=np.int64)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        dist, perm = misclassification_distance(pred, clus)
        keep = clus != NOISE
        aligned = relabel(clus[keep], perm)
        p, r, f1 = precision_recall_f1(aligned, pred[keep])
        report = EvaluationReport(acc=1.0 - dist, mcc=mcc(aligned, pred[keep]), f1_macro=f1,
                                  precision_macro=p, recall_macro=r, permutation=perm,
                                  k_train=k_train, k_test=n_clusters(clus))
        if true_labels is not None:
            truth = np.asarray(true_labels, dtype=np.int64)
            report.ami = ami(truth, clus)
            d_true, perm_true = misclassification_distance(truth, pred)
            report.acc_true = 1.0 - d_true
            report.mcc_true = mcc(truth, relabel(pred, perm_true))
    report.flags = [str(w.message) for w in caught]
    return report


def evaluate(train: Dataset, test: Dataset, k_star: int, clusterer: ClustererConfig,
             classifier: ClassifierConfig, seed: int = 0) -> EvaluationReport:
    """Refit on the full training set at ``k_star``, then test on unseen data.

    The clusterer is run independently on the test set and its labels are
    aligned to the classifier's predictions.
    """
    if test.n_features != train.n_features:
        raise ValueError(f"feature-count mismatch: train has {train.n_features}, "
                         f"test has {test.n_features}")
    k = None if clusterer.auto_k else k_star
    _, y_tr = fit_clusterer(clusterer, train.values, k, seed=derive_seed(seed, TAG_EVAL, 0))
    k_train = n_clusters(y_tr)
    if k_train < 2:
        raise SelectionError(f"clustering the training set produced {k_train} cluster(s)")
    keep = y_tr != NOISE
    model = classification.fit(classifier, train.values[keep], y_tr[keep],
                               seed=derive_seed(seed, TAG_EVAL, 2))
    _, y_ts = fit_clusterer(clusterer, test.values, k, seed=derive_seed(seed, TAG_EVAL, 1))
    if n_clusters(y_ts) == 0:
        raise SelectionError("clustering the test set labeled every sample as noise")
    pred = classification.predict(model, test.values)
    return score_predictions(pred, y_ts, test.true_labels, k_train)


def evaluate_auto(train: Dataset, test: Dataset, result: StabilityResult,
                  clusterer: ClustererConfig, classifier: ClassifierConfig, grid: CvGrid,
                  stratifier=None) -> EvaluationReport:
    """Held-out evaluation for auto-k selection.

    Uses the classifier trained in the selected cross-validation cell
    (rebuilt deterministically from its seed) rather than a full-train refit.
    """
    if result.mode != "auto-k" or result.selected_cell is None:
        raise ValueError("evaluate_auto needs an auto-k StabilityResult")
    if test.n_features != train.n_features:
        raise ValueError(f"feature-count mismatch: train has {train.n_features}, "
                         f"test has {test.n_features}")
    fold, rep = result.selected_cell
    tr, val = cv_folds(train.n_samples, grid, rep, stratifier)[fold]
    seed = derive_seed(grid.base_seed, TAG_CELL, 0, fold, rep)
    cell, model = stability_cell(train.values[tr], train.values[val], clusterer, classifier,
                                 None, grid.n_rnd, seed, fold, rep, return_model=True)
    _, y_ts = fit_clusterer(clusterer, test.values)
    if n_clusters(y_ts) == 0:
        raise SelectionError("clustering the test set labeled every sample as noise")
    pred = classification.predict(model, test.values)
    return score_predictions(pred, y_ts, test.true_labels, cell.k)

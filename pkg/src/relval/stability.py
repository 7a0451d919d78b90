"""One train/validate stability cell, normalized by random labeling."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import classification
from .assignment import Permutation, misclassification_distance
from .classification import ClassifierConfig
from .clustering import ClustererConfig, fit_clusterer
from .data import NOISE, n_clusters
from .rng import derive_seed, generator

# sub-stream keys inside a cell
_TRAIN_CLUSTER, _VAL_CLUSTER, _RANDOM_LABELS, _CLASSIFIER = 0, 1, 2, 3


class CellError(RuntimeError):
    """A stability cell could not be computed."""


class StabilityWarning(UserWarning):
    pass


@dataclass
class StabilityCell:
    k: int
    fold: int
    rep: int
    raw_distance: float
    random_baseline: float
    normalized: float
    train_distance: float
    permutation: Permutation
    seed: int
    k_val: int = 0
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"k": self.k, "fold": self.fold, "rep": self.rep, "raw": self.raw_distance,
                "baseline": self.random_baseline, "norm": self.normalized,
                "train": self.train_distance, "k_val": self.k_val,
                "perm": self.permutation.to_list(), "seed": self.seed, "flags": self.flags}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "StabilityCell":
        return cls(k=d["k"], fold=d["fold"], rep=d["rep"], raw_distance=d["raw"],
                   random_baseline=d["baseline"], normalized=d["norm"],
                   train_distance=d["train"], permutation=Permutation(tuple(d["perm"])),
                   seed=d["seed"], k_val=d.get("k_val", 0), flags=list(d.get("flags", [])))


def random_labels(k: int, n: int, seed: int) -> np.ndarray:
    """Uniform i.i.d. labels over 0..k-1, redrawn until every label occurs."""
    if k < 2:
        raise ValueError("random labeling needs k >= 2")
    if n < k:
        raise ValueError(f"cannot cover {k} labels with {n} samples")
    rng = generator(seed)
    while True:
        y = rng.integers(k, size=n)
        if np.unique(y).size == k:
            return y


def _cluster(config, x, k, seed, side):
    model, labels = fit_clusterer(config, x, None if config.auto_k else k, seed=seed)
    found = n_clusters(labels)
    if found < 2:
        raise CellError(f"{side} clustering produced {found} cluster(s)")
    return labels, found


def stability_cell(inner_train, validation, clusterer: ClustererConfig,
                   classifier: ClassifierConfig, k: int | None = None, n_rnd: int = 10,
                   seed: int = 0, fold: int = 0, rep: int = 0,
                   return_model: bool = False):
    """Cluster inner-train, train the classifier on it, and score agreement on validation.

    For auto-k clusterers ``k`` is ignored and the cell's k is the number of
    clusters found on inner-train. Noise samples are dropped before training
    and excluded from the validation distance.
    """
    x_tr = getattr(inner_train, "values", inner_train)
    x_val = getattr(validation, "values", validation)
    if len(x_val) == 0:
        raise CellError("validation split is empty")
    if not clusterer.auto_k and k is None:
        raise CellError(f"{clusterer.kind} needs k")

    y_tr, k_tr = _cluster(clusterer, x_tr, k, derive_seed(seed, _TRAIN_CLUSTER), "inner-train")
    keep = y_tr != NOISE
    x_fit, y_fit = x_tr[keep], y_tr[keep]
    model = classification.fit(classifier, x_fit, y_fit, seed=derive_seed(seed, _CLASSIFIER, 0))

    y_val, k_val = _cluster(clusterer, x_val, k, derive_seed(seed, _VAL_CLUSTER), "validation")
    raw, perm = misclassification_distance(classification.predict(model, x_val), y_val)
    train_dist, _ = misclassification_distance(classification.predict(model, x_fit), y_fit)

    rnd = []
    for r in range(n_rnd):
        y_rnd = random_labels(k_tr, len(y_fit), derive_seed(seed, _RANDOM_LABELS, r))
        m_rnd = classification.fit(classifier, x_fit, y_rnd,
                                   seed=derive_seed(seed, _CLASSIFIER, r + 1))
        d, _ = misclassification_distance(classification.predict(m_rnd, x_val), y_val)
        rnd.append(d)
    baseline = float(np.mean(rnd))

    flags = []
    if baseline > 0:
        normalized = raw / baseline
    else:
        normalized = raw
        flags.append("zero random baseline; normalized = raw")
        warnings.warn(f"cell (k={k_tr}, fold={fold}, rep={rep}) has a zero random baseline",
                      StabilityWarning, stacklevel=2)
    cell = StabilityCell(k=k_tr, fold=fold, rep=rep, raw_distance=float(raw),
                         random_baseline=baseline, normalized=float(normalized),
                         train_distance=float(train_dist), permutation=perm, seed=int(seed),
                         k_val=k_val, flags=flags)
    if return_model:
        return cell, model
    return cell

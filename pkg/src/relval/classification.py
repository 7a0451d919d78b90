"""Classifiers trained on clustering labels: kNN and multinomial logistic regression.

A third kind, ``random``, ignores its inputs and predicts uniform random
labels over the classes seen at fit. It is the chance-level reference used
to check that normalized stability self-normalizes to 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .data import NOISE, as_matrix, check_labels
from .rng import generator

KINDS = ("knn", "logreg", "random")


@dataclass(frozen=True)
class ClassifierConfig:
    kind: str = "knn"
    n_neighbors: int = 15
    l2: float = 1e-3
    max_iter: int = 300
    tol: float = 1e-4
    step: float = 1.0
    shrink: float = 0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown classifier kind {self.kind!r}; expected one of {KINDS}")
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        if self.l2 < 0 or self.tol <= 0 or self.step <= 0 or not 0 < self.shrink < 1:
            raise ValueError("invalid logistic-regression optimizer settings")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def params(self) -> dict:
        if self.kind == "knn":
            return {"n_neighbors": self.n_neighbors}
        if self.kind == "logreg":
            return {"l2": self.l2, "max_iter": self.max_iter, "tol": self.tol,
                    "step": self.step, "shrink": self.shrink}
        return {}

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params()}


@dataclass(frozen=True)
class TrainedClassifier:
    kind: str
    class_ids: np.ndarray
    n_features: int
    x_train: np.ndarray | None = None
    y_train: np.ndarray | None = None  # indices into class_ids
    n_neighbors: int = 0
    weights: np.ndarray | None = None  # (k, n_features + 1), bias in last column
    seed: int = 0
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "class_ids": self.class_ids.tolist(),
             "n_features": self.n_features, "info": self.info}
        if self.kind == "knn":
            d.update(n_neighbors=self.n_neighbors, x_train=self.x_train.tolist(),
                     y_train=self.class_ids[self.y_train].tolist())
        elif self.kind == "logreg":
            d["weights"] = self.weights.tolist()
        else:
            d["seed"] = self.seed
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedClassifier":
        ids = np.asarray(d["class_ids"], dtype=np.int64)
        kw = dict(kind=d["kind"], class_ids=ids, n_features=int(d["n_features"]),
                  info=d.get("info", {}))
        if d["kind"] == "knn":
            y = np.asarray(d["y_train"], dtype=np.int64)
            kw.update(x_train=np.asarray(d["x_train"], dtype=float),
                      y_train=np.searchsorted(ids, y), n_neighbors=int(d["n_neighbors"]))
        elif d["kind"] == "logreg":
            kw["weights"] = np.asarray(d["weights"], dtype=float)
        else:
            kw["seed"] = int(d["seed"])
        return cls(**kw)


# -- logistic regression -----------------------------------------------------


def _design(x: np.ndarray) -> np.ndarray:
    return np.hstack([x, np.ones((x.shape[0], 1))])


def logreg_objective(w: np.ndarray, xb: np.ndarray, y: np.ndarray, l2: float):
    """Mean multinomial cross-entropy plus ``l2/2 * ||W||^2`` (bias unpenalized).

    Training evaluates this on standardized features, so the penalty applies
    to the weights in standardized units.

    Returns (value, gradient) with the gradient shaped like ``w``.
    """
    n = xb.shape[0]
    z = xb @ w.T
    lse = logsumexp(z, axis=1)
    value = float(np.mean(lse - z[np.arange(n), y])) + 0.5 * l2 * float(np.sum(w[:, :-1] ** 2))
    prob = np.exp(z - lse[:, None])
    prob[np.arange(n), y] -= 1.0
    grad = prob.T @ xb / n
    grad[:, :-1] += l2 * w[:, :-1]
    return value, grad


def _fit_logreg(x, y, k, config: ClassifierConfig):
    # optimize on standardized features, then fold the scaling back into w
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    sd[sd == 0] = 1.0
    xb = _design((x - mu) / sd)
    w = np.zeros((k, xb.shape[1]))
    value, grad = logreg_objective(w, xb, y, config.l2)
    step = config.step
    it = 0
    for it in range(1, config.max_iter + 1):
        gnorm2 = float(np.sum(grad ** 2))
        if np.sqrt(gnorm2) < config.tol:
            break
        # Armijo backtracking
        while True:
            cand = w - step * grad
            cand_value, cand_grad = logreg_objective(cand, xb, y, config.l2)
            if cand_value <= value - 0.5 * step * gnorm2 or step < 1e-12:
                break
            step *= config.shrink
        w, value, grad = cand, cand_value, cand_grad
        step = min(step / config.shrink, 1e3)
    raw = np.empty_like(w)
    raw[:, :-1] = w[:, :-1] / sd
    raw[:, -1] = w[:, -1] - raw[:, :-1] @ mu
    return raw, {"iterations": it, "objective": value,
               "grad_norm": float(np.sqrt(np.sum(grad ** 2)))}


# -- public API --------------------------------------------------------------


def fit(config: ClassifierConfig, data, labels, seed: int = 0) -> TrainedClassifier:
    """Train on (data, labels). Noise (-1) must already be removed by the caller."""
    x = as_matrix(data)
    y = check_labels(labels, x.shape[0])
    if y.size == 0:
        raise ValueError("cannot fit a classifier on zero samples")
    if np.any(y == NOISE):
        raise ValueError("noise labels must be removed before fitting")
    class_ids, y_idx = np.unique(y, return_inverse=True)
    k = class_ids.size
    base = dict(kind=config.kind, class_ids=class_ids, n_features=x.shape[1])
    if config.kind == "random":
        return TrainedClassifier(**base, seed=int(seed))
    if k == 1:
        # constant predictor; logreg weights are trivially zero
        if config.kind == "logreg":
            return TrainedClassifier(**base, weights=np.zeros((1, x.shape[1] + 1)),
                                     info={"constant": True})
    if config.kind == "knn":
        if config.n_neighbors > x.shape[0]:
            raise ValueError(f"n_neighbors={config.n_neighbors} exceeds {x.shape[0]} "
                             "training samples")
        return TrainedClassifier(**base, x_train=x.copy(), y_train=y_idx,
                                 n_neighbors=config.n_neighbors)
    w, info = _fit_logreg(x, y_idx, k, config)
    return TrainedClassifier(**base, weights=w, info=info)


def _knn_predict(model: TrainedClassifier, x: np.ndarray) -> np.ndarray:
    dist = cdist(x, model.x_train)
    cls = np.broadcast_to(model.y_train, dist.shape)
    # neighbors ordered by distance, then by class id
    order = np.lexsort((cls, dist), axis=-1)[:, :model.n_neighbors]
    near = np.take_along_axis(cls, order, axis=1)
    k = model.class_ids.size
    votes = np.zeros((x.shape[0], k), dtype=np.int64)
    np.add.at(votes, (np.repeat(np.arange(x.shape[0]), near.shape[1]), near.ravel()), 1)
    top = votes == votes.max(axis=1, keepdims=True)
    # among tied classes take the one whose member appears first in `near`
    tied_rank = np.where(top[np.arange(x.shape[0])[:, None], near], 0, 1)
    first = np.argmin(tied_rank, axis=1)
    return near[np.arange(x.shape[0]), first]


def predict(model: TrainedClassifier, data) -> np.ndarray:
    """One label per row, drawn from ``model.class_ids``."""
    x = as_matrix(data)
    if x.shape[1] != model.n_features:
        raise ValueError(f"feature-count mismatch: model has {model.n_features}, "
                         f"data has {x.shape[1]}")
    if model.kind == "random":
        idx = generator(model.seed).integers(model.class_ids.size, size=x.shape[0])
    elif model.class_ids.size == 1:
        idx = np.zeros(x.shape[0], dtype=np.int64)
    elif model.kind == "knn":
        idx = _knn_predict(model, x)
    else:
        idx = np.argmax(_design(x) @ model.weights.T, axis=1)
    return model.class_ids[idx]

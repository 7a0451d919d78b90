"""Clusterers behind one interface: k-means and Ward (fixed k), DBSCAN (auto k)."""

from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .data import NOISE, as_matrix
from .rng import generator

KINDS = ("kmeans", "ward", "dbscan")
FIXED_K = ("kmeans", "ward")


@dataclass(frozen=True)
class ClustererConfig:
    kind: str = "kmeans"
    n_init: int = 10
    max_iter: int = 300
    tol: float = 1e-4
    eps: float = 0.5
    min_samples: int = 5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown clusterer kind {self.kind!r}; expected one of {KINDS}")
        if self.n_init < 1 or self.max_iter < 1:
            raise ValueError("n_init and max_iter must be >= 1")
        if self.tol <= 0 or self.eps <= 0:
            raise ValueError("tol and eps must be > 0")
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")

    @property
    def auto_k(self) -> bool:
        return self.kind == "dbscan"

    def params(self) -> dict:
        """Only the parameters that matter for this kind."""
        if self.kind == "kmeans":
            return {"n_init": self.n_init, "max_iter": self.max_iter, "tol": self.tol}
        if self.kind == "dbscan":
            return {"eps": self.eps, "min_samples": self.min_samples}
        return {}

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params()}


@dataclass
class ClusterModel:
    kind: str
    k: int
    inertia: float
    centroids: np.ndarray | None = None
    merges: list[tuple[int, int, float, int]] = field(default_factory=list)
    core_indices: np.ndarray | None = None
    params: dict = field(default_factory=dict)
    history: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("centroids", "core_indices"):
            if d[key] is not None:
                d[key] = np.asarray(d[key]).tolist()
        d["merges"] = [[int(i), int(j), float(c), int(s)] for i, j, c, s in self.merges]
        return d


def _check_k(k: int, n: int) -> None:
    if not 2 <= k <= n:
        raise ValueError(f"k={k} outside 2..{n}")


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = cdist(x, x[chosen], "sqeuclidean")[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            rest = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(rest))
        chosen.append(nxt)
        d2 = np.minimum(d2, cdist(x, x[nxt:nxt + 1], "sqeuclidean")[:, 0])
    return x[chosen].copy()


def _repair_empty(x, labels, centers, d2) -> None:
    """Give each empty cluster the point farthest from its own centroid (in place)."""
    k = centers.shape[0]
    for j in range(k):
        sizes = np.bincount(labels, minlength=k)
        if sizes[j] > 0:
            continue
        own = d2[np.arange(len(labels)), labels]
        own = np.where(sizes[labels] > 1, own, -np.inf)
        i = int(np.argmax(own))
        labels[i] = j
        centers[j] = x[i]
        d2[i, :] = cdist(x[i:i + 1], centers, "sqeuclidean")[0]


def _lloyd(x, centers, max_iter, tol_abs):
    history = []
    for _ in range(max_iter):
        d2 = cdist(x, centers, "sqeuclidean")
        labels = np.argmin(d2, axis=1)
        _repair_empty(x, labels, centers, d2)
        history.append(float(d2[np.arange(len(x)), labels].sum()))
        new = np.array([x[labels == j].mean(axis=0) for j in range(len(centers))])
        shift = float(((new - centers) ** 2).sum())
        centers = new
        if shift <= tol_abs:
            break
    d2 = cdist(x, centers, "sqeuclidean")
    labels = np.argmin(d2, axis=1)
    _repair_empty(x, labels, centers, d2)
    inertia = float(d2[np.arange(len(x)), labels].sum())
    history.append(inertia)
    return centers, labels, inertia, history


def fit_kmeans(data, k: int, config: ClustererConfig | None = None, seed: int = 0):
    """Lloyd's algorithm from k-means++ seeds; best of ``n_init`` restarts by inertia.

    The convergence threshold is ``tol`` times the mean per-feature variance,
    compared against the squared centroid shift.
    """
    config = config or ClustererConfig("kmeans")
    x = as_matrix(data)
    n = x.shape[0]
    _check_k(k, n)
    if np.unique(x, axis=0).shape[0] < k:
        raise ValueError(f"k={k} exceeds the number of distinct samples")
    tol_abs = config.tol * float(np.mean(x.var(axis=0)))
    rng = generator(seed)
    best = None
    for _ in range(config.n_init):
        run = _lloyd(x, _kmeans_pp(x, k, rng), config.max_iter, tol_abs)
        if best is None or run[2] < best[2]:
            best = run
    centers, labels, inertia, history = best
    model = ClusterModel("kmeans", k, inertia, centroids=centers,
                         params=config.params(), history=history)
    return model, labels.astype(np.int64)


def _first_appearance(ids: np.ndarray) -> np.ndarray:
    _, first = np.unique(ids, return_index=True)
    order = np.argsort(first)
    remap = np.empty(ids.max() + 1, dtype=np.int64)
    remap[np.unique(ids)[order]] = np.arange(order.size)
    return remap[ids]


def ward_merges(x: np.ndarray, n_merges: int):
    """Run ``n_merges`` Ward merges with Lance-Williams updates.

    Merge cost is the increase in within-cluster sum of squares. The merged
    cluster keeps the smaller slot index; exact ties go to the
    lexicographically smallest pair.
    """
    n = x.shape[0]
    d = cdist(x, x, "sqeuclidean") / 2.0
    np.fill_diagonal(d, np.inf)
    size = np.ones(n)
    active = np.ones(n, dtype=bool)
    owner = np.arange(n)
    merges = []
    for _ in range(n_merges):
        flat = int(np.argmin(d))
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        cost = float(d[i, j])
        ni, nj = size[i], size[j]
        others = active.copy()
        others[[i, j]] = False
        nm = size[others]
        d_new = ((ni + nm) * d[i, others] + (nj + nm) * d[j, others] - nm * cost) / (ni + nj + nm)
        d[i, others] = d_new
        d[others, i] = d_new
        d[j, :] = np.inf
        d[:, j] = np.inf
        active[j] = False
        size[i] = ni + nj
        owner[owner == j] = i
        merges.append((i, j, cost, int(size[i])))
    return merges, owner


def fit_ward(data, k: int):
    """Agglomerative Ward clustering cut at exactly ``k`` clusters."""
    x = as_matrix(data)
    n = x.shape[0]
    _check_k(k, n)
    merges, owner = ward_merges(x, n - k)
    labels = _first_appearance(owner)
    centroids = np.array([x[labels == c].mean(axis=0) for c in range(k)])
    inertia = float(sum(((x[labels == c] - centroids[c]) ** 2).sum() for c in range(k)))
    model = ClusterModel("ward", k, inertia, centroids=centroids, merges=merges,
                         params={"cut_level": n - k})
    return model, labels


def fit_dbscan(data, config: ClustererConfig | None = None):
    """Density-based clustering; returns (model, labels, k_found).

    Clusters are grown breadth-first from core samples in index order, so a
    border sample reachable from two clusters joins the first one grown.
    Noise is labeled -1 and does not count toward ``k_found``.
    """
    config = config or ClustererConfig("dbscan")
    x = as_matrix(data)
    n = x.shape[0]
    neigh = cdist(x, x) <= config.eps
    core = neigh.sum(axis=1) >= config.min_samples
    labels = np.full(n, NOISE, dtype=np.int64)
    k = 0
    for i in range(n):
        if labels[i] != NOISE or not core[i]:
            continue
        labels[i] = k
        queue = deque([i])
        while queue:
            p = queue.popleft()
            for q in np.flatnonzero(neigh[p] & (labels == NOISE)):
                labels[q] = k
                if core[q]:
                    queue.append(q)
        k += 1
    model = ClusterModel("dbscan", k, float(np.sum(labels == NOISE)),
                         core_indices=np.flatnonzero(core), params=config.params())
    return model, labels, k


def fit_clusterer(config: ClustererConfig, data, k: int | None = None, seed: int = 0):
    """Dispatch on ``config.kind``; returns (model, labels)."""
    if config.auto_k:
        if k is not None:
            raise ValueError("dbscan infers k; do not supply one")
        model, labels, _ = fit_dbscan(data, config)
        return model, labels
    if k is None:
        raise ValueError(f"{config.kind} requires k")
    if config.kind == "kmeans":
        return fit_kmeans(data, k, config, seed)
    return fit_ward(data, k)


def elbow_eps(data, min_samples: int = 5) -> float:
    """DBSCAN radius from the elbow of the sorted k-distance curve.

    The k-distance of a sample is its distance to the ``min_samples``-th
    nearest neighbor (itself included). The elbow is the point of the
    ascending curve farthest from the chord joining its end points.
    """
    x = as_matrix(data)
    if not 1 <= min_samples <= x.shape[0]:
        raise ValueError("min_samples must lie in 1..n_samples")
    d = np.sort(cdist(x, x), axis=1)[:, min_samples - 1]
    curve = np.sort(d)
    t = np.linspace(0.0, 1.0, curve.size)
    span = curve[-1] - curve[0]
    if span == 0:
        return float(curve[0]) or 1e-12
    gap = t - (curve - curve[0]) / span
    return float(curve[int(np.argmax(gap))])

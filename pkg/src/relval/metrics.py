"""External agreement scores and internal validity indices.

Degenerate inputs (constant labelings, coincident centroids) never raise;
they return the documented convention and emit ``DegenerateMetricWarning``
so that one odd cross-validation cell cannot abort a long run.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gammaln

from .data import NOISE, as_matrix, check_labels


class DegenerateMetricWarning(UserWarning):
    pass


def _flag(msg: str) -> None:
    warnings.warn(msg, DegenerateMetricWarning, stacklevel=3)


def _pair(a, b):
    a = check_labels(a)
    b = check_labels(b, len(a))
    return a, b


def confusion(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Confusion matrix over the union of label ids (rows: ``a``, cols: ``b``)."""
    a, b = _pair(a, b)
    ids, inv = np.unique(np.concatenate([a, b]), return_inverse=True)
    k = ids.size
    c = np.zeros((k, k), dtype=np.int64)
    np.add.at(c, (inv[:len(a)], inv[len(a):]), 1)
    return c, ids


def accuracy(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean(a == b))


def mcc(a, b) -> float:
    """Multiclass Matthews correlation coefficient; labels must already be aligned."""
    c, _ = confusion(a, b)
    n = c.sum()
    t = c.sum(axis=1).astype(float)
    p = c.sum(axis=0).astype(float)
    cov = np.trace(c) * n - p @ t
    denom = np.sqrt((n * n - p @ p) * (n * n - t @ t))
    if denom == 0:
        _flag("MCC undefined (a labeling is constant); returning 0")
        return 0.0
    return float(cov / denom)


def precision_recall_f1(a, b) -> tuple[float, float, float]:
    """Macro-averaged precision, recall and F1 with ``a`` as reference, ``b`` as prediction.

    Classes never predicted get precision 0; classes absent from the
    reference get recall 0.
    """
    c, _ = confusion(a, b)
    tp = np.diag(c).astype(float)
    pred = c.sum(axis=0)
    ref = c.sum(axis=1)
    prec = np.divide(tp, pred, out=np.zeros_like(tp), where=pred > 0)
    rec = np.divide(tp, ref, out=np.zeros_like(tp), where=ref > 0)
    s = prec + rec
    f1 = np.divide(2 * prec * rec, s, out=np.zeros_like(tp), where=s > 0)
    return float(prec.mean()), float(rec.mean()), float(f1.mean())


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def expected_mutual_information(ca: np.ndarray, cb: np.ndarray, n: int) -> float:
    """E[MI] between two partitions with marginals ``ca`` and ``cb`` under random
    permutation (hypergeometric model), in nats."""
    ca = np.asarray(ca, dtype=np.int64)
    cb = np.asarray(cb, dtype=np.int64)
    total = 0.0
    lg_n = gammaln(n + 1)
    for ai in ca:
        for bj in cb:
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            if lo > hi:
                continue
            nij = np.arange(lo, hi + 1, dtype=float)
            term = nij / n * (np.log(n * nij) - np.log(ai * bj))
            log_p = (gammaln(ai + 1) + gammaln(bj + 1) + gammaln(n - ai + 1)
                     + gammaln(n - bj + 1) - lg_n - gammaln(nij + 1)
                     - gammaln(ai - nij + 1) - gammaln(bj - nij + 1)
                     - gammaln(n - ai - bj + nij + 1))
            total += float(np.sum(term * np.exp(log_p)))
    return total


def ami(a, b) -> float:
    """Adjusted mutual information with arithmetic-mean entropy normalization."""
    a, b = _pair(a, b)
    n = len(a)
    if n == 0:
        raise ValueError("ami needs at least one sample")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    ka, kb = ia.max() + 1, ib.max() + 1
    table = np.zeros((ka, kb), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    if ka == kb and np.count_nonzero(table) == ka:
        return 1.0  # identical partitions up to relabeling
    ca, cb = table.sum(axis=1), table.sum(axis=0)
    nz = table > 0
    nij = table[nz].astype(float)
    outer = np.outer(ca, cb)[nz].astype(float)
    mi = float(np.sum(nij / n * (np.log(nij * n) - np.log(outer))))
    emi = expected_mutual_information(ca, cb, n)
    h = 0.5 * (_entropy(ca, n) + _entropy(cb, n))
    denom = h - emi
    eps = np.finfo(float).eps
    if abs(denom) < eps:
        _flag("AMI denominator vanishes; returning 0")
        return 0.0
    return float((mi - emi) / denom)


def silhouette_samples(data, labels) -> np.ndarray:
    x = as_matrix(data)
    y = check_labels(labels, x.shape[0])
    if np.any(y == NOISE):
        raise ValueError("silhouette is undefined for noise samples; filter them first")
    ids, inv = np.unique(y, return_inverse=True)
    k = ids.size
    if k < 2:
        raise ValueError("silhouette needs at least 2 clusters")
    d = cdist(x, x)
    sizes = np.bincount(inv, minlength=k)
    sums = np.zeros((x.shape[0], k))
    for c in range(k):
        sums[:, c] = d[:, inv == c].sum(axis=1)
    own = sizes[inv]
    a = sums[np.arange(len(y)), inv] / np.maximum(own - 1, 1)
    mean_other = sums / sizes
    mean_other[np.arange(len(y)), inv] = np.inf
    b = mean_other.min(axis=1)
    s = (b - a) / np.maximum(a, b)
    s[own == 1] = 0.0
    return np.nan_to_num(s, nan=0.0)


def silhouette(data, labels) -> float:
    """Mean silhouette over all samples (Euclidean, exact pairwise distances)."""
    return float(np.mean(silhouette_samples(data, labels)))


def davies_bouldin(data, labels) -> float:
    """Mean over clusters of the worst ``(s_i + s_j) / d(c_i, c_j)`` ratio."""
    x = as_matrix(data)
    y = check_labels(labels, x.shape[0])
    ids, inv = np.unique(y, return_inverse=True)
    k = ids.size
    if k < 2:
        raise ValueError("Davies-Bouldin needs at least 2 clusters")
    cent = np.array([x[inv == c].mean(axis=0) for c in range(k)])
    spread = np.array([np.linalg.norm(x[inv == c] - cent[c], axis=1).mean() for c in range(k)])
    sep = cdist(cent, cent)
    np.fill_diagonal(sep, np.inf)
    if np.any(sep == 0):
        _flag("coincident centroids; Davies-Bouldin is +inf")
        return float("inf")
    ratio = (spread[:, None] + spread[None, :]) / sep
    return float(ratio.max(axis=1).mean())


@dataclass
class InternalSweep:
    per_k: dict[int, dict[str, float]] = field(default_factory=dict)
    best_silhouette_k: int = 0
    best_db_k: int = 0


def internal_sweep(data, clusterer, k_values, seed: int = 0) -> InternalSweep:
    """Refit ``clusterer`` at each k and record silhouette and Davies-Bouldin.

    Ties keep the smallest k.
    """
    from .clustering import fit_clusterer

    per_k = {}
    for k in k_values:
        _, labels = fit_clusterer(clusterer, data, int(k), seed=seed)
        per_k[int(k)] = {"silhouette": silhouette(data, labels),
                         "davies_bouldin": davies_bouldin(data, labels)}
    if not per_k:
        raise ValueError("k_values is empty")
    ks = sorted(per_k)
    best_s = max(ks, key=lambda k: (per_k[k]["silhouette"], -k))
    best_db = min(ks, key=lambda k: (per_k[k]["davies_bouldin"], k))
    return InternalSweep(per_k, best_s, best_db)

"""Label alignment by Kuhn-Munkres and the permutation-minimized label distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import NOISE, check_labels


@dataclass(frozen=True)
class Permutation:
    """Bijection on 0..size-1; ``mapping[i]`` is the image of label ``i``."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(v) for v in self.mapping)
        if sorted(m) != list(range(len(m))):
            raise ValueError(f"not a permutation of 0..{len(m) - 1}: {m}")
        object.__setattr__(self, "mapping", m)

    @classmethod
    def identity(cls, size: int) -> "Permutation":
        return cls(tuple(range(size)))

    @property
    def size(self) -> int:
        return len(self.mapping)

    def inverse(self) -> "Permutation":
        inv = [0] * self.size
        for i, j in enumerate(self.mapping):
            inv[j] = i
        return Permutation(tuple(inv))

    def to_list(self) -> list[int]:
        return list(self.mapping)


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray
    row_ids: tuple[int, ...]
    col_ids: tuple[int, ...]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def contingency(rows, cols) -> ContingencyTable:
    """Count table of label ids ``0..max`` on each side (rows x cols)."""
    a = np.asarray(rows, dtype=np.int64)
    b = np.asarray(cols, dtype=np.int64)
    ka = int(a.max()) + 1 if a.size else 0
    kb = int(b.max()) + 1 if b.size else 0
    counts = np.zeros((ka, kb), dtype=np.int64)
    np.add.at(counts, (a, b), 1)
    return ContingencyTable(counts, tuple(range(ka)), tuple(range(kb)))


def linear_assignment(cost) -> np.ndarray:
    """Minimum-cost perfect matching on a square matrix.

    Shortest augmenting path form of the Hungarian method with row/column
    potentials, O(n^3). Returns ``col_of_row``.
    """
    c = np.asarray(cost, dtype=float)
    n = c.shape[0]
    if c.shape != (n, n):
        raise ValueError("cost matrix must be square")
    inf = np.inf
    # 1-based arrays; index 0 is the virtual root
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    row_of_col = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        row_of_col[0] = i
        j0 = 0
        minv = np.full(n + 1, inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of_col[j0]
            free = ~used[1:]
            cur = c[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            used_idx = np.flatnonzero(used)
            u[row_of_col[used_idx]] += delta
            v[used_idx] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if row_of_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            row_of_col[j0] = row_of_col[j1]
            j0 = j1
    col_of_row = np.empty(n, dtype=np.int64)
    col_of_row[row_of_col[1:] - 1] = np.arange(n)
    return col_of_row


def hungarian_max_agreement(table) -> tuple[Permutation, int]:
    """Permutation maximizing ``sum_i counts[i, perm(i)]``.

    Non-square tables are zero-padded, so labels without a partner map to
    ids outside the other side's range.
    """
    counts = table.counts if isinstance(table, ContingencyTable) else np.asarray(table)
    counts = np.asarray(counts, dtype=np.int64)
    if counts.ndim != 2 or counts.size == 0:
        raise ValueError("contingency table must be a non-empty matrix")
    m = max(counts.shape)
    padded = np.zeros((m, m), dtype=np.int64)
    padded[:counts.shape[0], :counts.shape[1]] = counts
    cols = linear_assignment(padded.max() - padded)
    agreement = int(padded[np.arange(m), cols].sum())
    return Permutation(tuple(int(c) for c in cols)), agreement


def misclassification_distance(predicted, clustered) -> tuple[float, Permutation]:
    """Fraction of disagreements after optimally permuting the clustering labels.

    ``min_sigma (1/n) sum 1{predicted_i != sigma(clustered_i)}`` where samples
    whose clustering label is noise (-1) are left out of ``n``.
    """
    p = check_labels(predicted)
    c = check_labels(clustered, len(p))
    keep = c != NOISE
    p, c = p[keep], c[keep]
    if p.size == 0:
        raise ValueError("no comparable samples (all clustering labels are noise)")
    if np.any(p == NOISE):
        raise ValueError("predicted labels must not contain noise")
    perm, agreement = hungarian_max_agreement(contingency(c, p))
    return (p.size - agreement) / p.size, perm


def relabel(labels, perm: Permutation) -> np.ndarray:
    """Apply ``perm`` to every non-noise label; -1 passes through."""
    y = check_labels(labels)
    mask = y != NOISE
    if np.any(y[mask] >= perm.size):
        raise ValueError(f"label {int(y[mask].max())} outside permutation of size {perm.size}")
    out = y.copy()
    out[mask] = np.asarray(perm.mapping, dtype=np.int64)[y[mask]]
    return out

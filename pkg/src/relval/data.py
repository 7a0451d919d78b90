"""Datasets, CSV ingestion, synthetic blobs, scaling and deterministic splits."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import TAG_FOLDS, TAG_SPLIT, generator

NOISE = -1


@dataclass(frozen=True)
class Dataset:
    """Row-major sample matrix with optional reference labels.

    ``min_samples`` is 2 for ingested data; subsets made by ``take`` (split
    parts) only need one row.
    """

    values: np.ndarray
    feature_names: tuple[str, ...] | None = None
    true_labels: np.ndarray | None = None
    id: str = "dataset"
    min_samples: int = field(default=2, repr=False, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] < 1:
            raise ValueError("values must be a 2-D matrix with at least one feature")
        if values.shape[0] < self.min_samples:
            raise ValueError(f"n_samples >= {self.min_samples} violated (got {values.shape[0]})")
        if not np.all(np.isfinite(values)):
            r, c = np.argwhere(~np.isfinite(values))[0]
            raise ValueError(f"non-finite value at row {r}, column {c}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.feature_names is not None:
            names = tuple(self.feature_names)
            if len(names) != values.shape[1]:
                raise ValueError("feature_names length does not match feature count")
            object.__setattr__(self, "feature_names", names)
        if self.true_labels is not None:
            labels = np.asarray(self.true_labels, dtype=np.int64).copy()
            if labels.shape != (values.shape[0],):
                raise ValueError("true_labels length must equal n_samples")
            labels.setflags(write=False)
            object.__setattr__(self, "true_labels", labels)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def take(self, indices, id: str | None = None) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        labels = None if self.true_labels is None else self.true_labels[idx]
        return Dataset(self.values[idx], self.feature_names, labels, id or self.id,
                       min_samples=1)


def as_matrix(data) -> np.ndarray:
    """Accept a Dataset or an array-like and return a float matrix."""
    if isinstance(data, Dataset):
        return data.values
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return x


def check_labels(labels, n: int | None = None) -> np.ndarray:
    """Validate a label vector: integers that are >= 0 or exactly -1 (noise)."""
    y = np.asarray(labels)
    if y.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise ValueError("labels must be integers")
    y = y.astype(np.int64)
    if np.any(y < NOISE):
        raise ValueError("labels must be >= 0 or -1 (noise)")
    if n is not None and y.shape[0] != n:
        raise ValueError(f"expected {n} labels, got {y.shape[0]}")
    return y


def compact_labels(labels) -> np.ndarray:
    """Map non-noise labels onto 0..k-1 preserving their numeric order."""
    y = check_labels(labels)
    out = np.full_like(y, NOISE)
    mask = y != NOISE
    _, out[mask] = np.unique(y[mask], return_inverse=True)
    return out


def n_clusters(labels) -> int:
    y = np.asarray(labels)
    return int(np.unique(y[y != NOISE]).size)


# -- CSV ---------------------------------------------------------------------


def load_csv(path, label_column: str | None = None, has_header: bool = True,
             id: str | None = None) -> Dataset:
    """Read a comma-separated numeric file.

    String labels in ``label_column`` are factorized in sorted order; integer
    labels are kept as-is.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    header = None
    if has_header:
        if not lines:
            raise ValueError(f"{path}: empty file")
        header = [h.strip() for h in lines[0].split(",")]
        lines = lines[1:]
    rows = [[c.strip() for c in ln.split(",")] for ln in lines]
    width = len(header) if header else (len(rows[0]) if rows else 0)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{path}: row {i + 1} has {len(row)} cells, expected {width}")

    label_idx = None
    if label_column is not None:
        if header is None or label_column not in header:
            raise ValueError(f"{path}: label column {label_column!r} absent")
        label_idx = header.index(label_column)

    feature_idx = [j for j in range(width) if j != label_idx]
    values = np.empty((len(rows), len(feature_idx)))
    for i, row in enumerate(rows):
        for out_j, j in enumerate(feature_idx):
            try:
                v = float(row[j])
            except ValueError:
                raise ValueError(f"{path}: non-numeric cell {row[j]!r} at row {i + 1}, "
                                 f"column {j + 1}") from None
            if not math.isfinite(v):
                raise ValueError(f"{path}: non-finite cell {row[j]!r} at row {i + 1}, "
                                 f"column {j + 1}")
            values[i, out_j] = v
    if len(rows) < 2:
        raise ValueError(f"{path}: n_samples >= 2 violated (got {len(rows)})")

    labels = None
    if label_idx is not None:
        raw = [row[label_idx] for row in rows]
        try:
            labels = np.array([int(v) for v in raw], dtype=np.int64)
        except ValueError:
            _, labels = np.unique(np.array(raw), return_inverse=True)
    names = None if header is None else tuple(header[j] for j in feature_idx)
    return Dataset(values, names, labels, id or path.stem)


def write_csv(data: Dataset, path, label_column: str = "label") -> None:
    """Write ``data`` so that ``load_csv`` reproduces it bit-exactly."""
    names = data.feature_names or tuple(f"x{j}" for j in range(data.n_features))
    header = list(names)
    if data.true_labels is not None:
        header.append(label_column)
    out = [",".join(header)]
    for i in range(data.n_samples):
        cells = [repr(float(v)) for v in data.values[i]]
        if data.true_labels is not None:
            cells.append(str(int(data.true_labels[i])))
        out.append(",".join(cells))
    Path(path).write_text("\n".join(out) + "\n")


# -- synthetic data ----------------------------------------------------------


def make_blobs(n_samples: int, n_features: int = 2, centers=3, cluster_std: float = 1.0,
               seed: int = 0, center_box: tuple[float, float] = (-10.0, 10.0),
               shuffle: bool = True) -> Dataset:
    """Isotropic Gaussian blobs.

    Uses the legacy MT19937 stream with the same draw order as the common
    ML-toolkit generator (centers, then per-center samples, then a shuffle),
    so a given seed yields the familiar dataset.
    """
    if cluster_std < 0:
        raise ValueError("cluster_std must be non-negative")
    rs = np.random.RandomState(seed)
    if isinstance(centers, (int, np.integer)):
        centers = rs.uniform(center_box[0], center_box[1], size=(int(centers), n_features))
    else:
        centers = np.asarray(centers, dtype=float)
        if centers.ndim != 2 or centers.shape[1] != n_features:
            raise ValueError("centers must be an (n_centers, n_features) array")
    n_centers = centers.shape[0]
    if n_samples < n_centers:
        raise ValueError(f"fewer samples ({n_samples}) than centers ({n_centers})")

    per_center = [n_samples // n_centers] * n_centers
    for i in range(n_samples % n_centers):
        per_center[i] += 1
    x = np.empty((n_samples, n_features))
    y = np.empty(n_samples, dtype=np.int64)
    start = 0
    for i, m in enumerate(per_center):
        x[start:start + m] = rs.normal(loc=centers[i], scale=cluster_std, size=(m, n_features))
        y[start:start + m] = i
        start += m
    if shuffle:
        order = np.arange(n_samples)
        rs.shuffle(order)
        x, y = x[order], y[order]
    return Dataset(x, None, y, id=f"blobs{n_centers}")


# -- scaling -----------------------------------------------------------------


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    scale: np.ndarray
    zero_variance: np.ndarray

    def transform(self, data: Dataset) -> Dataset:
        if data.n_features != self.mean.shape[0]:
            raise ValueError("feature-count mismatch between data and scaler")
        values = (data.values - self.mean) / self.scale
        return Dataset(values, data.feature_names, data.true_labels, data.id,
                       min_samples=data.min_samples)


def standard_scale(data: Dataset) -> tuple[Dataset, Scaler]:
    """Center and scale each feature to unit population standard deviation.

    Constant features are centered only and reported in ``zero_variance``.
    """
    mean = data.values.mean(axis=0)
    sd = data.values.std(axis=0)  # population sd (ddof=0)
    zero = sd <= np.finfo(float).eps * np.maximum(1.0, np.abs(mean))
    scale = np.where(zero, 1.0, sd)
    scaler = Scaler(mean, scale, zero)
    return scaler.transform(data), scaler


# -- splitting ---------------------------------------------------------------


@dataclass(frozen=True)
class SplitPlan:
    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int
    stratifier: np.ndarray | None = None

    def to_json(self) -> str:
        return json.dumps({"seed": int(self.seed),
                           "train": [int(i) for i in self.train_indices],
                           "test": [int(i) for i in self.test_indices]})


def _strata(stratifier, n: int) -> list[np.ndarray]:
    s = np.asarray(stratifier)
    if s.shape != (n,):
        raise ValueError("stratifier length must equal n_samples")
    _, codes = np.unique(s, return_inverse=True)
    return [np.flatnonzero(codes == c) for c in range(codes.max() + 1)]


def train_test_split(data: Dataset, test_fraction: float, seed: int = 0,
                     stratifier=None) -> tuple[SplitPlan, Dataset, Dataset]:
    """Deterministic shuffled split.

    With a stratifier, each stratum receives ``floor(n_s * f)`` test samples
    and the remaining test quota goes to the strata with the largest
    fractional parts (ties by stratum order), which keeps every stratum within
    one sample of its proportional share.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    n = data.n_samples
    n_test = int(math.floor(n * test_fraction + 0.5))
    if n_test == 0 or n_test == n:
        raise ValueError(f"test_fraction {test_fraction} on {n} samples leaves an empty part")
    rng = generator(seed, TAG_SPLIT)

    if stratifier is None:
        perm = rng.permutation(n)
        test = perm[:n_test]
    else:
        groups = _strata(stratifier, n)
        quotas = np.array([len(g) * test_fraction for g in groups])
        alloc = np.floor(quotas).astype(int)
        remainder = n_test - alloc.sum()
        order = sorted(range(len(groups)), key=lambda i: (-(quotas[i] - alloc[i]), i))
        for i in order[:remainder]:
            alloc[i] += 1
        test = np.concatenate([rng.permutation(g)[:a] for g, a in zip(groups, alloc)])

    mask = np.zeros(n, dtype=bool)
    mask[test] = True
    test_idx = np.flatnonzero(mask)
    train_idx = np.flatnonzero(~mask)
    strat = None if stratifier is None else np.asarray(stratifier)
    plan = SplitPlan(train_idx, test_idx, seed, strat)
    return plan, data.take(train_idx, f"{data.id}-train"), data.take(test_idx, f"{data.id}-test")


@dataclass(frozen=True)
class CvGrid:
    """Repeated cross-validation schema: K x n_fold x n_rep, n_rnd random labelings."""

    n_fold: int = 2
    n_rep: int = 1
    k_values: tuple[int, ...] = field(default_factory=tuple)
    n_rnd: int = 10
    base_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        if self.n_fold < 2:
            raise ValueError("n_fold must be >= 2")
        if self.n_rep < 1 or self.n_rnd < 1:
            raise ValueError("n_rep and n_rnd must be >= 1")
        if self.base_seed < 0:
            raise ValueError("base_seed must be non-negative")
        ks = self.k_values
        if any(k < 2 for k in ks):
            raise ValueError("every k must be >= 2")
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("k_values must be strictly increasing")

    def validate(self, n: int) -> None:
        if self.n_fold > n:
            raise ValueError(f"n_fold={self.n_fold} exceeds {n} training samples")
        limit = n * (self.n_fold - 1) / self.n_fold
        bad = [k for k in self.k_values if k > limit]
        if bad:
            raise ValueError(f"k values {bad} exceed inner-train size bound {limit:g}")


def cv_folds(n: int, grid: CvGrid, rep: int, stratifier=None) -> list[tuple[np.ndarray, np.ndarray]]:
    """Folds for one shuffled repetition, as (inner_train, validation) index pairs.

    Samples are shuffled with the stream of ``(base_seed, rep)`` and dealt to
    folds round-robin; with a stratifier the deal runs stratum by stratum and
    continues where the previous stratum stopped.
    """
    if not 0 <= rep < grid.n_rep:
        raise ValueError(f"rep {rep} outside 0..{grid.n_rep - 1}")
    if grid.n_fold > n:
        raise ValueError(f"n_fold={grid.n_fold} exceeds n={n}")
    rng = generator(grid.base_seed, TAG_FOLDS, rep)
    fold_of = np.empty(n, dtype=np.int64)
    if stratifier is None:
        perm = rng.permutation(n)
        fold_of[perm] = np.arange(n) % grid.n_fold
    else:
        offset = 0
        for g in _strata(stratifier, n):
            members = rng.permutation(g)
            fold_of[members] = (offset + np.arange(len(g))) % grid.n_fold
            offset += len(g)
    idx = np.arange(n)
    return [(idx[fold_of != f], idx[fold_of == f]) for f in range(grid.n_fold)]


import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relval.data import (CvGrid, Dataset, compact_labels, cv_folds, load_csv, make_blobs,
                         standard_scale, train_test_split, write_csv)


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_csv_with_label_column(tmp_path):
    p = _write(tmp_path, "a,b,y\n1,2,0\n3,4,1\n5,6,0\n7,8,2\n")
    d = load_csv(p, label_column="y")
    assert d.values.shape == (4, 2)
    assert d.feature_names == ("a", "b")
    assert d.true_labels.tolist() == [0, 1, 0, 2]


def test_load_csv_string_labels_factorized(tmp_path):
    p = _write(tmp_path, "a,y\n1,cat\n2,dog\n3,cat\n")
    assert load_csv(p, label_column="y").true_labels.tolist() == [0, 1, 0]


def test_load_csv_rejects_nan_and_names_cell(tmp_path):
    p = _write(tmp_path, "a,b\n1,2\n3,NaN\n")
    with pytest.raises(ValueError, match="row 2, column 2"):
        load_csv(p)


def test_load_csv_rejects_text(tmp_path):
    p = _write(tmp_path, "a,b\n1,x\n3,4\n")
    with pytest.raises(ValueError, match="non-numeric"):
        load_csv(p)


def test_load_csv_single_row(tmp_path):
    p = _write(tmp_path, "a,b\n1,2\n")
    with pytest.raises(ValueError, match="n_samples >= 2 violated"):
        load_csv(p)


def test_load_csv_missing_label_column(tmp_path):
    p = _write(tmp_path, "a,b\n1,2\n3,4\n")
    with pytest.raises(ValueError, match="absent"):
        load_csv(p, label_column="y")


def test_load_csv_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "nope.csv")


def test_csv_round_trip_full_precision(tmp_path):
    rng = np.random.default_rng(3)
    d = Dataset(rng.normal(size=(20, 3)) * 1e3, ("a", "b", "c"), rng.integers(0, 4, 20))
    write_csv(d, tmp_path / "rt.csv")
    back = load_csv(tmp_path / "rt.csv", label_column="label")
    np.testing.assert_array_equal(back.values, d.values)
    np.testing.assert_array_equal(back.true_labels, d.true_labels)


def test_dataset_invariants():
    with pytest.raises(ValueError):
        Dataset(np.array([[1.0, np.inf], [0, 0]]))
    with pytest.raises(ValueError):
        Dataset(np.ones((1, 2)))
    with pytest.raises(ValueError):
        Dataset(np.ones((3, 2)), true_labels=np.array([0, 1]))


def test_blobs_balanced_classes():
    d = make_blobs(1000, 2, 5, seed=42, center_box=(-20, 20))
    assert d.values.shape == (1000, 2)
    assert np.bincount(d.true_labels).tolist() == [200] * 5


def test_blobs_matches_reference_generator():
    sk = pytest.importorskip("sklearn.datasets")
    x, y = sk.make_blobs(n_samples=1000, n_features=2, centers=5, center_box=(-20, 20),
                         random_state=42)
    d = make_blobs(1000, 2, 5, seed=42, center_box=(-20, 20))
    np.testing.assert_array_equal(d.values, x)
    np.testing.assert_array_equal(d.true_labels, y)


def test_blobs_zero_std_and_determinism():
    centers = np.array([[0.0, 0.0], [5.0, 5.0]])
    d = make_blobs(10, 2, centers, cluster_std=0.0, seed=1)
    np.testing.assert_array_equal(d.values, centers[d.true_labels])
    a, b = make_blobs(50, 3, 4, seed=9), make_blobs(50, 3, 4, seed=9)
    np.testing.assert_array_equal(a.values, b.values)
    with pytest.raises(ValueError, match="fewer samples"):
        make_blobs(3, 2, 5)


def test_standard_scale_hand_values():
    d = Dataset(np.array([[1.0, 5.0], [3.0, 5.0]]))
    scaled, scaler = standard_scale(d)
    # population sd of [1, 3] is 1, so (x - 2) / 1
    np.testing.assert_allclose(scaled.values[:, 0], [-1.0, 1.0], atol=1e-15)
    np.testing.assert_array_equal(scaled.values[:, 1], [0.0, 0.0])
    assert scaler.zero_variance.tolist() == [False, True]


def test_standard_scale_idempotent():
    rng = np.random.default_rng(0)
    once, _ = standard_scale(Dataset(rng.normal(size=(40, 3))))
    twice, _ = standard_scale(once)
    np.testing.assert_allclose(twice.values, once.values, atol=1e-12)
    np.testing.assert_allclose(once.values.std(axis=0), 1.0, atol=1e-12)


def test_split_sizes():
    d = make_blobs(1000, 2, 5, seed=42)
    plan, tr, ts = train_test_split(d, 0.3, seed=42)
    assert (tr.n_samples, ts.n_samples) == (700, 300)
    assert sorted(np.concatenate([plan.train_indices, plan.test_indices]).tolist()) == \
        list(range(1000))
    j = json.loads(plan.to_json())
    assert set(j) == {"seed", "train", "test"}


def test_split_smallest_case():
    d = Dataset(np.array([[0.0], [1.0]]))
    _, tr, ts = train_test_split(d, 0.5, seed=0)
    assert tr.n_samples == ts.n_samples == 1


def test_split_empty_part_rejected():
    d = Dataset(np.zeros((3, 1)))
    with pytest.raises(ValueError, match="empty"):
        train_test_split(d, 0.1)


def test_stratified_example():
    strat = np.array([0] * 80 + [1] * 20)
    d = Dataset(np.arange(100.0)[:, None], true_labels=strat)
    plan, _, ts = train_test_split(d, 0.25, seed=5, stratifier=strat)
    counts = np.bincount(strat[plan.test_indices], minlength=2)
    assert abs(counts[0] - 20) <= 1 and abs(counts[1] - 5) <= 1


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=4, max_size=80),
       st.floats(0.1, 0.9), st.integers(0, 2**32 - 1))
def test_stratified_within_one_sample(strat, frac, seed):
    strat = np.array(strat)
    n = strat.size
    n_test = int(np.floor(n * frac + 0.5))
    if n_test in (0, n):
        return
    d = Dataset(np.zeros((n, 1)))
    plan, _, _ = train_test_split(d, frac, seed, stratifier=strat)
    for s in np.unique(strat):
        n_s = int((strat == s).sum())
        in_train = int((strat[plan.train_indices] == s).sum())
        expected = n_s * plan.train_indices.size / n
        assert abs(in_train - expected) <= 1 + 1e-9


def test_split_deterministic():
    d = make_blobs(60, 2, 3, seed=0)
    a, _, _ = train_test_split(d, 0.3, seed=11)
    b, _, _ = train_test_split(d, 0.3, seed=11)
    assert a.to_json() == b.to_json()


def test_cv_folds_partition():
    grid = CvGrid(n_fold=2, n_rep=1, k_values=(2,))
    folds = cv_folds(6, grid, 0)
    assert len(folds) == 2
    vals = np.concatenate([v for _, v in folds])
    assert sorted(vals.tolist()) == list(range(6))
    assert all(v.size == 3 for _, v in folds)
    for tr, v in folds:
        assert not set(tr) & set(v)


def test_cv_folds_deterministic_and_rep_dependent():
    grid = CvGrid(n_fold=2, n_rep=10, k_values=(2,), base_seed=3)
    a = cv_folds(40, grid, 4)
    b = cv_folds(40, grid, 4)
    c = cv_folds(40, grid, 5)
    assert all(np.array_equal(x[1], y[1]) for x, y in zip(a, b))
    assert not np.array_equal(a[0][1], c[0][1])
    assert sum(len(cv_folds(40, grid, r)) for r in range(grid.n_rep)) == 20


def test_cv_folds_stratified_balance():
    strat = np.repeat([0, 1, 2], [10, 7, 5])
    grid = CvGrid(n_fold=2, n_rep=1)
    for _, val in cv_folds(22, grid, 0, strat):
        counts = np.bincount(strat[val], minlength=3)
        assert np.all(np.abs(counts - np.array([10, 7, 5]) / 2) <= 1)


def test_cv_grid_validation():
    with pytest.raises(ValueError):
        CvGrid(n_fold=1)
    with pytest.raises(ValueError):
        CvGrid(k_values=(3, 2))
    with pytest.raises(ValueError):
        CvGrid(n_fold=5).validate(4)
    with pytest.raises(ValueError, match="exceeds"):
        cv_folds(3, CvGrid(n_fold=4), 0)


def test_compact_labels_keeps_noise():
    assert compact_labels([5, -1, 2, 5]).tolist() == [1, -1, 0, 1]

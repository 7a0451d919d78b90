import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relval.clustering import ClustererConfig
from relval.data import Dataset, make_blobs, train_test_split
from relval.metrics import (DegenerateMetricWarning, ami, davies_bouldin, internal_sweep, mcc,
                            precision_recall_f1, silhouette)

import oracles


@pytest.mark.parametrize("seed", range(40))
def test_against_direct_formulas(seed):
    rng = np.random.default_rng(seed)
    x, a, b = oracles.random_metric_instance(rng)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateMetricWarning)
        assert mcc(a, b) == pytest.approx(oracles.mcc(a.tolist(), b.tolist()), abs=1e-10)
        assert np.allclose(precision_recall_f1(a, b),
                           oracles.precision_recall_f1(a.tolist(), b.tolist()), atol=1e-10)
        assert ami(a, b) == pytest.approx(oracles.ami(a.tolist(), b.tolist()), abs=1e-10)
    assert silhouette(x, a) == pytest.approx(oracles.silhouette(x, a.tolist()), abs=1e-10)
    assert davies_bouldin(x, a) == pytest.approx(oracles.davies_bouldin(x, a.tolist()),
                                                 abs=1e-10)


def test_mcc_cases():
    assert mcc([0, 1, 2, 1], [0, 1, 2, 1]) == 1.0
    # TP=2, TN=2, FP=1, FN=1
    a = [1, 1, 1, 0, 0, 0]
    b = [1, 1, 0, 1, 0, 0]
    assert mcc(a, b) == pytest.approx((2 * 2 - 1 * 1) / np.sqrt(3 * 3 * 3 * 3), abs=1e-15)
    assert mcc(a, b) == pytest.approx(1 / 3, abs=1e-15)
    with pytest.warns(DegenerateMetricWarning):
        assert mcc([0, 1, 0, 1], [1, 1, 1, 1]) == 0.0


def test_precision_recall_f1_cases():
    assert precision_recall_f1([0, 1, 2], [0, 1, 2]) == (1.0, 1.0, 1.0)
    assert precision_recall_f1([0, 0, 1, 1], [1, 1, 1, 1])[1] == 0.5
    # class 0: p=1, r=1/2; class 1: p=2/3, r=1
    f1_0 = 2 * 1 * 0.5 / 1.5
    f1_1 = 2 * (2 / 3) * 1 / (5 / 3)
    assert precision_recall_f1([0, 0, 1, 1], [0, 1, 1, 1])[2] == pytest.approx(
        (f1_0 + f1_1) / 2, abs=1e-15)


def test_ami_identical_and_invariance():
    rng = np.random.default_rng(4)
    a = rng.integers(0, 4, 60)
    assert ami(a, a) == 1.0
    assert ami(a, (a + 1) % 4) == 1.0
    b = rng.integers(0, 3, 60)
    sigma = rng.permutation(4)
    assert ami(sigma[a], b) == pytest.approx(ami(a, b), abs=1e-12)


def test_ami_independent_labelings_near_zero():
    rng = np.random.default_rng(12)
    a, b = rng.integers(0, 3, 10_000), rng.integers(0, 3, 10_000)
    assert abs(ami(a, b)) < 0.02


def test_silhouette_hand_value():
    x = np.array([[0.0], [0.1], [10.0], [10.1]])
    expected = 1 - 0.5 * (0.1 / 10.05 + 0.1 / 9.95)
    assert silhouette(x, [0, 0, 1, 1]) == pytest.approx(expected, abs=1e-12)
    assert silhouette(x, [0, 0, 1, 1]) == pytest.approx(0.990, abs=1e-3)


def test_silhouette_interleaved_near_zero():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(100, 2))
    x = np.vstack([pts, pts])
    # a uses n-1 own-cluster neighbors, b uses n, so s = -1/n per point
    assert silhouette(x, [0] * 100 + [1] * 100) == pytest.approx(-0.01, abs=1e-12)


def test_silhouette_singleton_scores_zero():
    x = np.array([[0.0], [1.0], [1.1], [5.0]])
    assert oracles.silhouette(x, [0, 1, 1, 2]) == pytest.approx(silhouette(x, [0, 1, 1, 2]))


def test_davies_bouldin_hand_value():
    x = np.array([[-1.0], [1.0], [99.0], [101.0]])
    assert davies_bouldin(x, [0, 0, 1, 1]) == pytest.approx(0.02, abs=1e-15)


def test_davies_bouldin_decreases_with_spread():
    centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    offsets = np.random.default_rng(1).normal(size=(30, 2))
    labels = np.repeat([0, 1, 2], 10)
    prev = np.inf
    for scale in (2.0, 1.0, 0.5, 0.25):
        x = centers[labels] + scale * (offsets - offsets.reshape(3, 10, 2).mean(1)[labels])
        v = davies_bouldin(x, labels)
        assert v < prev
        prev = v


def test_davies_bouldin_coincident_centroids():
    with pytest.warns(DegenerateMetricWarning):
        assert davies_bouldin(np.array([[-1.0], [1.0], [-2.0], [2.0]]), [0, 0, 1, 1]) == np.inf


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_common_relabeling_invariance(seed):
    rng = np.random.default_rng(seed)
    _, a, b = oracles.random_metric_instance(rng)
    sigma = rng.permutation(6)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateMetricWarning)
        assert mcc(sigma[a], sigma[b]) == pytest.approx(mcc(a, b), abs=1e-12)
        assert ami(sigma[a], sigma[b]) == pytest.approx(ami(a, b), abs=1e-12)
        # macro averages are over the same set of classes
        assert np.allclose(precision_recall_f1(sigma[a], sigma[b]), precision_recall_f1(a, b))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ranges(seed):
    x, a, _ = oracles.random_metric_instance(np.random.default_rng(seed))
    assert -1.0 <= silhouette(x, a) <= 1.0
    assert davies_bouldin(x, a) >= 0.0


def test_internal_sweep_singleton_list():
    d = make_blobs(60, 2, 3, seed=0)
    sweep = internal_sweep(d, ClustererConfig("kmeans"), [3])
    assert sweep.best_silhouette_k == sweep.best_db_k == 3


def test_internal_sweep_blobs_silhouette():
    data = make_blobs(1000, 2, 5, seed=42, center_box=(-20, 20))
    _, train, _ = train_test_split(data, 0.3, seed=42, stratifier=data.true_labels)
    sweep = internal_sweep(train, ClustererConfig("kmeans"), range(2, 7))
    assert sweep.best_silhouette_k == 5
    assert sweep.per_k[5]["silhouette"] == pytest.approx(0.83, abs=0.02)
    assert silhouette(train, train.true_labels) == pytest.approx(0.83, abs=0.02)


def test_rejects_single_cluster():
    with pytest.raises(ValueError):
        silhouette(Dataset(np.zeros((3, 1))), [0, 0, 0])

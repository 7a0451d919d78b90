import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relval.assignment import misclassification_distance
from relval.classification import (ClassifierConfig, TrainedClassifier, _design, fit,
                                   logreg_objective, predict)
from relval.clustering import fit_kmeans


def test_knn_1_recovers_training_labels():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(30, 2))
    y = rng.integers(0, 3, 30)
    m = fit(ClassifierConfig("knn", n_neighbors=1), x, y)
    assert np.array_equal(predict(m, x), y)


def test_knn_tie_goes_to_nearer_neighbor():
    x = np.array([[0.0], [3.0]])
    m = fit(ClassifierConfig("knn", n_neighbors=2), x, [7, 2])
    assert predict(m, [[1.0]]).tolist() == [7]
    assert predict(m, [[2.0]]).tolist() == [2]
    # equidistant: lower class id wins
    assert predict(m, [[1.5]]).tolist() == [2]


def test_knn_blobs_validation(blobs):
    _, train, test = blobs
    _, y_tr = fit_kmeans(train, 5, seed=0)
    _, y_ts = fit_kmeans(test, 5, seed=1)
    m = fit(ClassifierConfig("knn", 15), train, y_tr)
    assert misclassification_distance(predict(m, test), y_ts)[0] == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7))
def test_knn_row_permutation_invariance(seed, k):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 4, size=(25, 2)).astype(float)  # many distance ties
    y = rng.integers(0, 3, 25)
    q = rng.integers(0, 4, size=(10, 2)).astype(float) + 0.5
    perm = rng.permutation(25)
    cfg = ClassifierConfig("knn", n_neighbors=k)
    assert np.array_equal(predict(fit(cfg, x, y), q), predict(fit(cfg, x[perm], y[perm]), q))


def test_logreg_separable_1d():
    x = np.array([[-3.0], [-2.0], [-1.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 0, 1, 1, 1])
    m = fit(ClassifierConfig("logreg"), x, y)
    assert np.array_equal(predict(m, x), y)


def test_logreg_separable_multiclass():
    rng = np.random.default_rng(3)
    centers = np.array([[0, 0], [8, 0], [0, 8]])
    y = np.repeat([0, 1, 2], 20)
    x = centers[y] + rng.normal(0, 0.5, (60, 2))
    m = fit(ClassifierConfig("logreg"), x, y)
    assert np.array_equal(predict(m, x), y)


@pytest.mark.parametrize("seed", range(5))
def test_logreg_gradient_finite_differences(seed):
    rng = np.random.default_rng(seed)
    n, p, k = 12, 3, 4
    xb = _design(rng.normal(size=(n, p)))
    y = rng.integers(0, k, n)
    w = rng.normal(size=(k, p + 1))
    _, grad = logreg_objective(w, xb, y, 0.1)
    h = 1e-6
    num = np.zeros_like(w)
    for idx in np.ndindex(*w.shape):
        e = np.zeros_like(w)
        e[idx] = h
        num[idx] = (logreg_objective(w + e, xb, y, 0.1)[0]
                    - logreg_objective(w - e, xb, y, 0.1)[0]) / (2 * h)
    rel = np.abs(num - grad) / np.maximum(np.abs(grad), 1e-8)
    assert np.all((rel < 1e-5) | (np.abs(num - grad) < 1e-9))


@pytest.mark.parametrize("kind", ["knn", "logreg"])
def test_single_class_constant(kind):
    x = np.random.default_rng(0).normal(size=(20, 2))
    m = fit(ClassifierConfig(kind, n_neighbors=3), x, np.full(20, 4))
    assert np.all(predict(m, x + 5) == 4)


@pytest.mark.parametrize("kind", ["knn", "logreg", "random"])
def test_feature_mismatch(kind):
    x = np.random.default_rng(0).normal(size=(20, 2))
    m = fit(ClassifierConfig(kind, n_neighbors=3), x, np.arange(20) % 2)
    with pytest.raises(ValueError, match="feature-count mismatch"):
        predict(m, np.zeros((3, 3)))


@pytest.mark.parametrize("kind", ["knn", "logreg", "random"])
def test_deterministic_and_serializable(kind):
    rng = np.random.default_rng(1)
    x = rng.normal(size=(30, 2))
    y = rng.integers(0, 3, 30)
    m = fit(ClassifierConfig(kind, n_neighbors=5), x, y, seed=4)
    again = TrainedClassifier.from_dict(m.to_dict())
    assert np.array_equal(predict(m, x), predict(m, x))
    assert np.array_equal(predict(m, x), predict(again, x))
    assert np.all(np.isin(predict(m, x), np.unique(y)))


def test_noise_must_be_stripped():
    with pytest.raises(ValueError, match="noise"):
        fit(ClassifierConfig("knn", 1), np.zeros((3, 1)), [0, -1, 1])

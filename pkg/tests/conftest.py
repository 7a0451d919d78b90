import time

import pytest

from relval.classification import ClassifierConfig
from relval.clustering import ClustererConfig
from relval.data import CvGrid, make_blobs, train_test_split
from relval.selection import best_nclust_cv

ACCEPTANCE_LINES = []

BLOBS_SEED = 42
SPLIT_SEED = 42


@pytest.fixture(scope="session")
def blobs():
    """The 1000-sample, 2-feature, 5-center dataset and its stratified 70/30 split."""
    data = make_blobs(1000, 2, 5, cluster_std=1.0, seed=BLOBS_SEED, center_box=(-20, 20))
    _, train, test = train_test_split(data, 0.3, seed=SPLIT_SEED, stratifier=data.true_labels)
    return data, train, test


@pytest.fixture(scope="session")
def blobs_grid():
    return CvGrid(n_fold=2, n_rep=10, k_values=(2, 3, 4, 5, 6), n_rnd=10, base_seed=0)


@pytest.fixture(scope="session")
def blobs_selection(blobs, blobs_grid):
    """Single-worker selection on the blobs training set, with its wall-clock time."""
    _, train, _ = blobs
    t0 = time.perf_counter()
    result = best_nclust_cv(train, ClustererConfig("kmeans"), ClassifierConfig("knn", 15),
                            blobs_grid, workers=1)
    return result, time.perf_counter() - t0


@pytest.fixture
def acceptance():
    """Record one pass/fail line for the terminal summary."""

    def record(name, passed, detail=""):
        ACCEPTANCE_LINES.append((name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")

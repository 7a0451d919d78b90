"""Stability-based relative validation for choosing the number of clusters."""

__version__ = "0.1.0"

from .assignment import Permutation, hungarian_max_agreement, misclassification_distance, relabel
from .classification import ClassifierConfig
from .clustering import ClustererConfig, elbow_eps, fit_dbscan, fit_kmeans, fit_ward
from .data import CvGrid, Dataset, cv_folds, load_csv, make_blobs, standard_scale, train_test_split
from .selection import (EvaluationReport, StabilityResult, best_nclust_cv, best_nclust_cv_auto,
                        evaluate, evaluate_auto)
from .stability import StabilityCell, random_labels, stability_cell

__all__ = [
    "ClassifierConfig", "ClustererConfig", "CvGrid", "Dataset", "EvaluationReport",
    "Permutation", "StabilityCell", "StabilityResult", "best_nclust_cv", "best_nclust_cv_auto",
    "cv_folds", "elbow_eps", "evaluate", "evaluate_auto", "fit_dbscan", "fit_kmeans", "fit_ward",
    "hungarian_max_agreement", "load_csv", "make_blobs", "misclassification_distance",
    "random_labels", "relabel", "stability_cell", "standard_scale", "train_test_split",
]

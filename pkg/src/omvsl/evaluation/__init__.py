"""Evaluation harness: fusion, baselines, classifiers, metrics and synthetic data."""
from .baselines import pca_concat, pca_project, project_fuse
from .metrics import METRIC_DIRECTIONS, MetricsReport, accuracy, label_ranks, multilabel_metrics
from .mlknn import MLkNN, MLkNNModel, mlknn_fit, mlknn_predict
from .neighbors import knn1, nearest_indices
from .splits import Split, random_splits
from .synthetic import synth_multilabel, synth_multiview

__all__ = [
    "project_fuse", "pca_project", "pca_concat",
    "MetricsReport", "METRIC_DIRECTIONS", "multilabel_metrics", "label_ranks", "accuracy",
    "MLkNN", "MLkNNModel", "mlknn_fit", "mlknn_predict",
    "knn1", "nearest_indices",
    "Split", "random_splits",
    "synth_multiview", "synth_multilabel",
]

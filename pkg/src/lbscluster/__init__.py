"""Density-based clustering of a point set seen only through a budgeted kNN interface."""

from .oracle import NOISE, Budget, BudgetExhausted, Dataset, KnnOracle, load_dataset
from .dbscan_ref import DbscanParams, baseline_cluster, dbscan
from .cluster2d import HdbscanConfig, hdbscan
from .model import ClusterModel
from .metrics import scores

__all__ = [
    "NOISE", "Budget", "BudgetExhausted", "Dataset", "KnnOracle", "load_dataset",
    "DbscanParams", "baseline_cluster", "dbscan", "HdbscanConfig", "hdbscan",
    "ClusterModel", "scores",
]

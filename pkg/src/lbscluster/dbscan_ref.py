"""Full-access DBSCAN (the ground truth) and the sample-then-cluster baseline."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .oracle import NOISE, BudgetExhausted, Dataset, KnnOracle


@dataclass(frozen=True)
class DbscanParams:
    eps: float
    min_pts: int

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.min_pts < 1:
            raise ValueError("min_pts must be >= 1")


def _points(data) -> np.ndarray:
    return data.points if isinstance(data, Dataset) else np.asarray(data, dtype=float).reshape(-1, 2)


def is_core(dataset, i: int, params: DbscanParams) -> bool:
    """A point is core when at least min_pts points, itself included, lie within eps."""
    pts = _points(dataset)
    d = pts - pts[i]
    dist = np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1])
    return int(np.count_nonzero(dist <= params.eps)) >= params.min_pts


def _eps_pairs(pts: np.ndarray, eps: float) -> np.ndarray:
    tree = cKDTree(pts)
    pairs = tree.query_pairs(eps * (1 + 1e-9), output_type="ndarray")
    if len(pairs) == 0:
        return pairs.reshape(0, 2)
    d = pts[pairs[:, 0]] - pts[pairs[:, 1]]
    dist = np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1])
    return pairs[dist <= eps]


def dbscan(dataset, params: DbscanParams) -> np.ndarray:
    """Label every point with a cluster id in 0..h-1 or NOISE (-1).

    Clusters are numbered by their smallest core id.  A border point within
    eps of cores from several clusters joins the cluster of its lowest-id core.
    """
    pts = _points(dataset)
    n = len(pts)
    labels = np.full(n, NOISE, dtype=int)
    if n == 0:
        return labels
    pairs = _eps_pairs(pts, params.eps)
    counts = 1 + np.bincount(pairs.ravel(), minlength=n)
    core = counts >= params.min_pts
    cc = pairs[core[pairs[:, 0]] & core[pairs[:, 1]]]
    graph = coo_matrix((np.ones(len(cc)), (cc[:, 0], cc[:, 1])), shape=(n, n))
    _, comp = connected_components(graph, directed=False)

    relabel: dict[int, int] = {}
    for i in np.flatnonzero(core):
        cid = relabel.setdefault(int(comp[i]), len(relabel))
        labels[i] = cid

    # border points: lowest-id core neighbor wins
    best = np.full(n, n, dtype=np.int64)
    for u, v in ((pairs[:, 0], pairs[:, 1]), (pairs[:, 1], pairs[:, 0])):
        m = core[v] & ~core[u]
        np.minimum.at(best, u[m], v[m])
    border = best < n
    labels[border] = labels[best[border]]
    return labels


def save_labels(labels, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label"])
        for i, lab in enumerate(labels):
            w.writerow([i, int(lab)])


class BaselineModel:
    """Labels of a DBSCAN run over sampled points plus nearest-cluster assignment.

    Points that were sampled keep their own label.  Any other point takes the
    label of the nearest clustered sample if it lies within ``threshold``,
    otherwise it is noise.
    """

    def __init__(self, points: np.ndarray, labels: np.ndarray, threshold: float):
        self.points = np.asarray(points, dtype=float).reshape(-1, 2)
        self.labels = np.asarray(labels, dtype=int)
        self.threshold = float(threshold)
        self._all = cKDTree(self.points) if len(self.points) else None
        clustered = self.labels != NOISE
        self._clustered_labels = self.labels[clustered]
        self._clustered = cKDTree(self.points[clustered]) if clustered.any() else None

    @property
    def n_clusters(self) -> int:
        return len(set(self.labels.tolist()) - {NOISE})

    def assign_many(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        out = np.full(len(pts), NOISE, dtype=int)
        if self._all is None:
            return out
        d0, i0 = self._all.query(pts)
        if self._clustered is not None:
            d1, i1 = self._clustered.query(pts, distance_upper_bound=self.threshold)
            near = np.isfinite(d1)
            out[near] = self._clustered_labels[i1[near]]
        seen = d0 == 0
        out[seen] = self.labels[i0[seen]]
        return out

    def assign(self, p) -> int:
        return int(self.assign_many([p])[0])


def baseline_cluster(
    oracle: KnnOracle,
    params: DbscanParams,
    assign_threshold: Optional[float] = None,
    rng=None,
    bbox=None,
) -> BaselineModel:
    """Spend the whole budget on kNN queries at uniform random spots, then run DBSCAN.

    ``assign_threshold`` defaults to eps.
    """
    if oracle.budget.limit is None:
        raise ValueError("the sampling baseline needs a finite budget")
    rng = np.random.default_rng(rng)
    xmin, ymin, xmax, ymax = bbox if bbox is not None else oracle.dataset.bounds()
    while True:
        q = (rng.uniform(xmin, xmax), rng.uniform(ymin, ymax))
        try:
            oracle.query(q)
        except BudgetExhausted:
            break
    ids = np.sort(oracle.observed_ids())
    pts = oracle.dataset.points[ids]
    labels = dbscan(pts, params)
    threshold = params.eps if assign_threshold is None else assign_threshold
    return BaselineModel(pts, labels, threshold)

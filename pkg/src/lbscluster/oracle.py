"""Simulated location-based service: a budgeted top-k nearest neighbor interface.

The oracle is the only window the clustering algorithms get into the data.  It
answers exact kNN queries over an in-memory :class:`Dataset`, charges one unit
of budget per query and keeps a log of every point it has ever returned.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

NOISE = -1


class Point2D(NamedTuple):
    x: float
    y: float


class Neighbor(NamedTuple):
    id: int
    point: Point2D
    distance: float


class BudgetExhausted(RuntimeError):
    """Raised when a query is attempted with no budget left."""


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Immutable 2D point collection; point ``i`` has id ``i``."""

    points: np.ndarray
    truth_labels: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise DatasetError("points must have shape (n, 2)")
        if len(pts) == 0:
            raise DatasetError("dataset is empty")
        if not np.all(np.isfinite(pts)):
            raise DatasetError("points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.truth_labels is not None:
            labels = np.asarray(self.truth_labels, dtype=int)
            if labels.shape != (len(pts),):
                raise DatasetError("truth_labels must have one entry per point")
            labels.setflags(write=False)
            object.__setattr__(self, "truth_labels", labels)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def ids(self) -> np.ndarray:
        return np.arange(len(self.points))

    def point(self, i: int) -> Point2D:
        x, y = self.points[i]
        return Point2D(float(x), float(y))

    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax)"""
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])


def load_dataset(source: Union[str, bytes, IO], fmt: str = "csv") -> Dataset:
    """Parse rows of ``x,y`` or ``x,y,label`` (label -1 is noise).

    ``source`` may be a path, raw bytes or an open text/binary stream.  ``fmt``
    is ``"csv"`` or ``"tsv"``; for ``"tsv"`` any run of whitespace separates
    fields, which also covers the space separated Chameleon files.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw

    if fmt == "csv":
        rows = csv.reader(io.StringIO(text))
    elif fmt == "tsv":
        rows = (line.split() for line in text.splitlines())
    else:
        raise DatasetError(f"unknown format {fmt!r}")

    points, labels = [], []
    width = None
    for lineno, row in enumerate(rows, start=1):
        row = [f.strip() for f in row]
        if not row or all(f == "" for f in row) or row[0].startswith("#"):
            continue
        if len(row) not in (2, 3):
            raise DatasetError(f"row {lineno}: expected 2 or 3 fields, got {len(row)}")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise DatasetError(f"row {lineno}: inconsistent field count")
        try:
            x, y = float(row[0]), float(row[1])
            if len(row) == 3:
                labels.append(int(float(row[2])))
        except ValueError as exc:
            raise DatasetError(f"row {lineno}: {exc}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise DatasetError(f"row {lineno}: non-finite coordinate")
        points.append((x, y))

    if not points:
        raise DatasetError("dataset is empty")
    return Dataset(np.array(points), np.array(labels) if width == 3 else None)


def save_dataset(dataset: Dataset, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for i, (x, y) in enumerate(dataset.points):
            row = [repr(float(x)), repr(float(y))]
            if dataset.truth_labels is not None:
                row.append(int(dataset.truth_labels[i]))
            w.writerow(row)


@dataclass
class Budget:
    """Query counter.  ``limit=None`` means unlimited (run-to-termination)."""

    limit: Optional[int] = None
    used: int = 0

    def __post_init__(self):
        if self.limit is not None and self.limit < 0:
            raise ValueError("budget limit must be >= 0")

    @property
    def remaining(self) -> float:
        return math.inf if self.limit is None else self.limit - self.used

    def charge(self) -> None:
        if self.limit is not None and self.used >= self.limit:
            raise BudgetExhausted(f"query budget of {self.limit} exhausted")
        self.used += 1


@dataclass
class KnnAnswer:
    query: Point2D
    neighbors: list[Neighbor]
    k_requested: int

    @property
    def ids(self) -> list[int]:
        return [nb.id for nb in self.neighbors]

    @property
    def distances(self) -> list[float]:
        return [nb.distance for nb in self.neighbors]

    def kth_distance(self, rank: int) -> float:
        """Distance of the ``rank``-th neighbor (1-based)."""
        return self.neighbors[rank - 1].distance

    @property
    def complete(self) -> bool:
        """True when fewer points than requested exist, i.e. the answer holds every point."""
        return len(self.neighbors) < self.k_requested

    @property
    def radius(self) -> float:
        """Radius of the open disc around the query known to hold only returned points."""
        return math.inf if self.complete else self.neighbors[-1].distance


def _distances(points: np.ndarray, q) -> np.ndarray:
    d = points - np.asarray(q, dtype=float)
    return np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1])


def knn_query(dataset: Dataset, q, k: int, budget: Budget, tree: Optional[cKDTree] = None) -> KnnAnswer:
    """Exact k nearest neighbors of ``q``; equal distances are ordered by id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    budget.charge()
    n = len(dataset)
    q = Point2D(float(q[0]), float(q[1]))
    if k >= n:
        cand = np.arange(n)
    else:
        if tree is None:
            tree = cKDTree(dataset.points)
        dk, _ = tree.query(q, k=k)
        dk = float(np.atleast_1d(dk)[-1])
        # widen slightly so ties at the k-th distance are all considered
        cand = np.asarray(tree.query_ball_point(q, r=dk * (1 + 1e-9) + 1e-12), dtype=int)
    dist = _distances(dataset.points[cand], q)
    order = np.lexsort((cand, dist))[:k]
    neighbors = [
        Neighbor(int(cand[j]), dataset.point(int(cand[j])), float(dist[j])) for j in order
    ]
    return KnnAnswer(q, neighbors, k)


class KnnOracle:
    """Budgeted kNN interface over a dataset, with a log of observed points.

    ``k`` is fixed by the interface; :meth:`query` accepts a smaller k.
    Not thread-safe: the budget and the observation log are mutated per call.
    """

    def __init__(self, dataset: Dataset, k: int, budget: Union[Budget, int, None] = None):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.dataset = dataset
        self.k = k
        if not isinstance(budget, Budget):
            budget = Budget(budget)
        self.budget = budget
        self._tree = cKDTree(dataset.points)
        self._observed: dict[int, Point2D] = {}

    @property
    def queries_used(self) -> int:
        return self.budget.used

    def query(self, q, k: Optional[int] = None) -> KnnAnswer:
        k = self.k if k is None else k
        if k > self.k:
            raise ValueError(f"k={k} exceeds the interface limit {self.k}")
        ans = knn_query(self.dataset, q, k, self.budget, self._tree)
        for nb in ans.neighbors:
            self._observed.setdefault(nb.id, nb.point)
        return ans

    def observed_points(self) -> list[tuple[int, Point2D]]:
        return list(self._observed.items())

    def observed_ids(self) -> np.ndarray:
        return np.fromiter(self._observed.keys(), dtype=int, count=len(self._observed))

    def state(self) -> dict:
        return {
            "k": self.k,
            "budget_limit": self.budget.limit,
            "budget_used": self.budget.used,
            "observed": len(self._observed),
        }

    def state_json(self) -> str:
        return json.dumps(self.state(), sort_keys=True)

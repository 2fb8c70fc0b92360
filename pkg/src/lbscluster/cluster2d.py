"""2D clustering through an adaptive space-filling curve.

The 1D search runs over the leaves of an :class:`AdaptiveSfc`.  A probe at a
leaf whose center answer shows that ``min_pts`` points may fit inside the
leaf splits it and continues in one child, so large empty regions stay coarse
while dense regions get refined down to the floor size.  Dense ranges found
on the curve are fragments (mini-clusters) of the real 2D clusters; they are
merged by the l-distance between their observed points.
"""

from __future__ import annotations

import bisect
import contextlib
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .cluster1d import DENSE, SPARSE, UNKNOWN, Domain, hdbscan_1d
from .dbscan_ref import DbscanParams
from .model import ClusterModel
from .oracle import KnnAnswer, KnnOracle
from .sfc import AdaptiveSfc, Node, needs_split

CHILD_PICKS = ("densest", "random", "middle", "first", "last")


class AdaptiveDomain(Domain):
    """1D domain whose cells are the current leaves of an adaptive curve."""

    def __init__(self, oracle: KnnOracle, sfc: AdaptiveSfc, min_pts: int, rng=None,
                 refine_in_segments: bool = True):
        if min_pts > oracle.k:
            raise ValueError("min_pts must not exceed the oracle's k")
        self.oracle = oracle
        self.sfc = sfc
        self.min_pts = min_pts
        self.rng = np.random.default_rng(rng)
        self._empty: set[Node] = set()
        self._probed: set[Node] = set()
        self._obs_keys: list[int] = []
        self._obs_ids: list[int] = []
        self._seen: set[int] = set()
        self.refinements = 0
        self.refine_in_segments = refine_in_segments
        self.free_verdicts = True
        self._frozen = False

    @contextlib.contextmanager
    def layout_frozen(self):
        old = self._frozen
        self._frozen = not self.refine_in_segments
        try:
            yield
        finally:
            self._frozen = old

    def __len__(self) -> int:
        return len(self.sfc)

    def status(self, i: int) -> int:
        return self.sfc.leaves[i].status

    def set_status(self, i: int, status: int) -> None:
        self.sfc.leaves[i].status = status

    def is_empty(self, i: int) -> bool:
        return self.sfc.leaves[i] in self._empty

    def _observed_in(self, lo_key: int, hi_key: int) -> tuple[int, int]:
        return bisect.bisect_left(self._obs_keys, lo_key), bisect.bisect_left(self._obs_keys, hi_key)

    def is_occupied(self, i: int) -> bool:
        a, b = self._observed_in(*self.sfc.key_range(i))
        return b > a

    def was_probed(self, i: int) -> bool:
        return self.sfc.leaves[i] in self._probed

    def key(self, i: int):
        return self.sfc.leaves[i].key

    def index(self, key) -> int:
        return self.sfc.index_of_key(key)

    def unknown_cells(self, lo: int = 0, hi: Optional[int] = None) -> list[int]:
        leaves = self.sfc.leaves
        hi = len(leaves) - 1 if hi is None else hi
        return [i for i in range(lo, hi + 1) if leaves[i].status == UNKNOWN]

    def members(self, lo: int, hi: int) -> list[int]:
        a, _ = self._observed_in(*self.sfc.key_range(lo))
        _, b = self._observed_in(*self.sfc.key_range(hi))
        return sorted(self._obs_ids[a:b])

    # -- learning from answers --------------------------------------------

    def _record(self, ans: KnnAnswer) -> np.ndarray:
        pts = np.array([nb.point for nb in ans.neighbors], dtype=float).reshape(-1, 2)
        keys = self.sfc.point_keys(pts) if len(pts) else np.zeros(0, dtype=np.int64)
        for nb, key in zip(ans.neighbors, keys.tolist()):
            if nb.id in self._seen or not self.sfc.contains(nb.point):
                continue
            self._seen.add(nb.id)
            j = bisect.bisect_left(self._obs_keys, key)
            self._obs_keys.insert(j, key)
            self._obs_ids.insert(j, nb.id)
        return np.sort(keys)

    def _count(self, node: Node, sorted_keys: np.ndarray) -> int:
        lo = node.key
        hi = lo + self.sfc._span(node.level)
        return int(np.searchsorted(sorted_keys, hi) - np.searchsorted(sorted_keys, lo))

    def _cover(self, nodes, ans: KnnAnswer, sorted_keys: np.ndarray) -> None:
        """Exact counts are known for leaves strictly inside the answer's disc."""
        r = ans.radius
        for node in nodes:
            if not node.is_leaf or node.max_dist(ans.query) >= r:
                continue
            cnt = self._count(node, sorted_keys)
            if cnt == 0:
                self._empty.add(node)
            if node.status != UNKNOWN:
                continue
            if cnt < self.min_pts:
                node.status = SPARSE
            elif not self.sfc.can_refine(node):
                node.status = DENSE

    def _pick_child(self, kids: list[Node], pick: str, sorted_keys: np.ndarray) -> Node:
        if pick == "densest":
            counts = [self._count(k, sorted_keys) for k in kids]
            return kids[int(np.argmax(counts))]
        if pick == "random":
            pool = [k for k in kids if k.status == UNKNOWN] or kids
            return pool[self.rng.integers(len(pool))]
        if pick == "middle":
            return kids[(len(kids) - 1) // 2]
        if pick == "first":
            return kids[0]
        if pick == "last":
            return kids[-1]
        raise ValueError(f"unknown child pick {pick!r}")

    def _observed_count(self, node: Node) -> int:
        a, b = self._observed_in(node.key, node.key + self.sfc._span(node.level))
        return b - a

    def probe(self, i: int, pick: str = "densest") -> tuple[int, bool]:
        node = self.sfc.leaves[i]
        while True:
            if self.free_verdicts and node.status == UNKNOWN and \
                    self._observed_count(node) >= self.min_pts:
                # min_pts points already seen inside the leaf settle the split
                # test (all of them lie within the circumscribed radius) or, at
                # the floor, the density verdict
                if not self._frozen and self.sfc.can_refine(node):
                    self.sfc.refine(self.sfc.index_of(node))
                    self.refinements += 1
                    obs = np.asarray(self._obs_keys, dtype=np.int64)
                    child = self._pick_child(node.children, pick, obs)
                    if child.status != UNKNOWN:
                        return self.sfc.index_of(child), child.status == DENSE
                    node = child
                    continue
                node.status = DENSE
                return self.sfc.index_of(node), True
            ans = self.oracle.query(node.center)
            keys = self._record(ans)
            self._cover(self.sfc.leaves_inside_disc(ans.query, ans.radius), ans, keys)
            self._probed.add(node)
            if node.status == UNKNOWN and not self._frozen and self.sfc.can_refine(node) and \
                    needs_split(node, ans, self.min_pts, self.sfc.min_cell_size):
                self.sfc.refine(self.sfc.index_of(node))
                self.refinements += 1
                self._cover(node.children, ans, keys)
                child = self._pick_child(node.children, pick, keys)
                if child.status != UNKNOWN:
                    return self.sfc.index_of(child), child.status == DENSE
                node = child
                continue
            if node.status == UNKNOWN:
                # min_pts returned points inside the leaf prove it dense; above the
                # floor that only happens with a frozen layout, since otherwise
                # the split test would have fired
                node.status = DENSE if self._count(node, keys) >= self.min_pts else SPARSE
            return self.sfc.index_of(node), node.status == DENSE


@dataclass
class MiniCluster:
    lo: int
    hi: int
    lo_key: int
    hi_key: int
    members: np.ndarray
    points: np.ndarray
    provisional: bool = False


def l_distance(a, b, l: int) -> float:
    """Mean of the ``l`` smallest distances between a point of ``a`` and one of ``b``."""
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("l-distance needs observed points on both sides")
    if l < 1:
        raise ValueError("l must be >= 1")
    if len(a) > len(b):
        a, b = b, a
    m = min(l, len(b))
    # the l globally closest pairs are among each point's l nearest partners
    d, _ = cKDTree(b).query(a, k=m)
    d = np.sort(np.asarray(d).reshape(-1))
    return float(d[:min(l, len(a) * len(b))].mean())


def _bbox_gap(p: np.ndarray, q: np.ndarray) -> float:
    dx = max(q[:, 0].min() - p[:, 0].max(), p[:, 0].min() - q[:, 0].max(), 0.0)
    dy = max(q[:, 1].min() - p[:, 1].max(), p[:, 1].min() - q[:, 1].max(), 0.0)
    return math.hypot(dx, dy)


def merge_mini_clusters(minis, l: int, threshold: float) -> list[int]:
    """Final cluster id per mini-cluster: components of the l-distance < threshold graph.

    ``minis`` is a sequence of point arrays (or :class:`MiniCluster`).  Ids are
    numbered in order of each component's first mini-cluster.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    pts = [np.asarray(m.points if isinstance(m, MiniCluster) else m, dtype=float).reshape(-1, 2)
           for m in minis]
    n = len(pts)
    if n == 0:
        return []
    rows, cols = [], []
    for i in range(n):
        for j in range(i + 1, n):
            # every pair is at least the bbox gap apart
            if _bbox_gap(pts[i], pts[j]) >= threshold:
                continue
            if l_distance(pts[i], pts[j], l) < threshold:
                rows.append(i)
                cols.append(j)
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, comp = connected_components(graph, directed=False)
    relabel: dict[int, int] = {}
    return [relabel.setdefault(int(c), len(relabel)) for c in comp]


@dataclass(frozen=True)
class HdbscanConfig:
    curve: str = "hilbert"
    fanout: Optional[int] = None       # 4 for hilbert/z, 9 for peano
    min_cell_size: Optional[float] = None   # eps
    c: int = 3
    l: Optional[int] = None            # max(1, min_pts // 2)
    merge_threshold: Optional[float] = None  # 2 * eps
    # False keeps the leaf layout fixed while a segment is being grown
    refine_in_segments: bool = True

    def resolve(self, params: DbscanParams) -> "HdbscanConfig":
        return HdbscanConfig(
            curve=self.curve,
            fanout=self.fanout or (9 if self.curve == "peano" else 4),
            min_cell_size=self.min_cell_size or params.eps,
            c=self.c,
            l=self.l or max(1, params.min_pts // 2),
            merge_threshold=self.merge_threshold or 2 * params.eps,
            refine_in_segments=self.refine_in_segments,
        )


def hdbscan(oracle: KnnOracle, params: DbscanParams, config: Optional[HdbscanConfig] = None,
            rng=None, bbox=None) -> ClusterModel:
    """Cluster the data behind ``oracle`` until its budget runs out or nothing is unknown.

    ``bbox`` is the region of interest (defaults to the dataset bounds, which
    an LBS user is assumed to know).
    """
    cfg = (config or HdbscanConfig()).resolve(params)
    if params.min_pts > oracle.k:
        raise ValueError("min_pts must not exceed k")
    rng = np.random.default_rng(rng)
    bbox = bbox if bbox is not None else oracle.dataset.bounds()
    sfc = AdaptiveSfc.aligned(bbox, cfg.fanout, cfg.min_cell_size, cfg.curve)
    dom = AdaptiveDomain(oracle, sfc, params.min_pts, rng, cfg.refine_in_segments)
    q0 = oracle.queries_used
    segments = hdbscan_1d(dom, cfg.c, rng)

    pts_all = oracle.dataset.points
    minis = []
    for s in segments:
        ids = np.asarray(s.members, dtype=int)
        minis.append(MiniCluster(s.lo, s.hi, sfc.key_range(s.lo)[0], sfc.key_range(s.hi)[1],
                                 ids, pts_all[ids].reshape(-1, 2), s.provisional))
    # a segment without observed points cannot be merged or measured; drop it
    minis = [m for m in minis if len(m.members)]
    final = merge_mini_clusters(minis, cfg.l, cfg.merge_threshold)
    stats = {
        "queries": oracle.queries_used - q0,
        "h": len(minis),
        "h_prime": len(set(final)),
        "leaves": len(sfc),
        "provisional": sum(m.provisional for m in minis),
    }
    cfg_d = asdict(cfg)
    cfg_d.update(eps=params.eps, min_pts=params.min_pts, k=oracle.k)
    return ClusterModel(sfc, [(m.lo_key, m.hi_key) for m in minis], final, cfg_d, stats)

"""The query-free cluster-assignment function produced by the 2D driver."""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field

import numpy as np

from .oracle import NOISE
from .sfc import AdaptiveSfc


@dataclass
class ClusterModel:
    """Adaptive curve plus the curve-key ranges of every mini-cluster.

    ``ranges[j]`` is the half-open key interval covered by mini-cluster ``j``
    and ``final_ids[j]`` its cluster after merging.  Ranges are disjoint and
    sorted.  Assignment never touches an oracle.
    """

    sfc: AdaptiveSfc
    ranges: list[tuple[int, int]]
    final_ids: list[int]
    params: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.ranges) != len(self.final_ids):
            raise ValueError("one final id per range")
        order = sorted(range(len(self.ranges)), key=lambda j: self.ranges[j][0])
        self.ranges = [tuple(map(int, self.ranges[j])) for j in order]
        self.final_ids = [int(self.final_ids[j]) for j in order]
        for (_, hi), (lo, _) in zip(self.ranges, self.ranges[1:]):
            if lo < hi:
                raise ValueError("mini-cluster ranges overlap")
        self._starts = np.array([r[0] for r in self.ranges], dtype=np.int64)
        self._ends = np.array([r[1] for r in self.ranges], dtype=np.int64)
        self._ids = np.array(self.final_ids, dtype=int)

    @property
    def n_mini(self) -> int:
        return len(self.ranges)

    @property
    def n_clusters(self) -> int:
        return len(set(self.final_ids))

    def assign_many(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        out = np.full(len(pts), NOISE, dtype=int)
        if not self.ranges or len(pts) == 0:
            return out
        keys = self.sfc.point_keys(pts)
        j = np.searchsorted(self._starts, keys, side="right") - 1
        ok = j >= 0
        ok[ok] &= keys[ok] < self._ends[j[ok]]
        s = self.sfc
        ok &= ((pts[:, 0] >= s.x0) & (pts[:, 0] <= s.x0 + s.size)
               & (pts[:, 1] >= s.y0) & (pts[:, 1] <= s.y0 + s.size))
        out[ok] = self._ids[j[ok]]
        return out

    def assign(self, p) -> int:
        if not self.sfc.contains(p):
            return NOISE
        key = self.sfc.point_key(p)
        j = bisect.bisect_right(self._starts, key) - 1
        if j >= 0 and key < self.ranges[j][1]:
            return self.final_ids[j]
        return NOISE

    # -- persistence -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "sfc": self.sfc.to_dict(),
            "ranges": [[lo, hi] for lo, hi in self.ranges],
            "final_ids": list(self.final_ids),
            "params": self.params,
            "stats": self.stats,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ClusterModel":
        return cls(
            AdaptiveSfc.from_dict(d["sfc"]),
            [tuple(r) for r in d["ranges"]],
            list(d["final_ids"]),
            dict(d.get("params", {})),
            dict(d.get("stats", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "ClusterModel":
        return cls.from_dict(json.loads(text))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path: str) -> "ClusterModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())

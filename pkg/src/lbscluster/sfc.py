"""Space-filling curves on square grids and the adaptive quadtree curve built on them.

Static curves map a cell ``(col, row)`` of a ``side**order`` grid to its
position along the curve.  All three curves share a prefix property: the
index of a cell at ``order + 1`` divided by ``side**2`` is the index of its
parent cell at ``order``.  The adaptive curve relies on it: a leaf at any
depth is ordered by its curve index scaled to a common finest order, so
refining a leaf never disturbs the order of the others.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

CURVES = ("hilbert", "z", "peano")

# Finest order a leaf key may address; keys must fit in int64.
MAX_ORDER = {"hilbert": 30, "z": 30, "peano": 19}


def curve_side(curve: str) -> int:
    if curve not in CURVES:
        raise ValueError(f"unknown curve {curve!r}; expected one of {CURVES}")
    return 3 if curve == "peano" else 2


def _check_cell(curve, col, row, order):
    n = curve_side(curve) ** order
    if order < 0 or not (0 <= col < n and 0 <= row < n):
        raise ValueError(f"cell ({col}, {row}) outside a {n}x{n} grid")


def curve_index(curve: str, col: int, row: int, order: int) -> int:
    _check_cell(curve, col, row, order)
    if curve == "z":
        d = 0
        for b in range(order):
            d |= ((col >> b) & 1) << (2 * b) | ((row >> b) & 1) << (2 * b + 1)
        return d
    if curve == "hilbert":
        n = 1 << order
        x, y, d = col, row, 0
        s = n >> 1
        while s:
            rx = 1 if x & s else 0
            ry = 1 if y & s else 0
            d += s * s * ((3 * rx) ^ ry)
            if ry == 0:
                if rx == 1:
                    x, y = n - 1 - x, n - 1 - y
                x, y = y, x
            s >>= 1
        return d
    # peano: serpentine 3x3 blocks, each reflected to keep the path continuous
    d, fx, fy = 0, False, False
    p = 3 ** (order - 1) if order else 0
    while p:
        xd, yd = (col // p) % 3, (row // p) % 3
        if fx:
            xd = 2 - xd
        if fy:
            yd = 2 - yd
        d = d * 9 + 3 * xd + (yd if xd % 2 == 0 else 2 - yd)
        fy ^= xd % 2 == 1
        fx ^= yd % 2 == 1
        p //= 3
    return d


def curve_cell(curve: str, index: int, order: int) -> tuple[int, int]:
    side = curve_side(curve)
    if order < 0 or not 0 <= index < side ** (2 * order):
        raise ValueError(f"index {index} outside a curve of order {order}")
    if curve == "z":
        x = y = 0
        for b in range(order):
            x |= ((index >> (2 * b)) & 1) << b
            y |= ((index >> (2 * b + 1)) & 1) << b
        return x, y
    if curve == "hilbert":
        x = y = 0
        t, s = index, 1
        n = 1 << order
        while s < n:
            rx = 1 & (t // 2)
            ry = 1 & (t ^ rx)
            if ry == 0:
                if rx == 1:
                    x, y = s - 1 - x, s - 1 - y
                x, y = y, x
            x += s * rx
            y += s * ry
            t //= 4
            s <<= 1
        return x, y
    digits = []
    for _ in range(order):
        index, r = divmod(index, 9)
        digits.append(r)
    x = y = 0
    fx = fy = False
    for pos in reversed(digits):
        xd = pos // 3
        yd = pos % 3 if xd % 2 == 0 else 2 - pos % 3
        x = 3 * x + (2 - xd if fx else xd)
        y = 3 * y + (2 - yd if fy else yd)
        fy ^= xd % 2 == 1
        fx ^= yd % 2 == 1
    return x, y


def curve_index_array(curve: str, cols, rows, order: int) -> np.ndarray:
    """Vectorised :func:`curve_index` for int64 arrays (no range checks)."""
    x = np.array(cols, dtype=np.int64)
    y = np.array(rows, dtype=np.int64)
    d = np.zeros_like(x)
    if curve == "z":
        for b in range(order):
            d |= ((x >> b) & 1) << (2 * b) | ((y >> b) & 1) << (2 * b + 1)
        return d
    if curve == "hilbert":
        n = np.int64(1) << order
        s = n >> 1
        while s:
            rx = (x & s) > 0
            ry = (y & s) > 0
            d += s * s * ((3 * rx.astype(np.int64)) ^ ry.astype(np.int64))
            flip = rx & ~ry
            x = np.where(flip, n - 1 - x, x)
            y = np.where(flip, n - 1 - y, y)
            x, y = np.where(ry, x, y), np.where(ry, y, x)
            s >>= 1
        return d
    curve_side(curve)
    fx = np.zeros(x.shape, dtype=bool)
    fy = np.zeros(x.shape, dtype=bool)
    p = 3 ** (order - 1) if order else 0
    while p:
        xd = (x // p) % 3
        yd = (y // p) % 3
        xd = np.where(fx, 2 - xd, xd)
        yd = np.where(fy, 2 - yd, yd)
        odd_x = xd % 2 == 1
        d = d * 9 + 3 * xd + np.where(odd_x, 2 - yd, yd)
        fy ^= odd_x
        fx ^= yd % 2 == 1
        p //= 3
    return d


# ---------------------------------------------------------------------------
# adaptive curve


class CellStatus:
    UNKNOWN = 0
    DENSE = 1
    SPARSE = 2


@dataclass(eq=False)
class Node:
    level: int
    col: int
    row: int
    key: int
    x0: float
    y0: float
    side: float
    children: Optional[list["Node"]] = None
    status: int = CellStatus.UNKNOWN

    @property
    def is_leaf(self) -> bool:
        return self.children is None

    @property
    def center(self) -> tuple[float, float]:
        h = self.side / 2
        return self.x0 + h, self.y0 + h

    @property
    def area(self) -> float:
        return self.side * self.side

    def max_dist(self, q) -> float:
        """Distance from q to the farthest corner."""
        dx = max(abs(q[0] - self.x0), abs(q[0] - self.x0 - self.side))
        dy = max(abs(q[1] - self.y0), abs(q[1] - self.y0 - self.side))
        return math.hypot(dx, dy)

    def min_dist(self, q) -> float:
        dx = max(self.x0 - q[0], 0.0, q[0] - self.x0 - self.side)
        dy = max(self.y0 - q[1], 0.0, q[1] - self.y0 - self.side)
        return math.hypot(dx, dy)


@dataclass(frozen=True)
class Refinement:
    """Index translation produced by refining the leaf at ``index``."""

    index: int
    fanout: int

    def translate(self, i: int) -> range:
        """New indices of old index ``i`` (a single index unless ``i`` was refined)."""
        if i < self.index:
            return range(i, i + 1)
        if i == self.index:
            return range(i, i + self.fanout)
        return range(i + self.fanout - 1, i + self.fanout)


def needs_split(leaf: Node, answer, min_pts: int, min_cell_size: float) -> bool:
    """Refine when min_pts neighbors may sit in the leaf and the leaf is above the floor.

    Fewer than min_pts points fit in a ``c x c`` cell whenever the min_pts-th
    neighbor of its center lies beyond the circumscribed radius ``sqrt(2) c / 2``.
    """
    cx, cy = leaf.center
    if not (math.isclose(answer.query[0], cx, abs_tol=1e-9 * max(1.0, abs(cx)))
            and math.isclose(answer.query[1], cy, abs_tol=1e-9 * max(1.0, abs(cy)))):
        raise ValueError("answer was not issued at the leaf center")
    if len(answer.neighbors) < min_pts:
        return False
    if leaf.side <= min_cell_size * (1 + 1e-9):
        return False
    return answer.kth_distance(min_pts) <= math.sqrt(2) * leaf.side / 2


class AdaptiveSfc:
    """Quadtree whose leaves, read in curve order, form a growing 1D cell domain.

    The root is the square ``[x0, x0+size] x [y0, y0+size]``.  Every split
    replaces a leaf with ``fanout`` children, i.e. ``log_side(fanout)/2`` grid
    levels at once.  Cells are half-open, closed on the root's max edges.
    """

    def __init__(self, x0: float, y0: float, size: float, fanout: int = 4,
                 min_cell_size: float = 0.0, curve: str = "hilbert"):
        side = curve_side(curve)
        if not size > 0:
            raise ValueError("root region is degenerate")
        allowed = (9,) if curve == "peano" else (4, 16, 64)
        if fanout not in allowed:
            raise ValueError(f"fanout for {curve} must be one of {allowed}")
        self.curve = curve
        self.grid_side = side
        self.fanout = fanout
        self.step = round(math.log(fanout, side * side))
        self.min_cell_size = float(min_cell_size)
        self.x0, self.y0, self.size = float(x0), float(y0), float(size)
        self.max_order = MAX_ORDER[curve]
        self.root = Node(0, 0, 0, 0, self.x0, self.y0, self.size)
        self.leaves: list[Node] = [self.root]
        self.keys: list[int] = [0]
        self._key_array: Optional[np.ndarray] = None
        self.refine(0)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_bbox(cls, bbox, fanout=4, min_cell_size=0.0, curve="hilbert") -> "AdaptiveSfc":
        """Square root anchored at the bbox min corner, side = the larger extent."""
        xmin, ymin, xmax, ymax = bbox
        size = max(xmax - xmin, ymax - ymin)
        return cls(xmin, ymin, size, fanout, min_cell_size, curve)

    @classmethod
    def aligned(cls, bbox, fanout=4, min_cell_size=1.0, curve="hilbert") -> "AdaptiveSfc":
        """Root sized so that repeated splits land exactly on ``min_cell_size``.

        The root side is ``min_cell_size * r**j`` for the smallest ``j >= 1``
        covering the bbox, where ``r`` is the per-split shrink factor.
        """
        curve_side(curve)
        r = round(math.sqrt(fanout))
        xmin, ymin, xmax, ymax = bbox
        extent = max(xmax - xmin, ymax - ymin, min_cell_size)
        j = max(1, math.ceil(math.log(extent / min_cell_size, r) - 1e-9))
        size = min_cell_size * r ** j
        if size < extent:
            size *= r
        return cls(xmin, ymin, size, fanout, min_cell_size, curve)

    def _key(self, level: int, col: int, row: int) -> int:
        idx = curve_index(self.curve, col, row, level)
        return idx * self.grid_side ** (2 * (self.max_order - level))

    def _span(self, level: int) -> int:
        return self.grid_side ** (2 * (self.max_order - level))

    def can_refine(self, leaf: Node) -> bool:
        return leaf.side > self.min_cell_size * (1 + 1e-9) and leaf.level + self.step <= self.max_order

    def refine(self, index: int) -> Refinement:
        leaf = self.leaves[index]
        if not leaf.is_leaf:
            raise ValueError("not a leaf")
        if leaf is not self.root and not self.can_refine(leaf):
            raise ValueError("leaf is at the resolution floor")
        per_axis = self.grid_side ** self.step
        level = leaf.level + self.step
        side = leaf.side / per_axis
        kids = []
        for dc in range(per_axis):
            for dr in range(per_axis):
                col, row = leaf.col * per_axis + dc, leaf.row * per_axis + dr
                kids.append(Node(level, col, row, self._key(level, col, row),
                                 leaf.x0 + dc * side, leaf.y0 + dr * side, side))
        kids.sort(key=lambda n: n.key)
        leaf.children = kids
        self.leaves[index:index + 1] = kids
        self.keys[index:index + 1] = [k.key for k in kids]
        self._key_array = None
        return Refinement(index, self.fanout)

    # -- queries ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self.leaves)

    def index_of(self, node: Node) -> int:
        i = bisect.bisect_left(self.keys, node.key)
        if i >= len(self.leaves) or self.leaves[i] is not node:
            raise ValueError("node is not a current leaf")
        return i

    def index_of_key(self, key: int) -> int:
        """Index of the leaf covering curve key ``key``."""
        return bisect.bisect_right(self.keys, key) - 1

    def leaf_center(self, i: int) -> tuple[float, float]:
        return self.leaves[i].center

    def leaf_side(self, i: int) -> float:
        return self.leaves[i].side

    def contains(self, p) -> bool:
        return (self.x0 <= p[0] <= self.x0 + self.size) and (self.y0 <= p[1] <= self.y0 + self.size)

    def point_keys(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        n = self.grid_side ** self.max_order
        u = (pts - (self.x0, self.y0)) / self.size * n
        cells = np.clip(np.floor(u), 0, n - 1).astype(np.int64)
        return curve_index_array(self.curve, cells[:, 0], cells[:, 1], self.max_order)

    def point_key(self, p) -> int:
        """Scalar :meth:`point_keys`; much cheaper for a single point."""
        n = self.grid_side ** self.max_order
        col = min(max(math.floor((p[0] - self.x0) / self.size * n), 0), n - 1)
        row = min(max(math.floor((p[1] - self.y0) / self.size * n), 0), n - 1)
        return curve_index(self.curve, col, row, self.max_order)

    def to_1d(self, p) -> int:
        if not self.contains(p):
            raise ValueError(f"point {tuple(p)} outside the curve's root region")
        return self.index_of_key(self.point_key(p))

    def to_1d_many(self, pts) -> np.ndarray:
        """Leaf index per point; -1 for points outside the root region."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        if self._key_array is None:
            self._key_array = np.array(self.keys, dtype=np.int64)
        out = np.searchsorted(self._key_array, self.point_keys(pts), side="right") - 1
        inside = ((pts[:, 0] >= self.x0) & (pts[:, 0] <= self.x0 + self.size)
                  & (pts[:, 1] >= self.y0) & (pts[:, 1] <= self.y0 + self.size))
        out[~inside] = -1
        return out

    def key_range(self, i: int) -> tuple[int, int]:
        """Half-open curve-key interval covered by leaf ``i``."""
        leaf = self.leaves[i]
        return leaf.key, leaf.key + self._span(leaf.level)

    def leaves_inside_disc(self, q, r: float) -> Iterator[Node]:
        """Leaves whose closed square lies strictly inside the open disc (q, r)."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.min_dist(q) >= r:
                continue
            if node.max_dist(q) < r:
                if node.is_leaf:
                    yield node
                else:
                    stack.extend(self._iter_leaves(node))
                continue
            if not node.is_leaf:
                stack.extend(node.children)

    @staticmethod
    def _iter_leaves(node: Node) -> list[Node]:
        out, stack = [], [node]
        while stack:
            n = stack.pop()
            if n.is_leaf:
                out.append(n)
            else:
                stack.extend(n.children)
        return out

    # -- persistence -----------------------------------------------------

    def to_dict(self) -> dict:
        tree = []
        stack = [self.root]
        while stack:
            n = stack.pop()
            if n.is_leaf:
                tree.append(int(n.status))
            else:
                tree.append(-1)
                stack.extend(reversed(n.children))
        return {
            "root": [self.x0, self.y0, self.size],
            "curve": self.curve,
            "fanout": self.fanout,
            "min_cell_size": self.min_cell_size,
            "tree": tree,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdaptiveSfc":
        x0, y0, size = d["root"]
        sfc = cls(x0, y0, size, d["fanout"], d["min_cell_size"], d["curve"])
        tree = d["tree"]
        if not tree or tree[0] != -1:
            raise ValueError("tree must start with the (internal) root")
        # rebuild in preorder; leaf indices grow left to right as we go
        pos = 1
        leaf_idx = 0

        def build(i_leaf: int) -> int:
            nonlocal pos
            code = tree[pos]
            pos += 1
            if code == -1:
                sfc.refine(i_leaf)
                for _ in range(sfc.fanout):
                    i_leaf = build(i_leaf)
                return i_leaf
            sfc.leaves[i_leaf].status = code
            return i_leaf + 1

        for _ in range(sfc.fanout):
            leaf_idx = build(leaf_idx)
        if pos != len(tree):
            raise ValueError("trailing nodes in serialized tree")
        return sfc

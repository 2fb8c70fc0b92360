"""Dense-segment discovery over a 1D cell domain using only kNN probes.

The algorithm works on any *domain*: an ordered row of cells that can be
probed (one or more kNN queries at a cell center) and that remembers what it
learned about each cell.  :class:`LineDomain` is the native 1D domain used
in tests; the 2D driver supplies a domain backed by an adaptive curve, whose
cells may be split while a probe runs.  Because of that, the search code
holds on to *cell keys* (stable handles of cells whose status is known) and
converts them to indices only when it needs arithmetic.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .oracle import BudgetExhausted, KnnAnswer, KnnOracle
from .sfc import CellStatus

UNKNOWN, DENSE, SPARSE = CellStatus.UNKNOWN, CellStatus.DENSE, CellStatus.SPARSE

_LEFT = "left-edge"
_RIGHT = "right-edge"


class FoundSparse(NamedTuple):
    cell: int


@dataclass
class DenseSegment:
    lo: int
    hi: int
    provisional: bool = False
    members: tuple = ()

    def __len__(self) -> int:
        return self.hi - self.lo + 1


class Domain:
    """Interface the search code needs from a cell domain.

    Subclasses implement the storage; ``probe`` must issue at least one query
    and return ``(index, dense)`` where ``index`` is the cell the verdict is
    about (it differs from the argument only if the cell was split).
    """

    def __len__(self) -> int:
        raise NotImplementedError

    def status(self, i: int) -> int:
        raise NotImplementedError

    def set_status(self, i: int, status: int) -> None:
        raise NotImplementedError

    def is_empty(self, i: int) -> bool:
        raise NotImplementedError

    def is_occupied(self, i: int) -> bool:
        raise NotImplementedError

    def was_probed(self, i: int) -> bool:
        raise NotImplementedError

    def probe(self, i: int, pick: str = "densest") -> tuple[int, bool]:
        raise NotImplementedError

    def key(self, i: int):
        return i

    def index(self, key) -> int:
        return key

    def members(self, lo: int, hi: int) -> list[int]:
        return []

    def unknown_cells(self, lo: int = 0, hi: Optional[int] = None) -> list[int]:
        hi = len(self) - 1 if hi is None else hi
        return [i for i in range(lo, hi + 1) if self.status(i) == UNKNOWN]

    def layout_frozen(self):
        """Context in which probes must not change the cell layout."""
        return contextlib.nullcontext()


# -- helpers over virtual edges ----------------------------------------------


def _key(dom: Domain, i: int):
    if i < 0:
        return _LEFT
    if i >= len(dom):
        return _RIGHT
    return dom.key(i)


def _idx(dom: Domain, key) -> int:
    if key == _LEFT:
        return -1
    if key == _RIGHT:
        return len(dom)
    return dom.index(key)


def _status(dom: Domain, i: int) -> int:
    if i < 0 or i >= len(dom):
        return SPARSE
    return dom.status(i)


def _empty(dom: Domain, i: int) -> bool:
    if i < 0 or i >= len(dom):
        return True
    return dom.is_empty(i)


def nearest_sparse(dom: Domain, i: int, direction: int) -> int:
    """Closest known-sparse cell strictly beyond ``i`` (virtual edge if none)."""
    j = i + direction
    while 0 <= j < len(dom) and dom.status(j) != SPARSE:
        j += direction
    return j


# -- probes ------------------------------------------------------------------


def probe_density(dom: Domain, cell: int, pick: str = "densest") -> tuple[int, bool]:
    """Query the cell center; returns the (possibly moved) cell and its verdict."""
    return dom.probe(cell, pick)


def exponential_search(dom: Domain, a: int, b: int) -> Optional[int]:
    """First cell after ``a`` (towards ``b``, inclusive) that may hold a point.

    Probes at ``a + l``, ``a + 3l``, ``a + 7l``, ... where ``l`` is the empty
    span proven by the first answer; a jump that leaves a gap between the known
    empty run and the probe falls back to probing the next unresolved cell.
    Returns None when every cell of the range is proven empty.
    """
    d = 1 if b > a else -1
    ka, kb = _key(dom, a), _key(dom, b)
    ell = None
    i = 1
    pick = "first" if d > 0 else "last"
    while True:
        a, b = _idx(dom, ka), _idx(dom, kb)
        e = a
        while e != b and _empty(dom, e + d):
            e += d
        if e == b:
            return None
        nxt = e + d
        if nxt < 0 or nxt >= len(dom):
            return None
        if dom.is_occupied(nxt) or dom.was_probed(nxt) or dom.status(nxt) == DENSE:
            return nxt
        p = nxt
        if ell is not None:
            jump = a + d * ell * (2 ** i - 1)
            i += 1
            if (jump - e) * d > 1 and (b - jump) * d >= 0 and dom.status(jump) == UNKNOWN \
                    and not dom.was_probed(jump):
                p = jump
        dom.probe(p, pick)
        if ell is None:
            a = _idx(dom, ka)
            e = a
            while e != _idx(dom, kb) and _empty(dom, e + d):
                e += d
            ell = max(1, abs(e - a))


def _tighten(dom: Domain, ko, ki, d: int) -> tuple[int, int]:
    """Move inner outward over contiguous known-dense cells, outer to the nearest sparse."""
    o, i = _idx(dom, ko), _idx(dom, ki)
    while i - d != o and _status(dom, i - d) == DENSE:
        i -= d
    j = i - d
    while j != o and _status(dom, j) != SPARSE:
        j -= d
    return j, i


def boundary_search(dom: Domain, outer: int, inner: int) -> int:
    """Dense cell between ``outer`` (sparse, exclusive) and ``inner`` (dense) whose
    outer-side neighbor is sparse.

    Works for either direction.  Starts by galloping from ``inner`` towards
    ``outer`` (offsets 1, 3, 7, ...) to get a sparse anchor close to inner's
    run, skips empty space with :func:`exponential_search`, then bisects.
    """
    d = 1 if inner > outer else -1
    ko, ki = _key(dom, outer), _key(dom, inner)
    pick_mid = "middle"

    # gallop away from inner
    start = ki
    s = 1
    while True:
        o, i = _tighten(dom, ko, ki, d)
        ko, ki = _key(dom, o), _key(dom, i)
        if abs(i - o) == 1:
            return i
        p = _idx(dom, start) - d * (2 ** s - 1)
        if (p - o) * d <= 0:
            break
        s += 1
        if (i - p) * d <= 0:
            continue
        if dom.status(p) == DENSE:
            ki = _key(dom, p)
            continue
        # a split leaf continues in the child next to the dense run
        j, dense = dom.probe(p, "last" if d > 0 else "first")
        if dense:
            ki = _key(dom, j)
        else:
            ko = _key(dom, j)
            break

    # skip empty cells next to the sparse anchor, then test the first occupied one
    o, i = _tighten(dom, ko, ki, d)
    ko, ki = _key(dom, o), _key(dom, i)
    if abs(i - o) == 1:
        return i
    f = exponential_search(dom, o, i)
    if f is not None:
        kf = _key(dom, f)
        o, i = _tighten(dom, ko, ki, d)
        ko, ki = _key(dom, o), _key(dom, i)
        f = _idx(dom, kf)
        if abs(i - o) > 1 and (f - o) * d > 0 and (i - f) * d > 0 and dom.status(f) == UNKNOWN:
            j, dense = dom.probe(f, "first" if d > 0 else "last")
            if dense:
                ki = _key(dom, j)
            else:
                ko = _key(dom, j)

    # bisect what is left
    while True:
        o, i = _tighten(dom, ko, ki, d)
        ko, ki = _key(dom, o), _key(dom, i)
        if abs(i - o) == 1:
            return i
        mid = (o + i) // 2
        if dom.status(mid) == DENSE:
            ki = _key(dom, mid)
            continue
        j, dense = dom.probe(mid, pick_mid)
        if dense:
            ki = _key(dom, j)
        else:
            ko = _key(dom, j)


def c_sample_test(dom: Domain, lo: int, hi: int, c: int, rng=None) -> Optional[FoundSparse]:
    """Probe up to ``c`` random unknown cells of ``[lo, hi]``.

    Returns None when every sample came back dense, else ``FoundSparse``
    (a cell already known to be sparse short-circuits without a query).
    """
    if c < 1:
        raise ValueError("c must be >= 1")
    rng = np.random.default_rng(rng)
    klo, khi = _key(dom, lo), _key(dom, hi)
    for _ in range(c + 1):
        lo, hi = _idx(dom, klo), _idx(dom, khi)
        statuses = [dom.status(j) for j in range(lo, hi + 1)]
        for off, st in enumerate(statuses):
            if st == SPARSE:
                return FoundSparse(lo + off)
        if _ == c:
            break
        cand = [lo + off for off, st in enumerate(statuses) if st == UNKNOWN]
        if not cand:
            break
        j, dense = dom.probe(cand[rng.integers(len(cand))], "random")
        if not dense:
            return FoundSparse(j)
    return None


# -- driver --------------------------------------------------------------------


def _grow_segment(dom: Domain, kq, c: int, rng, state: dict) -> None:
    while True:
        q = _idx(dom, kq)
        lo = boundary_search(dom, nearest_sparse(dom, q, -1), q)
        state["lo"] = _key(dom, lo)
        q = _idx(dom, kq)
        hi = boundary_search(dom, nearest_sparse(dom, q, +1), q)
        state["hi"] = _key(dom, hi)
        lo = _idx(dom, state["lo"])
        sparse = c_sample_test(dom, lo, hi, c, rng)
        if sparse is None:
            break
        state["lo"] = state["hi"] = kq
    lo, hi = _idx(dom, state["lo"]), _idx(dom, state["hi"])
    for j in range(lo, hi + 1):
        if dom.status(j) == UNKNOWN:
            dom.set_status(j, DENSE)


def _orphan_dense(dom: Domain, found: list) -> Optional[int]:
    covered = np.zeros(len(dom), dtype=bool)
    for klo, khi, _ in found:
        covered[_idx(dom, klo):_idx(dom, khi) + 1] = True
    for i in np.flatnonzero(~covered):
        if dom.status(int(i)) == DENSE:
            return int(i)
    return None


def hdbscan_1d(dom: Domain, c: int = 3, rng=None) -> list[DenseSegment]:
    """Find maximal dense cell ranges until no cell is unknown or the budget runs out.

    Each round probes a random unknown cell; a dense hit is grown into a
    segment by boundary searches on both sides followed by a c-sample check
    of the interior (a failed check restarts the searches with what was
    learned).  A segment cut short by budget exhaustion is kept and flagged
    provisional.
    """
    rng = np.random.default_rng(rng)
    found: list[tuple] = []
    try:
        while True:
            # a dense cell learned as a side effect of another probe seeds a
            # segment for free
            q = _orphan_dense(dom, found)
            if q is None:
                unknown = dom.unknown_cells()
                if not unknown:
                    break
                q, dense = dom.probe(unknown[rng.integers(len(unknown))], "densest")
                if not dense:
                    continue
            state = {"lo": dom.key(q), "hi": dom.key(q)}
            try:
                with dom.layout_frozen():
                    _grow_segment(dom, dom.key(q), c, rng, state)
            except BudgetExhausted:
                found.append((state["lo"], state["hi"], True))
                raise
            found.append((state["lo"], state["hi"], False))
    except BudgetExhausted:
        pass

    segments = []
    for klo, khi, provisional in found:
        lo, hi = _idx(dom, klo), _idx(dom, khi)
        segments.append(DenseSegment(lo, hi, provisional, tuple(dom.members(lo, hi))))
    segments.sort(key=lambda s: s.lo)
    return segments


# -- native 1D domain ------------------------------------------------------------


class LineDomain(Domain):
    """Cells ``[x0 + i*width, x0 + (i+1)*width)`` along the x axis.

    Points are served by a regular 2D :class:`KnnOracle` whose points all
    have y = 0.  Every answer resolves the probed cell and any cell lying
    strictly inside the answer's ball, where the exact count is known.
    """

    def __init__(self, oracle: KnnOracle, x0: float, width: float, n_cells: int, min_pts: int):
        if min_pts > oracle.k:
            raise ValueError("min_pts must not exceed the oracle's k")
        self.oracle = oracle
        self.x0 = float(x0)
        self.width = float(width)
        self.n = int(n_cells)
        self.min_pts = min_pts
        self._status = np.zeros(self.n, dtype=np.int8)
        self._empty = np.zeros(self.n, dtype=bool)
        self._occupied = np.zeros(self.n, dtype=bool)
        self._probed = np.zeros(self.n, dtype=bool)
        self._member_cells: dict[int, int] = {}
        self.queries = 0

    def __len__(self) -> int:
        return self.n

    def cell_of(self, x: float) -> int:
        return int(np.floor((x - self.x0) / self.width))

    def center(self, i: int) -> float:
        return self.x0 + (i + 0.5) * self.width

    def status(self, i: int) -> int:
        return int(self._status[i])

    def set_status(self, i: int, status: int) -> None:
        self._status[i] = status

    def is_empty(self, i: int) -> bool:
        return bool(self._empty[i])

    def is_occupied(self, i: int) -> bool:
        return bool(self._occupied[i])

    def was_probed(self, i: int) -> bool:
        return bool(self._probed[i])

    def unknown_cells(self, lo: int = 0, hi: Optional[int] = None) -> list[int]:
        hi = self.n - 1 if hi is None else hi
        return (np.flatnonzero(self._status[lo:hi + 1] == UNKNOWN) + lo).tolist()

    def members(self, lo: int, hi: int) -> list[int]:
        return sorted(pid for pid, cell in self._member_cells.items() if lo <= cell <= hi)

    def _absorb(self, ans: KnnAnswer) -> np.ndarray:
        counts = np.zeros(self.n, dtype=int)
        for nb in ans.neighbors:
            cell = self.cell_of(nb.point.x)
            if 0 <= cell < self.n:
                counts[cell] += 1
                self._occupied[cell] = True
                self._member_cells[nb.id] = cell
        r = ans.radius
        qx = ans.query.x
        lo_edge = self.x0 + np.arange(self.n) * self.width
        covered = (lo_edge > qx - r) & (lo_edge + self.width < qx + r)
        self._empty |= covered & (counts == 0)
        fresh = covered & (self._status == UNKNOWN)
        self._status[fresh & (counts >= self.min_pts)] = DENSE
        self._status[fresh & (counts < self.min_pts)] = SPARSE
        return counts

    def probe(self, i: int, pick: str = "densest") -> tuple[int, bool]:
        ans = self.oracle.query((self.center(i), 0.0))
        self.queries += 1
        counts = self._absorb(ans)
        self._probed[i] = True
        dense = counts[i] >= self.min_pts
        self._status[i] = DENSE if dense else SPARSE
        if counts[i] == 0:
            self._empty[i] = True
        return i, bool(dense)


def dense_cell_map(xs, x0: float, width: float, n_cells: int, min_pts: int) -> np.ndarray:
    """Brute-force per-cell density for points on a line."""
    cells = np.floor((np.asarray(xs, dtype=float) - x0) / width).astype(int)
    cells = cells[(cells >= 0) & (cells < n_cells)]
    return np.bincount(cells, minlength=n_cells) >= min_pts


def runs(mask) -> list[tuple[int, int]]:
    """Maximal runs of True as inclusive (lo, hi) pairs."""
    out, start = [], None
    for i, v in enumerate(mask):
        if v and start is None:
            start = i
        elif not v and start is not None:
            out.append((start, i - 1))
            start = None
    if start is not None:
        out.append((start, len(mask) - 1))
    return out

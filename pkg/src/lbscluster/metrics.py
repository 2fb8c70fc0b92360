"""Pair-counting agreement between two labelings.

Noise (label -1) is just another cluster here: every noise point of a labeling
sits in one shared "noise" group.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np


class PairCounts(NamedTuple):
    a: int  # same in P, same in C
    b: int  # different in both
    c: int  # same in P, different in C
    d: int  # same in C, different in P

    @property
    def total(self) -> int:
        return self.a + self.b + self.c + self.d


def _comb2(x: np.ndarray) -> int:
    x = x.astype(np.int64)
    return int((x * (x - 1) // 2).sum())


def pair_counts(P: Sequence[int], C: Sequence[int]) -> PairCounts:
    P = np.asarray(P)
    C = np.asarray(C)
    if P.shape != C.shape or P.ndim != 1:
        raise ValueError(f"labelings differ in length: {P.shape} vs {C.shape}")
    n = len(P)
    if n < 2:
        raise ValueError("need at least two points")
    _, p = np.unique(P, return_inverse=True)
    _, c = np.unique(C, return_inverse=True)
    ncols = int(c.max()) + 1
    table = np.bincount(p * ncols + c, minlength=(int(p.max()) + 1) * ncols)
    a = _comb2(table)
    same_p = _comb2(np.bincount(p))
    same_c = _comb2(np.bincount(c))
    total = n * (n - 1) // 2
    return PairCounts(a, total - same_p - same_c + a, same_p - a, same_c - a)


def rand_index(pc: PairCounts) -> float:
    return (pc.a + pc.b) / pc.total


def jaccard_index(pc: PairCounts) -> float:
    den = pc.a + pc.c + pc.d
    return pc.a / den if pc.a and den else 0.0


def fm_index(pc: PairCounts) -> float:
    if pc.a == 0:
        return 0.0
    return pc.a / math.sqrt((pc.a + pc.c) * (pc.a + pc.d))


def scores(P: Sequence[int], C: Sequence[int]) -> dict[str, float]:
    """Rand, Jaccard and Fowlkes-Mallows, rounded to 6 places for reports."""
    pc = pair_counts(P, C)
    return {
        "rand": round(rand_index(pc), 6),
        "jaccard": round(jaccard_index(pc), 6),
        "fm": round(fm_index(pc), 6),
    }

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lbscluster.metrics import PairCounts, fm_index, jaccard_index, pair_counts, rand_index, scores
from oracles import brute_pair_counts

labelings = st.integers(2, 30).flatmap(
    lambda n: st.tuples(st.lists(st.integers(-1, 4), min_size=n, max_size=n),
                        st.lists(st.integers(-1, 4), min_size=n, max_size=n)))


def test_worked_example():
    pc = pair_counts([1, 1, 2, 2], [1, 1, 1, 2])
    assert pc == (1, 2, 1, 2)
    assert rand_index(pc) == 0.5
    assert jaccard_index(pc) == 0.25
    assert fm_index(pc) == pytest.approx(1 / math.sqrt(6), abs=1e-12)


def test_all_same_vs_all_distinct():
    pc = pair_counts([0, 0, 0], [0, 1, 2])
    assert pc == (0, 0, 3, 0)
    assert rand_index(pc) == 0.0
    assert jaccard_index(pc) == fm_index(pc) == 0.0


def test_identical_partitions():
    pc = pair_counts([3, 3, -1, 5], [3, 3, -1, 5])
    assert pc.c == pc.d == 0
    assert rand_index(pc) == jaccard_index(pc) == fm_index(pc) == 1.0


def test_noise_is_one_group():
    # two noise points count as co-clustered
    assert pair_counts([-1, -1], [-1, -1]).a == 1


def test_length_mismatch_and_tiny_input():
    with pytest.raises(ValueError):
        pair_counts([1, 2], [1])
    with pytest.raises(ValueError):
        pair_counts([1], [1])


def test_zero_denominator_convention():
    assert jaccard_index(PairCounts(0, 1, 0, 0)) == 0.0
    assert fm_index(PairCounts(0, 1, 0, 0)) == 0.0


@given(labelings)
def test_matches_quadratic_enumeration(pair):
    P, C = pair
    assert tuple(pair_counts(P, C)) == brute_pair_counts(P, C)


@given(labelings)
def test_properties(pair):
    P, C = pair
    pc, rev = pair_counts(P, C), pair_counts(C, P)
    n = len(P)
    assert pc.total == n * (n - 1) // 2
    assert (pc.c, pc.d) == (rev.d, rev.c)
    assert rand_index(pc) == rand_index(rev)
    if pc.a:
        assert 0 <= jaccard_index(pc) <= fm_index(pc) + 1e-15 <= 1 + 1e-15


def test_scores_rounded():
    s = scores([1, 1, 2, 2], [1, 1, 1, 2])
    assert s == {"rand": 0.5, "jaccard": 0.25, "fm": 0.408248}


def test_large_labelings_use_int64():
    P = np.zeros(200_000, dtype=int)
    assert pair_counts(P, P).a == 200_000 * 199_999 // 2

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lbscluster.dbscan_ref import DbscanParams, baseline_cluster, dbscan, is_core, save_labels
from lbscluster.metrics import pair_counts, rand_index
from lbscluster.oracle import NOISE, Dataset, KnnOracle
from oracles import brute_dbscan, brute_range_count, canonical


def test_params_validation():
    with pytest.raises(ValueError):
        DbscanParams(0, 3)
    with pytest.raises(ValueError):
        DbscanParams(1, 0)


def test_single_point_is_not_core():
    assert not is_core(np.zeros((1, 2)), 0, DbscanParams(1.0, 2))


def test_core_counts_itself():
    pts = np.array([[0, 0]] + [[0.5, 0]] * 3, dtype=float)
    assert is_core(pts, 0, DbscanParams(1.0, 4))
    assert not is_core(pts, 0, DbscanParams(1.0, 5))


def test_is_core_matches_range_count():
    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 10, size=(200, 2))
    p = DbscanParams(1.0, 5)
    for i in rng.integers(0, 200, 30):
        assert is_core(pts, int(i), p) == (brute_range_count(pts, int(i), 1.0) >= 5)


def test_two_separated_groups():
    g = np.c_[np.arange(5) * 0.5, np.zeros(5)]
    pts = np.vstack([g, g + (100, 0)])
    labels = dbscan(pts, DbscanParams(1.0, 5))
    assert labels.tolist() == [0] * 5 + [1] * 5


def test_sparse_points_are_noise():
    pts = np.c_[np.arange(10) * 5.0, np.zeros(10)]
    assert (dbscan(pts, DbscanParams(1.0, 2)) == NOISE).all()


def test_border_goes_to_lowest_id_core():
    # point 8 is within eps of a core of each cluster; cluster of core 0 wins
    left = [[-1.0 - 0.1 * i, 0] for i in range(4)]
    right = [[1.0 + 0.1 * i, 0] for i in range(4)]
    pts = np.array(left + right + [[0.0, 0.0]])
    labels = dbscan(pts, DbscanParams(1.0, 4))
    assert not is_core(pts, 8, DbscanParams(1.0, 4))
    assert labels[8] == labels[0] != labels[4]
    # swapping ids swaps the winner
    pts2 = np.array(right + left + [[0.0, 0.0]])
    labels2 = dbscan(pts2, DbscanParams(1.0, 4))
    assert labels2[8] == labels2[0]


def _mixture(rng, n):
    k = int(rng.integers(1, 4))
    centers = rng.uniform(0, 100, size=(k, 2))
    m = int(n * 0.8)
    blob = centers[rng.integers(0, k, m)] + rng.normal(0, 4, size=(m, 2))
    return np.vstack([blob, rng.uniform(0, 100, size=(n - m, 2))])


def test_mixture_matches_closure_oracle():
    rng = np.random.default_rng(11)
    pts = _mixture(rng, 500)
    got = dbscan(pts, DbscanParams(3.0, 6))
    assert got.tolist() == brute_dbscan(pts, 3.0, 6)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 120), st.floats(1.0, 8.0), st.integers(1, 8))
def test_random_instances_match_oracle(seed, n, eps, min_pts):
    pts = _mixture(np.random.default_rng(seed), n)
    got = dbscan(pts, DbscanParams(eps, min_pts))
    assert got.tolist() == brute_dbscan(pts, eps, min_pts)
    ids = sorted(set(got.tolist()) - {NOISE})
    assert ids == list(range(len(ids)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_labels_invariant_to_point_order(seed):
    rng = np.random.default_rng(seed)
    pts = _mixture(rng, 150)
    p = DbscanParams(4.0, 5)
    a = dbscan(pts, p)
    perm = rng.permutation(len(pts))
    b = dbscan(pts[perm], p)
    # core points keep their partition; only border tie-breaks may move
    core = np.array([is_core(pts, i, p) for i in range(len(pts))])
    pa, pb = a[perm][core[perm]], b[core[perm]]
    assert canonical(pa) == canonical(pb)


def test_baseline_zero_budget_is_all_noise():
    ds = Dataset(np.random.default_rng(0).uniform(0, 10, size=(50, 2)))
    model = baseline_cluster(KnnOracle(ds, 5, 0), DbscanParams(2.0, 3), rng=0)
    assert (model.assign_many(ds.points) == NOISE).all()


def test_baseline_full_sample_agrees_with_dbscan():
    rng = np.random.default_rng(5)
    ds = Dataset(_mixture(rng, 200))
    p = DbscanParams(4.0, 5)
    oracle = KnnOracle(ds, len(ds), 1)
    model = baseline_cluster(oracle, p, rng=0)
    assert len(oracle.observed_ids()) == len(ds)
    ref = dbscan(ds, p)
    got = model.assign_many(ds.points)
    assert rand_index(pair_counts(ref, got)) == 1.0


def test_baseline_respects_budget_and_needs_one():
    ds = Dataset(np.random.default_rng(0).uniform(0, 10, size=(50, 2)))
    oracle = KnnOracle(ds, 5, 7)
    baseline_cluster(oracle, DbscanParams(2.0, 3), rng=1)
    assert oracle.queries_used == 7
    with pytest.raises(ValueError):
        baseline_cluster(KnnOracle(ds, 5), DbscanParams(2.0, 3))


def test_baseline_threshold_assignment():
    from lbscluster.dbscan_ref import BaselineModel
    m = BaselineModel(np.array([[0, 0], [0.5, 0], [9, 9]]), np.array([0, 0, NOISE]), 1.0)
    assert m.assign((1.2, 0)) == 0
    assert m.assign((3, 0)) == NOISE
    assert m.assign((9, 9)) == NOISE   # a seen noise point stays noise
    assert m.n_clusters == 1


def test_save_labels(tmp_path):
    path = tmp_path / "l.csv"
    save_labels([0, -1], str(path))
    assert path.read_text() == "id,label\n0,0\n1,-1\n"

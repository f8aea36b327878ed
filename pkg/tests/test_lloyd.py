import numpy as np
import pytest

from streamkm.core import DistanceCounter, InvalidInputError, kmeans_error
from streamkm.lloyd import (SolverConfig, WeightedPointSet, batch_window_lloyd, kmpp_seed, lloyd,
                            weighted_lloyd)
from streamkm.rng import Xorshift64Star
from streamkm.streaming import BatchWindow


def test_fixed_point_takes_one_iteration():
    X = [[0, 0], [0, 2], [10, 0], [10, 2]]
    res = lloyd(X, [[0, 1], [10, 1]])
    np.testing.assert_allclose(res.centroids, [[0, 1], [10, 1]])
    assert res.iterations == 1
    assert kmeans_error(X, res.centroids) == 1


def test_converges_to_cluster_means():
    X = [[0, 0], [0, 2], [10, 0], [10, 2]]
    res = lloyd(X, [[1, 1], [9, 0]])
    np.testing.assert_allclose(res.centroids, [[0, 1], [10, 1]])
    assert list(res.labels) == [0, 0, 1, 1]


def test_trace_is_monotone(rs):
    X = rs.normal(size=(50, 2))
    trace = []
    lloyd(X, X[:3], counter=None, trace=trace)
    assert all(b <= a * (1 + 1e-12) for a, b in zip(trace, trace[1:]))


def test_distance_count_per_pass(rs):
    X = rs.normal(size=(40, 3))
    c = DistanceCounter()
    res = lloyd(X, X[:4], counter=c)
    assert c.count == 40 * 4 * (res.iterations + 1)


def test_iteration_cap():
    X = np.random.default_rng(0).normal(size=(300, 2))
    res = lloyd(X, X[:8], SolverConfig(max_iterations=1))
    assert res.iterations == 1


def test_empty_cluster_is_repaired():
    X = np.array([[0.0, 0], [1, 0], [10, 0]])
    res = lloyd(X, [[0.5, 0], [100, 0]])
    assert len(set(res.labels.tolist())) == 2


def test_weighted_unit_weights_match_plain(rs):
    X = rs.normal(size=(60, 2))
    a = lloyd(X, X[:3])
    b = weighted_lloyd(WeightedPointSet(X, np.ones(60)), X[:3])
    np.testing.assert_array_equal(a.centroids, b.centroids)
    assert a.iterations == b.iterations


def test_weighted_single_cluster():
    res = weighted_lloyd(WeightedPointSet([[0, 0], [4, 0]], [3, 1]), [[9, 9]])
    np.testing.assert_allclose(res.centroids, [[1, 0]])


def test_zero_weights_are_dropped():
    wps = WeightedPointSet([[0, 0], [1, 1], [2, 2]], [1, 0, 1])
    assert len(wps) == 2


def test_window_single_batch_matches_lloyd(rs):
    B = rs.normal(size=(80, 2))
    w = BatchWindow(0.3)
    w.push(B)
    a, b = lloyd(B, B[:4]), batch_window_lloyd(w, B[:4])
    np.testing.assert_allclose(a.centroids, b.centroids)


def test_window_rho_one_matches_union(rs):
    B1, B0 = rs.normal(size=(30, 2)), rs.normal(size=(30, 2)) + 3
    w = BatchWindow(1.0)
    w.push(B1)
    w.push(B0)
    a = lloyd(np.vstack([B0, B1]), B0[:3])
    b = batch_window_lloyd(w, B0[:3])
    np.testing.assert_allclose(a.centroids, b.centroids)


def test_window_weighted_mean():
    w = BatchWindow(0.5)
    w.push([[3.0, 0]])
    w.push([[0.0, 0]])
    res = batch_window_lloyd(w, [[7, 7]])
    np.testing.assert_allclose(res.centroids, [[1, 0]])


def test_known_labels_give_identical_run(rs):
    w = BatchWindow(0.6)
    for i in range(3):
        w.push(rs.normal(size=(50, 2)) + i)
    C = rs.normal(size=(4, 2))
    fresh = batch_window_lloyd(w, C)
    tail = np.concatenate(w.batches[1:])
    from streamkm.core import nearest
    lab, d2 = nearest(tail, C)
    c = DistanceCounter()
    cached = batch_window_lloyd(w, C, counter=c, known=(lab, d2))
    np.testing.assert_array_equal(fresh.centroids, cached.centroids)
    assert c.count == 50 * 4 + 150 * 4 * cached.iterations


def test_kmpp_exhaustion():
    X = np.array([[0.0, 0], [1, 0], [5, 5]])
    C = kmpp_seed(X, 3, Xorshift64Star(1))
    assert sorted(map(tuple, C)) == sorted(map(tuple, X))


def test_kmpp_duplicates():
    X = np.array([[0.0, 0], [0, 0], [100, 0]])
    for seed in range(20):
        C = kmpp_seed(X, 2, Xorshift64Star(seed))
        assert sorted(C[:, 0].tolist()) == [0.0, 100.0]


def test_kmpp_two_blobs():
    g = np.random.default_rng(5)
    X = np.vstack([g.normal(size=(500, 2)), g.normal(size=(500, 2)) + 50])
    hits = 0
    for seed in range(200):
        C = kmpp_seed(X, 2, Xorshift64Star(seed))
        hits += (C[:, 0] > 25).sum() == 1
    assert hits >= 190


def test_kmpp_rejects_large_k():
    with pytest.raises(InvalidInputError):
        kmpp_seed(np.zeros((2, 2)), 3, Xorshift64Star(0))

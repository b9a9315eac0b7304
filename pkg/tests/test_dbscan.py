import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from atelier.dbscan import (
    NOISE,
    ClusteringResult,
    ClusterParams,
    core_mask,
    dbscan,
    dbscan_labels,
    elbow_eps,
    elbow_index,
    kdistance_profile,
    region_query,
)
from atelier.embed import Embeddings
from oracles import kth_neighbor_distances, reference_dbscan


def test_params_defaults_and_validation():
    p = ClusterParams()
    assert p.eps == 0.9 and p.min_pts == 25 and p.min_cluster_size == 25
    assert ClusterParams(0.5, 10, 3).min_cluster_size == 3
    for bad in (0, -1, float("inf"), float("nan")):
        with pytest.raises(ValueError):
            ClusterParams(bad, 5)
    with pytest.raises(ValueError):
        ClusterParams(0.5, 0)
    with pytest.raises(ValueError):
        ClusterParams(0.5, 5, 0)


def test_region_query_examples():
    same = np.ones((7, 3))
    assert region_query(same, 0, 0.1).tolist() == list(range(7))
    apart = np.array([[0.0, 0.0], [2.0, 0.0]])
    assert region_query(apart, 0, 1.0).tolist() == [0]
    assert region_query(apart, 1, 1.0).tolist() == [1]
    # closed ball: a neighbor exactly eps away is included
    assert region_query(np.array([[0.0], [1.0]]), 0, 1.0).tolist() == [0, 1]
    with pytest.raises(IndexError):
        region_query(apart, 2, 1.0)


def test_empty_input():
    res = dbscan(Embeddings.empty(), ClusterParams(0.5, 25))
    assert res.clusters == () and res.noise == ()


def test_single_dense_blob():
    x = np.tile([[0.6, 0.8]], (25, 1))
    labels = dbscan_labels(x, ClusterParams(0.1, 25))
    assert labels.tolist() == [0] * 25


def _two_balls(eps=0.5, n=60, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, 8)) * (eps / 50)
    b = rng.standard_normal((n, 8)) * (eps / 50)
    b[:, 0] += 10 * eps
    return np.vstack([a, b])


def test_two_separated_balls():
    x = _two_balls()
    ids = tuple(f"f{i}" for i in range(len(x)))
    res = dbscan(Embeddings(ids, x), ClusterParams(0.5, 25))
    assert [len(c) for c in res.clusters] == [60, 60]
    assert res.noise == ()
    assert set(res.clusters[0]) == set(ids[:60])
    ref, _ = reference_dbscan(x.tolist(), 0.5, 25)
    assert dbscan_labels(x, ClusterParams(0.5, 25)).tolist() == ref


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        dbscan_labels(np.array([[0.0, np.nan]]), ClusterParams(1.0, 1))


def test_min_cluster_size_dissolves_small_clusters():
    rng = np.random.default_rng(4)
    big = rng.standard_normal((30, 2)) * 0.01
    small = rng.standard_normal((5, 2)) * 0.01 + 5
    x = np.vstack([small, big])
    raw = dbscan_labels(x, ClusterParams(0.2, 3, 1))
    assert len(set(raw.tolist())) == 2
    filtered = dbscan_labels(x, ClusterParams(0.2, 3, 10))
    assert filtered[:5].tolist() == [NOISE] * 5
    assert filtered[5:].tolist() == [0] * 30


def test_border_point_goes_to_first_cluster():
    # two dense runs of 4 and a bridge at 1.0 that is a border point of both
    x = np.array([[0.0], [0.1], [0.2], [0.3], [1.0], [1.7], [1.8], [1.9], [2.0]])
    params = ClusterParams(0.75, 4, 1)
    assert not core_mask(x, 0.75, 4)[4]
    assert dbscan_labels(x, params).tolist() == [0, 0, 0, 0, 0, 1, 1, 1, 1]
    assert dbscan_labels(x[::-1], params).tolist() == [0, 0, 0, 0, 0, 1, 1, 1, 1]


def test_result_invariants():
    rng = np.random.default_rng(9)
    x = np.vstack([rng.standard_normal((80, 2)) * 0.3 + c for c in ([0, 0], [4, 0], [0, 4])] +
                  [rng.uniform(-3, 7, (40, 2))])
    ids = tuple(f"f{i}" for i in range(len(x)))
    params = ClusterParams(0.4, 8, 12)
    res = dbscan(Embeddings(ids, x), params)
    assert sorted(res.ids) == sorted(ids)
    core = core_mask(x, 0.4, 8)
    pos = {f: i for i, f in enumerate(ids)}
    for members in res.clusters:
        assert len(members) >= 12
        assert any(core[pos[f]] for f in members)
    ref, _ = reference_dbscan(x.tolist(), 0.4, 8)
    ref_sizes = {}
    for lab in ref:
        ref_sizes[lab] = ref_sizes.get(lab, 0) + 1
    for f in res.noise:
        i = pos[f]
        assert (not core[i]) or ref_sizes[ref[i]] < 12 or ref[i] == -1


def test_from_labels_and_duplicates():
    res = ClusteringResult.from_labels(["a", "b", "c", "d"], [1, -1, 0, 1])
    assert res.clusters == (("c",), ("a", "d"))
    assert res.noise == ("b",)
    assert res.labels() == {"a": 1, "b": -1, "c": 0, "d": 1}
    with pytest.raises(ValueError):
        ClusteringResult((("a",), ("a",)), ())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 120), st.sampled_from([1, 2, 5]),
       st.floats(0.2, 1.5), st.integers(1, 8))
def test_matches_reference(seed, n, dim, eps, min_pts):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 3, (n, dim))
    ref, core = reference_dbscan(x.tolist(), eps, min_pts)
    for backend in ("brute", "tree"):
        got = dbscan_labels(x, ClusterParams(eps, min_pts, 1), backend=backend)
        assert got.tolist() == ref


def test_kdistance_examples():
    assert kdistance_profile(np.ones((5, 3)), 2).tolist() == [0.0] * 5
    # neighbors of 0, 1, 3 at k=1 are 1, 1, 2
    assert kdistance_profile(np.array([[0.0], [1.0], [3.0]]), 1).tolist() == [1.0, 1.0, 2.0]
    with pytest.raises(ValueError):
        kdistance_profile(np.ones((3, 2)), 3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 40), st.integers(1, 4))
def test_kdistance_matches_oracle(seed, n, dim):
    x = np.random.default_rng(seed).standard_normal((n, dim))
    k = 1 + seed % (n - 1)
    prof = kdistance_profile(x, k)
    assert np.all(np.diff(prof) >= 0)
    np.testing.assert_allclose(prof, kth_neighbor_distances(x.tolist(), k), rtol=0, atol=1e-12)


def test_elbow_index():
    # flat then a sharp rise: the bend is the last flat point
    y = np.array([1.0] * 9 + [10.0])
    assert elbow_index(y) == 8
    assert elbow_index([1.0, 1.0, 1.0]) == 2
    assert elbow_index([0.5]) == 0
    with pytest.raises(ValueError):
        elbow_index([])


def test_elbow_eps_rejects_duplicates():
    with pytest.raises(ValueError):
        elbow_eps(np.ones((10, 2)), 3)

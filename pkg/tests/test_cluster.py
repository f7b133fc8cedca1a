import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.cluster.hierarchy import linkage as scipy_linkage
from scipy.spatial.distance import squareform

from oracles import all_two_partitions, naive_agglomerate, partition_of
from semframe.cluster import (LINKAGES, METRICS, Dendrogram, DistanceMatrix, Merge, agglomerate, linkage_tree,
                              pairwise_distances, relabel_dense)
from semframe.errors import ConfigError
from semframe.features import assemble


class TestDistances:
    @pytest.mark.parametrize("metric", METRICS)
    def test_identity(self, metric):
        d = pairwise_distances(np.array([[0.3, -2.0, 5.0]] * 2), metric).d
        assert d[0, 1] == 0 and d[1, 0] == 0

    def test_manhattan(self):
        assert pairwise_distances(np.array([[0.0, 0.0], [1.0, 2.0]]), "manhattan").d[0, 1] == 3

    def test_euclidean(self):
        assert pairwise_distances(np.array([[0.0, 0.0], [3.0, 4.0]]), "euclidean").d[0, 1] == 5

    def test_cosine_orthogonal(self):
        assert pairwise_distances(np.array([[1.0, 0.0], [0.0, 1.0]]), "cosine").d[0, 1] == 1

    def test_cosine_zero_vector(self):
        d = pairwise_distances(np.array([[0.0, 0.0], [0.0, 1.0], [0.0, 0.0]]), "cosine").d
        assert d[0, 1] == 1.0 and d[0, 2] == 1.0

    def test_non_finite(self):
        with pytest.raises(ValueError):
            pairwise_distances(np.array([[np.nan, 0.0]]), "euclidean")

    def test_unknown_metric(self):
        with pytest.raises(ConfigError):
            pairwise_distances(np.zeros((2, 2)), "chebyshev")

    def test_carries_instance_ids(self):
        m = assemble([("v", lambda i: [float(len(i))])], ["a", "bb"])
        assert pairwise_distances(m, "euclidean").ids == ("a", "bb")

    @pytest.mark.parametrize("metric", METRICS)
    def test_matrix_invariants(self, metric):
        X = np.random.default_rng(1).normal(size=(9, 4))
        d = pairwise_distances(X, metric).d
        assert np.array_equal(d, d.T)
        assert np.all(np.diag(d) == 0) and np.all(d >= 0)

    @pytest.mark.parametrize("metric", ["euclidean", "manhattan"])
    def test_triangle_inequality(self, metric):
        X = np.random.default_rng(2).normal(size=(10, 3))
        d = pairwise_distances(X, metric).d
        for i, j, k in itertools.permutations(range(10), 3):
            assert d[i, k] <= d[i, j] + d[j, k] + 1e-12


def points_1d(xs, metric="euclidean"):
    return pairwise_distances(np.array(xs, dtype=float)[:, None], metric)


class TestAgglomerate:
    def test_k_equals_n(self):
        _, c = agglomerate(points_1d([0, 1, 5]), "average", 3)
        assert c == {0: 0, 1: 1, 2: 2}

    def test_k_one(self):
        tree, c = agglomerate(points_1d([0, 1, 5, 9]), "complete", 1)
        assert set(c.values()) == {0}
        assert len(tree.merges) == 3

    def test_single_linkage_two_groups(self):
        xs = [0, 1, 10, 11]
        dm = points_1d(xs)
        _, c = agglomerate(dm, "single", 2)
        # oracle: the 2-partition maximizing the smallest cross-cluster distance
        best = max(all_two_partitions(range(4)),
                   key=lambda p: min(dm.d[i, j] for i in p[0] for j in p[1]))
        assert partition_of(c) == set(best) == {frozenset({0, 1}), frozenset({2, 3})}

    def test_ward_needs_euclidean(self):
        with pytest.raises(ConfigError, match="ward requires euclidean"):
            agglomerate(points_1d([0, 1, 2], "manhattan"), "ward", 2)

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            agglomerate(points_1d([0, 1]), "single", 3)

    def test_unknown_linkage(self):
        with pytest.raises(ConfigError):
            agglomerate(points_1d([0, 1]), "centroid", 1)

    def test_single_point(self):
        tree, c = agglomerate(points_1d([4]), "ward", 1)
        assert c == {0: 0} and tree.merges == ()

    def test_tie_break(self):
        # all distances equal: merges go (0,1), then (2,3) ... in id order
        dm = DistanceMatrix(np.ones((4, 4)) - np.eye(4), "euclidean")
        tree = linkage_tree(dm, "single")
        assert [(m.left, m.right) for m in tree.merges] == [(0, 1), (2, 3), (4, 5)]
        tree = linkage_tree(dm, "average")
        assert [(m.left, m.right) for m in tree.merges] == [(0, 1), (2, 3), (4, 5)]

    def test_tie_break_prefers_smaller_min_id(self):
        d = np.array([[0, 2, 1, 9], [2, 0, 9, 1], [1, 9, 0, 9], [9, 1, 9, 0]], dtype=float)
        tree = linkage_tree(DistanceMatrix(d, "euclidean"), "single")
        assert (tree.merges[0].left, tree.merges[0].right) == (0, 2)
        assert (tree.merges[1].left, tree.merges[1].right) == (1, 3)

    def test_dendrogram_tsv(self):
        tree = linkage_tree(points_1d([0, 1, 10]), "single")
        lines = tree.to_tsv().splitlines()
        assert lines[0] == "merge_index\tleft\tright\theight\tsize"
        assert lines[1] == "0\t0\t1\t1.0\t2"
        assert lines[2] == "1\t2\t3\t9.0\t3"

    def test_labels_follow_instance_ids(self):
        m = assemble([("v", {"x": [0.0], "y": [10.0], "z": [0.5]}.__getitem__)], ["x", "y", "z"])
        _, c = agglomerate(pairwise_distances(m, "euclidean"), "average", 2)
        assert c == {"x": 0, "y": 1, "z": 0}

    def test_determinism(self):
        X = np.random.default_rng(5).normal(size=(30, 3))
        dm = pairwise_distances(X, "manhattan")
        assert linkage_tree(dm, "average") == linkage_tree(dm, "average")

    @pytest.mark.parametrize("linkage", LINKAGES)
    def test_heights_match_scipy(self, linkage):
        X = np.random.default_rng(11).normal(size=(25, 4))
        dm = pairwise_distances(X, "euclidean")
        tree = linkage_tree(dm, linkage)
        Z = scipy_linkage(squareform(dm.d, checks=False), method=linkage)
        np.testing.assert_allclose([m.height for m in tree.merges], Z[:, 2], rtol=1e-10)

    @pytest.mark.parametrize("linkage", ["single", "complete"])
    def test_monotone_heights(self, linkage):
        X = np.random.default_rng(3).normal(size=(40, 2))
        tree = linkage_tree(pairwise_distances(X, "manhattan"), linkage)
        assert tree.inversions() == []

    def test_inversions_detected(self):
        tree = Dendrogram(3, (Merge(0, 1, 2.0, 3, 2), Merge(2, 3, 1.5, 4, 3)))
        assert tree.inversions() == [1]

    @pytest.mark.parametrize("linkage", LINKAGES)
    def test_no_inversions_for_reducible_linkages(self, linkage):
        X = np.random.default_rng(8).normal(size=(30, 3))
        assert linkage_tree(pairwise_distances(X, "euclidean"), linkage).inversions() == []


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 10), st.sampled_from(LINKAGES), st.sampled_from(METRICS), st.data())
def test_matches_naive_reference(n, linkage, metric, data):
    if linkage == "ward":
        metric = "euclidean"
    seed = data.draw(st.integers(0, 2**32 - 1))
    X = np.random.default_rng(seed).normal(size=(n, 3))
    k = data.draw(st.integers(1, n))
    dm = pairwise_distances(X, metric)
    tree, c = agglomerate(dm, linkage, k)
    expected, heights = naive_agglomerate(dm.d.tolist(), linkage, k)
    assert partition_of(c) == expected
    np.testing.assert_allclose([m.height for m in tree.merges], heights, rtol=1e-9, atol=1e-12)


@given(st.integers(2, 12), st.data())
@settings(deadline=None)
def test_cut_is_a_partition_at_every_level(n, data):
    X = np.random.default_rng(data.draw(st.integers(0, 10**6))).normal(size=(n, 2))
    tree = linkage_tree(pairwise_distances(X, "euclidean"), "ward")
    prev = None
    for k in range(n, 0, -1):
        labels = tree.cut(k)
        assert len(labels) == n and set(labels) == set(range(k))
        part = partition_of(labels)
        if prev is not None:
            # each level only merges clusters of the level below
            assert all(any(p <= q for q in part) for p in prev)
        prev = part


class TestRelabel:
    def test_first_appearance(self):
        assert list(relabel_dense({"a": 7, "b": 7, "c": 2}).values()) == [0, 0, 1]

    def test_idempotent(self):
        c = {"a": 0, "b": 1, "c": 0}
        assert relabel_dense(c) == c

    def test_singletons(self):
        assert list(relabel_dense({i: 10 - i for i in range(5)}).values()) == [0, 1, 2, 3, 4]

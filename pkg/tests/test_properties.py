"""Hypothesis checks of the invariants each module promises."""
import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from graphkmeans.clustering import ClusterConfig, kmeans_elkan, kmeans_std
from graphkmeans.evaluation import cluster_error, silhouette_index
from graphkmeans.graphs import AttributedGraph, build_graph, embed, euclidean_distance, inverse_permutation, permute
from graphkmeans.matching import distance_exact
from graphkmeans.mean import iam_mean
from graphkmeans.synthetic import scalar_graphs
from oracles import relabel, scalar_silhouette

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
values = st.floats(-3, 3, allow_nan=False, width=32)


@st.composite
def graphs(draw, max_order=4, d_v=2, d_e=1):
    n = draw(st.integers(1, max_order))
    nodes = [[draw(values) for _ in range(d_v)] for _ in range(n)]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if draw(st.booleans()):
                edges.append((i, j, [draw(values) for _ in range(d_e)]))
    return build_graph(nodes, edges, d_e=d_e + 1)


@st.composite
def permuted(draw, max_order=4):
    g = draw(graphs(max_order))
    p = draw(st.permutations(range(g.order)))
    return g, list(p)


class TestGraphCore:
    @SETTINGS
    @given(permuted(5))
    def test_permute_inverse(self, gp):
        g, p = gp
        x = embed(g)
        np.testing.assert_array_equal(permute(permute(x, p), inverse_permutation(p)).data, x.data)

    @SETTINGS
    @given(permuted(5))
    def test_permute_keeps_symmetry_and_norm(self, gp):
        g, p = gp
        y = permute(embed(g), p)
        np.testing.assert_array_equal(y.grid, y.grid.transpose(1, 0, 2))
        assert np.linalg.norm(y.data) == pytest.approx(np.linalg.norm(embed(g).data), rel=1e-12)


class TestMatcher:
    @SETTINGS
    @given(graphs(), graphs())
    def test_symmetric_nonnegative(self, x, y):
        a, b = distance_exact(x, y).distance, distance_exact(y, x).distance
        assert a >= 0
        assert a == pytest.approx(b, rel=1e-9, abs=1e-9)

    @SETTINGS
    @given(permuted())
    def test_relabelled_copy(self, gp):
        g, p = gp
        assert distance_exact(g, relabel(g, p)).distance < 1e-9

    @SETTINGS
    @given(graphs(), graphs())
    def test_alignment_consistent(self, x, y):
        al = distance_exact(x, y)
        n = len(al.permutation)
        recomputed = euclidean_distance(embed(x, n), permute(embed(y, n), al.permutation))
        assert al.distance == pytest.approx(recomputed, rel=1e-12, abs=1e-12)

    @SETTINGS
    @given(graphs(3), graphs(3), graphs(3))
    def test_triangle_in_common_space(self, x, y, z):
        n = max(x.order, y.order, z.order)
        dxz = distance_exact(x, z, padding=n).distance
        assert dxz <= distance_exact(x, y, padding=n).distance + distance_exact(y, z, padding=n).distance + 1e-9

    @SETTINGS
    @given(graphs(3), graphs(3), st.integers(1, 3))
    def test_padding_non_increasing(self, x, y, extra):
        n = max(x.order, y.order)
        assert distance_exact(x, y, padding=n + extra).distance <= distance_exact(x, y, padding=n).distance + 1e-12


class TestMean:
    @SETTINGS
    @given(st.lists(st.lists(values, min_size=3, max_size=3), min_size=1, max_size=8), st.integers(0, 2**31))
    def test_single_node_iam_is_vector_mean(self, rows, seed):
        sample = [AttributedGraph.from_parts([r], d_e=0) for r in rows]
        mean = iam_mean(sample, seed=seed).mean
        np.testing.assert_allclose(mean.node_attrs[0], np.mean(np.array(rows, dtype=float), axis=0), atol=1e-12)

    @SETTINGS
    @given(st.lists(graphs(3), min_size=1, max_size=4), st.integers(0, 100))
    def test_iam_alignment_count(self, sample, seed):
        assert iam_mean(sample, seed=seed, compute_ssd=False).alignments_used == len(sample) - 1


class TestEvaluation:
    @SETTINGS
    @given(st.lists(st.tuples(values, st.integers(0, 3)), min_size=2, max_size=14))
    def test_silhouette_oracle_and_range(self, pairs):
        xs = [float(v) for v, _ in pairs]
        raw = [c for _, c in pairs]
        used = sorted(set(raw))
        if len(used) < 2:
            return
        labels = [used.index(c) for c in raw]
        D = np.abs(np.subtract.outer(xs, xs))
        s = silhouette_index(labels, distances=D)
        index, per_cluster, per_pattern = scalar_silhouette(xs, labels)
        assert s.per_pattern == pytest.approx(per_pattern, abs=1e-12)
        assert s.index == pytest.approx(index, abs=1e-12)
        assert all(-1 <= v <= 1 for v in s.per_pattern + s.per_cluster + (s.index,))

    @SETTINGS
    @given(st.lists(values, min_size=3, max_size=12), st.permutations(range(3)))
    def test_silhouette_relabel(self, xs, perm):
        labels = np.arange(len(xs)) % 3
        D = np.abs(np.subtract.outer(xs, xs))
        perm = np.array(perm)
        assert silhouette_index(labels, distances=D).index == pytest.approx(
            silhouette_index(perm[labels], distances=D).index, abs=1e-12)


class TestClustering:
    @settings(max_examples=15, deadline=None)
    @given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=4, max_size=14), st.integers(1, 3),
           st.integers(0, 50))
    def test_scalar_std_elkan(self, xs, k, seed):
        sample = scalar_graphs(xs)
        config = ClusterConfig(k=k, run_seed=seed)
        s, e = kmeans_std(sample, config), kmeans_elkan(sample, config)
        assert [h.assignment for h in s.history] == [h.assignment for h in e.history]
        assert e.objective == pytest.approx(s.objective, rel=1e-9, abs=1e-9)
        for res in (s, e):
            assert all(v >= 0 for v in res.objective_trace)
            kept = np.minimum.accumulate(res.objective_trace)
            assert res.objective == kept[-1]
            assert (res.membership.sum(axis=1) == 1).all()
            assert res.objective == pytest.approx(
                cluster_error(res.assignment, sample=sample, centroids=res.centroids), rel=1e-9, abs=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.sampled_from([0.0, 1.0, 2.0, 4.0]), min_size=4, max_size=12), st.integers(2, 4),
           st.integers(0, 50))
    def test_ties_resolve_like_std(self, xs, k, seed):
        sample = scalar_graphs(xs)
        config = ClusterConfig(k=k, run_seed=seed)
        s, e = kmeans_std(sample, config), kmeans_elkan(sample, config)
        assert [h.assignment for h in s.history] == [h.assignment for h in e.history]

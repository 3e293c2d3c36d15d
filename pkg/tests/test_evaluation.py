import numpy as np
import pytest

from graphkmeans.clustering import ClusterConfig, kmeans_elkan, kmeans_std
from graphkmeans.errors import ConfigError, DimensionError, LabelsRequiredError, SilhouetteUndefinedError
from graphkmeans.evaluation import (
    EvalReport,
    as_assignment,
    classification_accuracy,
    cluster_error,
    evaluate,
    majority_labels,
    pairwise_distances,
    set_distance,
    silhouette_index,
)
from graphkmeans.matching import DistanceOracle
from graphkmeans.synthetic import scalar_graphs, two_cluster_scalars
from oracles import scalar_kmeans_objective, scalar_silhouette


class TestSilhouette:
    def test_two_tight_clusters(self):
        values = [0.0, 0.1, 10.0, 10.1]
        labels = [0, 0, 1, 1]
        s = silhouette_index(labels, scalar_graphs(values))
        index, per_cluster, per_pattern = scalar_silhouette(values, labels)
        assert s.per_pattern == pytest.approx(per_pattern, abs=1e-12)
        assert s.index == pytest.approx(index, abs=1e-12)
        # patterns 0.1 and 10.0 see b = 9.95
        assert s.per_pattern[1] == pytest.approx((9.95 - 0.1) / 9.95, abs=1e-12)

    def test_identical_patterns(self):
        s = silhouette_index([0, 0, 1, 1], scalar_graphs([2.0] * 4))
        assert s.per_pattern == (0.0, 0.0, 0.0, 0.0)

    def test_singleton_is_zero(self):
        s = silhouette_index([0, 0, 1], scalar_graphs([0.0, 1.0, 5.0]))
        assert s.per_pattern[2] == 0.0

    def test_k1_undefined(self):
        with pytest.raises(SilhouetteUndefinedError):
            silhouette_index([0, 0], scalar_graphs([0.0, 1.0]))

    def test_empty_cluster_rejected(self):
        with pytest.raises(ConfigError):
            silhouette_index([0, 2, 2], distances=np.zeros((3, 3)))

    def test_relabelling_invariant(self, rng):
        values = list(rng.normal(size=12))
        labels = rng.integers(3, size=12)
        labels[:3] = [0, 1, 2]
        D = np.abs(np.subtract.outer(values, values))
        perm = np.array([2, 0, 1])
        assert silhouette_index(labels, distances=D).index == pytest.approx(
            silhouette_index(perm[labels], distances=D).index, abs=1e-12)

    def test_matrix_membership_and_cached_distances(self):
        values = [0.0, 1.0, 7.0, 9.0]
        D = np.abs(np.subtract.outer(values, values))
        M = np.array([[1, 0], [1, 0], [0, 1], [0, 1]])
        assert silhouette_index(M, distances=D).index == pytest.approx(scalar_silhouette(values, [0, 0, 1, 1])[0])

    def test_needs_distances_or_sample(self):
        with pytest.raises(ConfigError):
            silhouette_index([0, 1])


class TestClusterError:
    def test_perfect(self):
        sample = scalar_graphs([1.0, 5.0])
        assert cluster_error([0, 1], sample=sample, centroids=sample) == 0.0

    def test_scalar(self):
        sample = scalar_graphs([0.0, 2.0, 10.0, 12.0])
        centroids = scalar_graphs([1.0, 11.0])
        assert cluster_error([0, 0, 1, 1], sample=sample, centroids=centroids) == pytest.approx(4.0)

    def test_cached_distances(self):
        assert cluster_error([0, 1], distances=[1.0, 2.0]) == 5.0
        assert cluster_error([1, 0], distances=np.array([[9.0, 1.0], [2.0, 9.0]])) == 5.0

    def test_no_new_matchings_with_cache(self):
        oracle = DistanceOracle()
        cluster_error([0], distances=[1.0], oracle=oracle)
        assert oracle.calls == 0

    def test_zero_hundred_scalar_oracle(self):
        sample = two_cluster_scalars(40, seed=2)
        res = kmeans_std(sample, ClusterConfig(k=2))
        values = [g.node_attrs[0, 0] for g in sample]
        assert cluster_error(res.assignment, sample=sample, centroids=res.centroids) == pytest.approx(
            scalar_kmeans_objective(values, list(res.assignment)), rel=1e-9)

    @pytest.mark.parametrize("distances", [[1.0], np.zeros((2, 1)) + [[0.0]]])
    def test_shape_mismatch(self, distances):
        with pytest.raises(DimensionError):
            cluster_error([0, 1], distances=distances)


class TestAccuracy:
    def test_pure(self):
        assert classification_accuracy([0, 0, 1], ["a", "a", "b"]) == 1.0

    def test_majority(self):
        assert classification_accuracy([0, 0, 0, 0], ["a", "a", "a", "b"]) == 0.75

    def test_random_balanced(self, rng):
        labels = ["x"] * 2000 + ["y"] * 2000
        acc = classification_accuracy(rng.integers(2, size=4000), labels)
        assert 0.5 <= acc < 0.53

    def test_optimal_mapping(self):
        # both clusters are majority "a"; a one-to-one mapping cannot reuse it
        clusters = [0, 0, 0, 1, 1, 1]
        labels = ["a", "a", "b", "a", "a", "b"]
        assert classification_accuracy(clusters, labels) == pytest.approx(4 / 6)
        assert classification_accuracy(clusters, labels, "optimal") == pytest.approx(3 / 6)

    def test_labels_required(self):
        with pytest.raises(LabelsRequiredError):
            classification_accuracy([0, 1], ["a", None])
        with pytest.raises(LabelsRequiredError):
            classification_accuracy([0, 1], None)

    def test_unknown_mapping(self):
        with pytest.raises(ConfigError):
            classification_accuracy([0], ["a"], "best")

    def test_majority_labels_tie(self):
        assert majority_labels([0, 0], ["b", "a"]) == {0: "a"}


class TestMisc:
    def test_set_distance_singletons(self):
        a, b = scalar_graphs([1.0, 4.0])
        assert set_distance([a], [b]) == pytest.approx(3.0)

    def test_set_distance_min_linkage(self):
        U = scalar_graphs([0.0, 5.0])
        V = scalar_graphs([7.0, 20.0])
        assert set_distance(U, V) == pytest.approx(2.0)

    def test_set_distance_empty(self):
        with pytest.raises(ConfigError):
            set_distance([], scalar_graphs([1.0]))

    def test_pairwise_calls(self):
        oracle = DistanceOracle()
        D = pairwise_distances(scalar_graphs([0.0, 1.0, 3.0]), oracle)
        assert oracle.calls == 3
        np.testing.assert_allclose(D, [[0, 1, 3], [1, 0, 2], [3, 2, 0]])

    def test_as_assignment_rejects_bad_matrix(self):
        with pytest.raises(DimensionError):
            as_assignment([[1, 1], [0, 1]])

    def test_report(self):
        sample = two_cluster_scalars(20, seed=1)
        std = kmeans_std(sample, ClusterConfig(k=2))
        elk = kmeans_elkan(sample, ClusterConfig(k=2))
        report = evaluate(elk, sample, baseline=std)
        assert report.accuracy == 1.0
        assert -1 <= report.silhouette <= 1
        assert report.speedup_total == pytest.approx(std.matchings_total / elk.matchings_total)
        assert EvalReport.from_dict(report.as_dict()) == report

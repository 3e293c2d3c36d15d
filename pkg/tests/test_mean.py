import itertools
import math

import numpy as np
import pytest

from graphkmeans.errors import EmptySampleError, ScaleError
from graphkmeans.graphs import AttributedGraph, Representation, build_graph, pad_grid, permute_grid
from graphkmeans.matching import DistanceOracle, distance_exact
from graphkmeans.mean import brute_force_mean, iam_mean, set_mean, ssd
from graphkmeans.synthetic import scalar_graphs
from oracles import random_graph, relabel


def scalars(*values):
    return scalar_graphs(values)


class TestSsd:
    def test_sole_member(self, rng):
        g = random_graph(rng)
        assert ssd(g, [g]) == 0.0

    @pytest.mark.parametrize("candidate, expected", [(1.0, 1.0), (0.0, 2.0)])
    def test_scalar(self, candidate, expected):
        assert ssd(scalars(candidate)[0], scalars(0.0, 2.0)) == pytest.approx(expected, abs=1e-15)

    def test_call_count(self, rng):
        oracle = DistanceOracle()
        sample = [random_graph(rng) for _ in range(4)]
        ssd(sample[0], sample, oracle)
        assert oracle.calls == 4

    def test_empty(self, rng):
        with pytest.raises(EmptySampleError):
            ssd(random_graph(rng), [])


class TestIam:
    def test_identical_graphs(self, rng):
        g = random_graph(rng, min_order=3)
        for seed in range(3):
            res = iam_mean([g] * 4, seed=seed)
            assert res.ssd == pytest.approx(0.0, abs=1e-12)
            assert distance_exact(res.mean, g).distance == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_scalar_mean(self, seed):
        res = iam_mean(scalars(0.0, 2.0, 4.0), seed=seed)
        assert res.mean.order == 1
        assert res.mean.node_attrs[0, 0] == pytest.approx(2.0, abs=1e-12)

    def test_permuted_pair(self, rng):
        g = random_graph(rng, min_order=3, max_order=3)
        h = relabel(g, [2, 0, 1])
        res = iam_mean([g, h], seed=0)
        assert res.ssd == pytest.approx(0.0, abs=1e-12)
        assert distance_exact(res.mean, g).distance == pytest.approx(0.0, abs=1e-12)

    def test_uses_n_minus_one_alignments(self, rng):
        oracle = DistanceOracle()
        sample = [random_graph(rng) for _ in range(6)]
        res = iam_mean(sample, seed=1, oracle=oracle, compute_ssd=False)
        assert res.alignments_used == 5 and oracle.calls == 5
        assert res.ssd is None
        assert sorted(res.order_of_presentation) == list(range(6))

    def test_ssd_matches_recomputation(self, rng):
        sample = [random_graph(rng) for _ in range(5)]
        res = iam_mean(sample, seed=3)
        assert res.ssd == pytest.approx(ssd(res.mean, sample), rel=1e-9)

    def test_deterministic(self, rng):
        sample = [random_graph(rng) for _ in range(5)]
        a, b = iam_mean(sample, seed=(1, 2, 3)), iam_mean(sample, seed=(1, 2, 3))
        assert a.mean.same_attributes(b.mean) and a.order_of_presentation == b.order_of_presentation

    def test_mean_padded_to_max_order(self, rng):
        sample = [random_graph(rng, max_order=2, min_order=2), random_graph(rng, max_order=4, min_order=4)]
        assert iam_mean(sample, seed=0).mean.order == 4

    def test_update_rule(self, rng):
        """Replays the convex update with an independent alignment oracle."""
        sample = [random_graph(rng, max_order=4) for _ in range(4)]
        res = iam_mean(sample, seed=7)
        n = max(g.order for g in sample)
        order = res.order_of_presentation
        y = pad_grid(sample[order[0]].grid, n)
        for i, idx in enumerate(order[1:], start=2):
            X = pad_grid(sample[idx].grid, n)
            best = min(itertools.permutations(range(n)), key=lambda p: np.sum((y - permute_grid(X, p)) ** 2))
            y = (i - 1) / i * y + permute_grid(X, best) / i
        # equal up to automorphism ties: compare by distance
        assert distance_exact(res.mean, AttributedGraph(y, sample[0].d_v)).distance == pytest.approx(0.0, abs=1e-9)

    def test_trim(self):
        sample = [build_graph([[1.0], [0.0]]), build_graph([[1.0], [0.0]])]
        assert iam_mean(sample, seed=0, trim=True).mean.order == 1

    def test_empty(self):
        with pytest.raises(EmptySampleError):
            iam_mean([])


class TestSetMean:
    def test_single(self, rng):
        g = random_graph(rng)
        assert set_mean([g]) is g

    def test_scalars(self):
        sample = scalars(0.0, 1.0, 10.0)
        assert set_mean(sample) is sample[1]
        F = [ssd(g, sample) for g in sample]
        assert F == pytest.approx([101 / 2, 82 / 2, 181 / 2])

    def test_exact_centroid_member(self):
        sample = scalars(-3.0, 3.0, 0.0, -1.0, 1.0)
        assert set_mean(sample) is sample[2]

    def test_call_count(self, rng):
        oracle = DistanceOracle()
        set_mean([random_graph(rng) for _ in range(5)], oracle)
        assert oracle.calls == 10

    def test_lowest_index_tie(self):
        sample = scalars(1.0, 1.0)
        assert set_mean(sample) is sample[0]


class TestBruteForce:
    def test_identical_scalars(self):
        res = brute_force_mean(scalars(2.0, 2.0, 2.0))
        assert res.ssd == 0.0
        assert res.mean.node_attrs[0, 0] == 2.0

    def test_permuted_pair(self, rng):
        g = random_graph(rng, min_order=3, max_order=3)
        res = brute_force_mean([g, relabel(g, [1, 2, 0])])
        assert res.ssd == pytest.approx(0.0, abs=1e-12)
        assert distance_exact(res.mean, g).distance == pytest.approx(0.0, abs=1e-12)

    def test_scale_guard(self, rng):
        with pytest.raises(ScaleError):
            brute_force_mean(scalars(*range(6)))
        with pytest.raises(ScaleError):
            brute_force_mean([random_graph(rng, min_order=5, max_order=5)] * 2)

    def test_sps_maximal(self, rng):
        sample = [random_graph(rng, max_order=3) for _ in range(3)]
        res = brute_force_mean(sample)
        n = max(g.order for g in sample)
        orbits = [[Representation.from_grid(permute_grid(pad_grid(g.grid, n), p)).data
                   for p in itertools.permutations(range(n))] for g in sample]
        for combo in itertools.product(*orbits):
            sps = sum(float(combo[a] @ combo[b]) for a in range(3) for b in range(a + 1, 3))
            assert sps <= res.sps + 1e-9

    def test_alignment_members_in_orbits(self, rng):
        sample = [random_graph(rng, max_order=3) for _ in range(3)]
        res = brute_force_mean(sample)
        n = max(g.order for g in sample)
        for g, rep in zip(sample, res.alignment.representations):
            G = pad_grid(g.grid, n)
            assert any(np.array_equal(rep.data, Representation.from_grid(permute_grid(G, p)).data)
                       for p in itertools.permutations(range(n)))

    def test_empty(self):
        with pytest.raises(EmptySampleError):
            brute_force_mean([])

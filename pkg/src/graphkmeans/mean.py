"""Sample means of graphs.

The sample mean of graphs X_1..X_N minimises the sum of squared distances
F(Y) = 1/2 * sum_i D(Y, X_i)^2.  :func:`iam_mean` approximates it with one
incremental pass (align each graph to the running estimate, then average);
:func:`set_mean` restricts the search to the sample itself; and
:func:`brute_force_mean` solves tiny instances exactly by enumerating every
combination of vertex orderings.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptySampleError, ScaleError
from .graphs import AttributedGraph, Representation, check_compatible, pad_grid, permute_grid
from .matching import DistanceOracle

BRUTE_FORCE_MAX_GRAPHS = 5
BRUTE_FORCE_MAX_ORDER = 4


@dataclass(frozen=True)
class SampleMeanResult:
    mean: AttributedGraph
    ssd: float | None
    alignments_used: int
    order_of_presentation: tuple[int, ...]
    seed: object


@dataclass(frozen=True)
class MultipleAlignment:
    """One representation per sample graph, all of the same shape."""

    representations: tuple[Representation, ...]

    def mean_vector(self) -> np.ndarray:
        return np.mean([r.data for r in self.representations], axis=0)


@dataclass(frozen=True)
class BruteForceMean:
    mean: AttributedGraph
    alignment: MultipleAlignment
    sps: float
    ssd: float


def _check_sample(sample: Sequence[AttributedGraph]) -> None:
    if len(sample) == 0:
        raise EmptySampleError("sample is empty")
    for g in sample[1:]:
        check_compatible(sample[0], g)


def ssd(candidate: AttributedGraph, sample: Sequence[AttributedGraph], oracle: DistanceOracle | None = None) -> float:
    """Half the sum of squared distances from ``candidate`` to the sample."""
    _check_sample(sample)
    oracle = oracle or DistanceOracle()
    with oracle.padded(max(g.order for g in [candidate, *sample])):
        return 0.5 * math.fsum(oracle.distance(candidate, g) ** 2 for g in sample)


def iam_mean(sample: Sequence[AttributedGraph], seed=None, oracle: DistanceOracle | None = None,
             compute_ssd: bool = True, trim: bool = False) -> SampleMeanResult:
    """Incremental arithmetic mean.

    The sample is visited in a random order drawn from ``seed``.  The running
    mean starts as the first graph padded to the largest order in the sample
    (or to the oracle's padding, if larger); graph ``i`` is optimally aligned
    to it and mixed in with weights ``(i-1)/i`` and ``1/i``.  Uses exactly ``N - 1`` distance evaluations,
    plus ``N`` more when ``compute_ssd`` is set.
    """
    _check_sample(sample)
    oracle = oracle or DistanceOracle()
    order = tuple(int(i) for i in np.random.default_rng(seed).permutation(len(sample)))
    n = max(g.order for g in sample)
    d_v = sample[0].d_v
    y = np.array(pad_grid(sample[order[0]].grid, n), dtype=np.float64)
    used = 0
    for i, idx in enumerate(order[1:], start=2):
        g = sample[idx]
        alignment = oracle.align(AttributedGraph(y, d_v), g)
        used += 1
        m = len(alignment.permutation)
        if m > y.shape[0]:
            y = pad_grid(y, m)
        x = permute_grid(pad_grid(g.grid, m), alignment.permutation)
        y = ((i - 1) / i) * y + (1.0 / i) * x
    mean = AttributedGraph(y, d_v)
    if trim:
        mean = mean.trimmed()
    value = ssd(mean, sample, oracle) if compute_ssd else None
    return SampleMeanResult(mean, value, used, order, seed)


def set_mean(sample: Sequence[AttributedGraph], oracle: DistanceOracle | None = None) -> AttributedGraph:
    """Sample member with the smallest SSD (lowest index on ties); N(N-1)/2 evaluations."""
    _check_sample(sample)
    oracle = oracle or DistanceOracle()
    N = len(sample)
    sq = np.zeros((N, N))
    with oracle.padded(max(g.order for g in sample)):
        for a in range(N):
            for b in range(a + 1, N):
                sq[a, b] = sq[b, a] = oracle.distance(sample[a], sample[b]) ** 2
    return sample[int(np.argmin(0.5 * sq.sum(axis=1)))]


def _orbit(grid: np.ndarray, n: int) -> np.ndarray:
    g = pad_grid(grid, n)
    return np.stack([Representation.from_grid(permute_grid(g, p)).data for p in itertools.permutations(range(n))])


def brute_force_mean(sample: Sequence[AttributedGraph]) -> BruteForceMean:
    """Exact sample mean by enumerating all multiple alignments.

    The first graph keeps its own vertex order (a common permutation of all
    representations changes nothing).  For each combination the mean of the
    chosen representations is formed; the combination maximising the sum of
    pairwise inner products is the one whose within-combination SSD is least,
    and its mean is a global minimiser of F.
    """
    _check_sample(sample)
    N = len(sample)
    n = max(g.order for g in sample)
    if N > BRUTE_FORCE_MAX_GRAPHS or n > BRUTE_FORCE_MAX_ORDER:
        raise ScaleError(f"brute force limited to {BRUTE_FORCE_MAX_GRAPHS} graphs of order <= "
                         f"{BRUTE_FORCE_MAX_ORDER}; got {N} graphs of order {n}")
    d = sample[0].d
    first = Representation.from_grid(pad_grid(sample[0].grid, n)).data
    orbits = [_orbit(g.grid, n) for g in sample[1:]]
    # ||sum x_i||^2 = sum ||x_i||^2 + 2 * SPS, and sum ||x_i||^2 is fixed
    total = first.reshape((1,) * (N - 1) + first.shape)
    for axis, orb in enumerate(orbits):
        shape = [1] * (N - 1) + [orb.shape[1]]
        shape[axis] = orb.shape[0]
        total = total + orb.reshape(shape)
    score = np.einsum("...k,...k->...", total, total)
    best = np.unravel_index(int(np.argmax(score)), score.shape) if orbits else ()
    chosen = [first] + [orb[i] for orb, i in zip(orbits, best)]
    y = np.mean(chosen, axis=0)
    sps = math.fsum(float(chosen[a] @ chosen[b]) for a in range(N) for b in range(a + 1, N))
    value = 0.5 * math.fsum(float(np.sum((x - y) ** 2)) for x in chosen)
    reps = tuple(Representation(n, d, x) for x in chosen)
    mean = AttributedGraph(Representation(n, d, y).grid, sample[0].d_v)
    return BruteForceMean(mean, MultipleAlignment(reps), sps, value)

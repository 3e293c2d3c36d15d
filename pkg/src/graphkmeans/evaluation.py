"""Cluster quality: objective value, classification accuracy, silhouette index."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConfigError, DimensionError, LabelsRequiredError, SilhouetteUndefinedError
from .graphs import AttributedGraph
from .matching import DistanceOracle


def as_assignment(membership) -> np.ndarray:
    """Accept a cluster index vector or an N x k binary membership matrix."""
    m = np.asarray(membership)
    if m.ndim == 1:
        return m.astype(int)
    if m.ndim == 2:
        if not (np.isin(m, (0, 1)).all() and (m.sum(axis=1) == 1).all()):
            raise DimensionError("membership rows must contain exactly one 1")
        return np.argmax(m, axis=1)
    raise DimensionError(f"membership must be 1-d or 2-d, got shape {m.shape}")


def pairwise_distances(sample: Sequence[AttributedGraph], oracle: DistanceOracle | None = None) -> np.ndarray:
    """Symmetric N x N distance matrix using N(N-1)/2 evaluations.

    Distances are taken at a common padding of the sample's largest order.
    """
    oracle = oracle or DistanceOracle()
    N = len(sample)
    out = np.zeros((N, N))
    if N == 0:
        return out
    with oracle.padded(max(g.order for g in sample)):
        for a in range(N):
            for b in range(a + 1, N):
                out[a, b] = out[b, a] = oracle.distance(sample[a], sample[b])
    return out


@dataclass(frozen=True)
class Silhouette:
    index: float
    per_cluster: tuple[float, ...]
    per_pattern: tuple[float, ...]


def silhouette_index(membership, sample: Sequence[AttributedGraph] | None = None,
                     oracle: DistanceOracle | None = None, distances: np.ndarray | None = None) -> Silhouette:
    """Silhouette widths, cluster silhouettes and their average.

    ``a_i`` is the mean distance from pattern i to the rest of its cluster,
    ``b_i`` the smallest mean distance to another cluster, and
    ``s_i = (b_i - a_i) / max(a_i, b_i)``.  Patterns in singleton clusters
    and the case ``a_i = b_i = 0`` get ``s_i = 0``.  Pass ``distances`` to
    reuse a precomputed matrix, otherwise it is computed from ``sample``.
    """
    labels = as_assignment(membership)
    if distances is None:
        if sample is None:
            raise ConfigError("need either sample or distances")
        distances = pairwise_distances(sample, oracle)
    distances = np.asarray(distances, dtype=np.float64)
    N = labels.shape[0]
    if distances.shape != (N, N):
        raise DimensionError(f"distance matrix {distances.shape} does not match {N} patterns")
    clusters = np.unique(labels)
    k = int(labels.max()) + 1 if N else 0
    if clusters.shape[0] != k:
        raise ConfigError("every cluster must be non-empty")
    if k < 2:
        raise SilhouetteUndefinedError("silhouette index needs at least two clusters")
    members = [np.flatnonzero(labels == j) for j in range(k)]
    s = np.zeros(N)
    for i in range(N):
        own = members[labels[i]]
        if own.shape[0] == 1:
            continue
        a = distances[i, own].sum() / (own.shape[0] - 1)
        b = min(distances[i, members[j]].mean() for j in range(k) if j != labels[i])
        top = max(a, b)
        s[i] = 0.0 if top == 0 else (b - a) / top
    per_cluster = tuple(float(s[m].mean()) for m in members)
    return Silhouette(float(np.mean(per_cluster)), per_cluster, tuple(float(v) for v in s))


def set_distance(U: Sequence[AttributedGraph], V: Sequence[AttributedGraph], oracle: DistanceOracle | None = None) -> float:
    """Minimum-linkage distance between two sets of graphs."""
    if not U or not V:
        raise ConfigError("set distance needs two non-empty sets")
    oracle = oracle or DistanceOracle()
    with oracle.padded(max(g.order for g in [*U, *V])):
        return min(oracle.distance(x, y) for x in U for y in V)


def cluster_error(membership, distances=None, sample=None, centroids=None, oracle: DistanceOracle | None = None) -> float:
    """Cluster objective: sum of squared distances to assigned centroids.

    ``distances`` may be the per-pattern distance to the assigned centroid
    (length N) or a full N x k matrix; only when it is missing are distances
    evaluated from ``sample`` and ``centroids``.
    """
    labels = as_assignment(membership)
    N = labels.shape[0]
    if distances is None:
        if sample is None or centroids is None:
            raise ConfigError("need distances or sample and centroids")
        if len(sample) != N:
            raise DimensionError("sample and membership sizes differ")
        oracle = oracle or DistanceOracle()
        with oracle.padded(max(g.order for g in [*sample, *centroids])):
            assigned = [oracle.distance(sample[i], centroids[labels[i]]) for i in range(N)]
    else:
        d = np.asarray(distances, dtype=np.float64)
        if d.ndim == 2:
            if d.shape[0] != N or labels.max(initial=-1) >= d.shape[1]:
                raise DimensionError("distance matrix does not match membership")
            assigned = d[np.arange(N), labels]
        elif d.shape == (N,):
            assigned = d
        else:
            raise DimensionError("distances do not match membership")
    return math.fsum(float(v) ** 2 for v in assigned)


def classification_accuracy(membership, labels: Sequence | None, mapping: str = "majority") -> float:
    """Fraction of patterns whose class matches their cluster's label.

    ``majority`` maps each cluster to its most frequent class (ties to the
    first class in sorted order); ``optimal`` uses a one-to-one cluster/class
    matching maximising agreement.
    """
    clusters = as_assignment(membership)
    if labels is None or len(labels) != clusters.shape[0] or any(l is None for l in labels):
        raise LabelsRequiredError("every pattern needs a class label")
    N = clusters.shape[0]
    if N == 0:
        raise ConfigError("empty membership")
    classes = sorted(set(labels), key=str)
    class_idx = {c: i for i, c in enumerate(classes)}
    k = int(clusters.max()) + 1
    table = np.zeros((k, len(classes)), dtype=int)
    for c, l in zip(clusters, labels):
        table[c, class_idx[l]] += 1
    if mapping == "majority":
        correct = table.max(axis=1).sum()
    elif mapping == "optimal":
        rows, cols = linear_sum_assignment(-table)
        correct = table[rows, cols].sum()
    else:
        raise ConfigError(f"unknown mapping {mapping!r}")
    return float(correct) / N


def majority_labels(membership, labels) -> dict[int, object]:
    clusters = as_assignment(membership)
    out = {}
    for j in np.unique(clusters):
        counts = Counter(l for c, l in zip(clusters, labels) if c == j)
        best = max(counts.values())
        out[int(j)] = sorted((l for l, n in counts.items() if n == best), key=str)[0]
    return out


@dataclass
class EvalReport:
    error: float
    accuracy: float | None
    silhouette: float | None
    per_cluster_silhouettes: list[float] = field(default_factory=list)
    iterations: int = 0
    matchings_total: int = 0
    matchings_per_iteration: float = 0.0
    speedup_per_iteration: float | None = None
    speedup_total: float | None = None

    def as_dict(self) -> dict:
        return {
            "error": self.error,
            "accuracy": self.accuracy,
            "silhouette": self.silhouette,
            "per_cluster_silhouettes": list(self.per_cluster_silhouettes),
            "iterations": self.iterations,
            "matchings_total": self.matchings_total,
            "matchings_per_iteration": self.matchings_per_iteration,
            "speedup_per_iteration": self.speedup_per_iteration,
            "speedup_total": self.speedup_total,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(**d)


def speedup(baseline: float, value: float) -> float | None:
    return None if not value else baseline / value


def evaluate(result, sample: Sequence[AttributedGraph], distances: np.ndarray | None = None,
             oracle: DistanceOracle | None = None, baseline=None, mapping: str = "majority") -> EvalReport:
    """Assemble an :class:`EvalReport` for a clustering result.

    Silhouette needs the pairwise distance matrix; pass it via ``distances``
    to avoid recomputation.  ``baseline`` is another result (typically the
    standard algorithm) used for the speedup ratios.
    """
    labels = [g.label for g in sample]
    accuracy = None
    if all(l is not None for l in labels):
        accuracy = classification_accuracy(result.assignment, labels, mapping)
    sil = None
    per_cluster: list[float] = []
    if result.k >= 2 and len(np.unique(result.assignment)) == result.k:
        s = silhouette_index(result.assignment, sample, oracle, distances)
        sil, per_cluster = s.index, list(s.per_cluster)
    per_iter = float(np.mean(result.matchings_per_iteration)) if result.history else 0.0
    report = EvalReport(result.objective, accuracy, sil, per_cluster, result.iterations,
                        result.matchings_total, per_iter)
    if baseline is not None:
        base_per_iter = float(np.mean(baseline.matchings_per_iteration)) if baseline.history else 0.0
        report.speedup_per_iteration = speedup(base_per_iter, per_iter)
        report.speedup_total = speedup(baseline.matchings_total, result.matchings_total)
    return report

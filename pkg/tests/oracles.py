"""Independent reference implementations used as test oracles.

These deliberately avoid the package's search code: distances enumerate every
permutation, scalar clustering quantities use plain Python loops.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from graphkmeans.graphs import AttributedGraph, build_graph, permute_grid


def brute_distance(x, y) -> tuple[float, tuple[int, ...]]:
    """Minimum over all permutations of ||X - P^T Y P||, lexicographically first minimiser."""
    n = max(x.order, y.order)
    A = np.zeros((n, n, x.d))
    B = np.zeros((n, n, y.d))
    A[: x.order, : x.order] = x.grid
    B[: y.order, : y.order] = y.grid
    best, arg = math.inf, None
    for p in itertools.permutations(range(n)):
        d = math.sqrt(sum(float(np.sum((A[i, j] - B[p[i], p[j]]) ** 2)) for i in range(n) for j in range(n)))
        if arg is None or d < best - 1e-12 * max(1.0, best):
            best, arg = d, p
    return best, arg


def scalar_silhouette(values, labels) -> tuple[float, list[float], list[float]]:
    """Silhouette of a 1-d partition written straight from the definitions."""
    clusters = sorted(set(labels))
    s = []
    for i, (v, c) in enumerate(zip(values, labels)):
        own = [abs(v - w) for j, (w, d) in enumerate(zip(values, labels)) if d == c and j != i]
        if not own:
            s.append(0.0)
            continue
        a = sum(own) / len(own)
        b = math.inf
        for other in clusters:
            if other == c:
                continue
            ds = [abs(v - w) for w, d in zip(values, labels) if d == other]
            b = min(b, sum(ds) / len(ds))
        top = max(a, b)
        s.append(0.0 if top == 0 else (b - a) / top)
    per_cluster = []
    for c in clusters:
        mine = [si for si, d in zip(s, labels) if d == c]
        per_cluster.append(sum(mine) / len(mine))
    return sum(per_cluster) / len(per_cluster), per_cluster, s


def scalar_kmeans_objective(values, labels) -> float:
    """Sum of squared deviations from each group's arithmetic mean."""
    total = 0.0
    for c in set(labels):
        group = [v for v, d in zip(values, labels) if d == c]
        m = sum(group) / len(group)
        total += sum((v - m) ** 2 for v in group)
    return total


def random_graph(rng, max_order=5, d_v=2, d_e=2, min_order=1, p_edge=0.5):
    order = int(rng.integers(min_order, max_order + 1))
    nodes = rng.normal(size=(order, d_v))
    edges = [(i, j, rng.normal(size=d_e - 1)) for i in range(order) for j in range(i + 1, order)
             if rng.random() < p_edge]
    return build_graph(nodes, edges, d_e=d_e)


def relabel(g, perm):
    """Same graph with vertex ``v`` renamed ``perm[v]``."""
    inv = np.argsort(perm)
    return AttributedGraph(permute_grid(g.grid, inv), g.d_v, id=g.id, label=g.label)

"""Seeded synthetic samples for tests, examples and benchmarks."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .graphs import AttributedGraph, build_graph


def scalar_graphs(values: Sequence, labels: Sequence | None = None) -> list[AttributedGraph]:
    """Single-vertex graphs whose vertex attribute is the given value (or vector)."""
    out = []
    for i, v in enumerate(values):
        attr = np.atleast_1d(np.asarray(v, dtype=np.float64))
        out.append(AttributedGraph.from_parts(attr[None, :], d_e=0, id=f"s{i}",
                                              label=None if labels is None else labels[i]))
    return out


def two_cluster_scalars(n: int = 40, spread: float = 0.1, centres=(0.0, 100.0), seed=0) -> list[AttributedGraph]:
    """``n`` single-vertex graphs, half near each centre, labelled by centre."""
    rng = np.random.default_rng(seed)
    half = n // 2
    values = np.concatenate([centres[0] + rng.uniform(-spread, spread, half),
                             centres[1] + rng.uniform(-spread, spread, n - half)])
    labels = ["low"] * half + ["high"] * (n - half)
    return scalar_graphs(values, labels)


def random_graph(rng: np.random.Generator, order: int, d_v: int = 2, d_e: int = 2, p_edge: float = 0.5,
                 id=None, label=None) -> AttributedGraph:
    """Random graph with normal vertex attributes; edges carry the presence flag plus ``d_e - 1`` normals."""
    nodes = rng.normal(size=(order, d_v))
    edges = [(i, j, rng.normal(size=d_e - 1)) for i in range(order) for j in range(i + 1, order)
             if rng.random() < p_edge]
    return build_graph(nodes, edges, d_e=d_e, id=id, label=label)


def clustered_graphs(n: int, k: int, max_order: int = 4, d_v: int = 2, d_e: int = 2, spread: float = 0.3,
                     separation: float = 6.0, seed=0) -> list[AttributedGraph]:
    """Noisy copies of ``k`` random prototypes, with vertices shuffled.

    Each copy perturbs the prototype's attributes by Gaussian noise of scale
    ``spread``, occasionally drops its last vertex, and relabels vertices at
    random, so recovering the cluster requires matching.
    """
    rng = np.random.default_rng(seed)
    protos = []
    for c in range(k):
        order = int(rng.integers(max(1, max_order - 1), max_order + 1))
        nodes = rng.normal(scale=separation, size=(order, d_v))
        edges = [(i, j) for i in range(order) for j in range(i + 1, order) if rng.random() < 0.6]
        protos.append((nodes, edges))
    out = []
    for i in range(n):
        c = i % k
        nodes, edges = protos[c]
        order = nodes.shape[0]
        if order > 1 and rng.random() < 0.2:
            order -= 1
        perm = rng.permutation(order)
        where = np.empty(order, dtype=int)
        where[perm] = np.arange(order)
        noisy = nodes[:order] + rng.normal(scale=spread, size=(order, d_v))
        new_nodes = noisy[perm]
        new_edges = [(int(where[a]), int(where[b]), rng.normal(scale=spread, size=d_e - 1) + 1.0)
                     for a, b in edges if a < order and b < order]
        out.append(build_graph(new_nodes, new_edges, d_e=d_e, id=f"g{i}", label=f"c{c}"))
    return out

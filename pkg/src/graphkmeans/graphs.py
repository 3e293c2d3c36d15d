"""Attributed graphs and their matrix/vector representations.

A graph of order ``m`` with vertex attributes in R^d_v and edge attributes in
R^d_e is stored as an ``(m, m, d)`` grid with ``d = d_v + d_e``.  Vertex
attributes occupy the first ``d_v`` coordinates of the diagonal cells, edge
attributes the last ``d_e`` coordinates of the off-diagonal cells.  Absent
edges are zero cells, so a graph of order ``m`` padded to ``n > m`` simply
gains isolated all-zero vertices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, InvalidPaddingError, InvalidPermutationError

EMBEDDING = "disjoint-blocks"


@dataclass(frozen=True)
class AttributeSpace:
    """Dimensions of the unified attribute space."""

    d_v: int
    d_e: int
    embedding: str = EMBEDDING

    def __post_init__(self):
        if self.d_v < 0 or self.d_e < 0 or self.d_v + self.d_e < 1:
            raise DimensionError(f"invalid attribute dimensions d_v={self.d_v}, d_e={self.d_e}")
        if self.embedding != EMBEDDING:
            raise DimensionError(f"unknown embedding rule {self.embedding!r}")

    @property
    def d(self) -> int:
        return self.d_v + self.d_e


class AttributedGraph:
    """Immutable undirected graph with vector attributes on vertices and edges.

    Use :meth:`from_parts` for vertex/edge lists and :meth:`from_grid` for
    dense attribute grids (e.g. sample means).
    """

    __slots__ = ("_grid", "_d_v", "id", "label", "_edges")

    def __init__(self, grid: np.ndarray, d_v: int, id=None, label=None):
        grid = np.array(grid, dtype=np.float64)
        if grid.ndim != 3 or grid.shape[0] != grid.shape[1]:
            raise DimensionError(f"grid must have shape (n, n, d), got {grid.shape}")
        n, _, d = grid.shape
        if n < 1:
            raise DimensionError("a graph needs at least one vertex")
        if not 0 <= d_v <= d:
            raise DimensionError(f"d_v={d_v} outside [0, {d}]")
        if not np.array_equal(grid, grid.transpose(1, 0, 2)):
            raise DimensionError("attribute grid is not symmetric")
        idx = np.arange(n)
        off = ~np.eye(n, dtype=bool)
        if np.any(grid[idx, idx, d_v:]) or np.any(grid[off][:, :d_v]):
            raise DimensionError("grid mixes vertex and edge attribute blocks")
        grid.setflags(write=False)
        self._grid = grid
        self._d_v = int(d_v)
        self.id = id
        self.label = label
        self._edges = None

    @classmethod
    def from_parts(cls, node_attrs, edges: Iterable = (), d_e: int | None = None, id=None, label=None):
        """Build from per-vertex attributes and ``(i, j, attr)`` edge triples.

        Edge attributes must already be nonzero vectors (see
        :func:`build_graph` for the presence-flag convenience).
        """
        nodes = np.atleast_2d(np.asarray(node_attrs, dtype=np.float64))
        if nodes.ndim != 2:
            raise DimensionError("node attributes must form a 2-d array")
        order, d_v = nodes.shape
        edges = [(int(i), int(j), np.atleast_1d(np.asarray(a, dtype=np.float64))) for i, j, a in edges]
        if d_e is None:
            d_e = edges[0][2].shape[0] if edges else 0
        grid = np.zeros((order, order, d_v + d_e))
        grid[np.arange(order), np.arange(order), :d_v] = nodes
        seen = set()
        for i, j, a in edges:
            if not (0 <= i < order and 0 <= j < order):
                raise DimensionError(f"edge ({i}, {j}) out of range for order {order}")
            if i == j:
                raise DimensionError(f"self-loop ({i}, {i}) not allowed")
            if a.shape != (d_e,):
                raise DimensionError(f"edge ({i}, {j}) attribute has dimension {a.shape[0]}, expected {d_e}")
            if not np.any(a):
                raise DimensionError(f"edge ({i}, {j}) has a zero attribute")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise DimensionError(f"duplicate edge {key}")
            seen.add(key)
            grid[i, j, d_v:] = a
            grid[j, i, d_v:] = a
        return cls(grid, d_v, id=id, label=label)

    @classmethod
    def from_grid(cls, grid, d_v: int, id=None, label=None):
        return cls(grid, d_v, id=id, label=label)

    @property
    def grid(self) -> np.ndarray:
        """Read-only ``(order, order, d)`` attribute grid."""
        return self._grid

    @property
    def order(self) -> int:
        return self._grid.shape[0]

    @property
    def d(self) -> int:
        return self._grid.shape[2]

    @property
    def d_v(self) -> int:
        return self._d_v

    @property
    def d_e(self) -> int:
        return self.d - self._d_v

    @property
    def space(self) -> AttributeSpace:
        return AttributeSpace(self.d_v, self.d_e)

    @property
    def node_attrs(self) -> np.ndarray:
        idx = np.arange(self.order)
        return self._grid[idx, idx, : self._d_v]

    @property
    def edges(self) -> list[tuple[int, int, np.ndarray]]:
        """Edges ``(i, j, attr)`` with ``i < j``, in row-major order."""
        if self._edges is None:
            iu, ju = np.triu_indices(self.order, k=1)
            mask = np.any(self._grid[iu, ju], axis=-1)
            self._edges = [(int(i), int(j), self._grid[i, j, self._d_v:]) for i, j in zip(iu[mask], ju[mask])]
        return self._edges

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def with_meta(self, id=None, label=None) -> "AttributedGraph":
        g = AttributedGraph.__new__(AttributedGraph)
        g._grid, g._d_v, g._edges = self._grid, self._d_v, self._edges
        g.id, g.label = id, label
        return g

    def trimmed(self) -> "AttributedGraph":
        """Drop isolated all-zero vertices (keeps at least one vertex)."""
        keep = np.any(self._grid.reshape(self.order, -1), axis=1)
        if keep.all():
            return self
        if not keep.any():
            keep[0] = True
        idx = np.flatnonzero(keep)
        return AttributedGraph(self._grid[np.ix_(idx, idx)], self._d_v, id=self.id, label=self.label)

    def same_attributes(self, other: "AttributedGraph") -> bool:
        return self._d_v == other._d_v and np.array_equal(self._grid, other._grid)

    def __repr__(self):
        return f"AttributedGraph(id={self.id!r}, order={self.order}, edges={self.n_edges}, d_v={self.d_v}, d_e={self.d_e})"


def build_graph(nodes, edges: Iterable = (), *, edge_flag: bool = True, d_e: int | None = None, id=None, label=None):
    """Convenience constructor mirroring dataset ingestion.

    ``edges`` holds ``(i, j)`` pairs or ``(i, j, attr)`` triples. With
    ``edge_flag`` a constant 1.0 is prepended to every edge attribute.
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    if nodes.ndim == 1:
        nodes = nodes[:, None]
    triples = []
    for e in edges:
        i, j = e[0], e[1]
        a = np.atleast_1d(np.asarray(e[2] if len(e) > 2 else [], dtype=np.float64))
        if edge_flag:
            a = np.concatenate([[1.0], a])
        triples.append((i, j, a))
    if d_e is None and not triples:
        d_e = 1 if edge_flag else 0
    return AttributedGraph.from_parts(nodes, triples, d_e=d_e, id=id, label=label)


@dataclass(frozen=True)
class Representation:
    """Vector representation of an ``n x n`` attribute matrix.

    ``data`` concatenates the columns of the matrix, each cell contributing
    ``d`` consecutive reals.
    """

    n: int
    d: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.data.shape != (self.n * self.n * self.d,):
            raise DimensionError(f"data has shape {self.data.shape}, expected ({self.n * self.n * self.d},)")

    @classmethod
    def from_grid(cls, grid: np.ndarray) -> "Representation":
        n, _, d = grid.shape
        data = np.ascontiguousarray(grid.transpose(1, 0, 2)).reshape(-1)
        data.setflags(write=False)
        return cls(n, d, data)

    @property
    def grid(self) -> np.ndarray:
        return self.data.reshape(self.n, self.n, self.d).transpose(1, 0, 2)


def pad_grid(grid: np.ndarray, n: int) -> np.ndarray:
    m = grid.shape[0]
    if n < m:
        raise InvalidPaddingError(f"cannot pad order {m} down to {n}")
    if n == m:
        return grid
    out = np.zeros((n, n, grid.shape[2]))
    out[:m, :m] = grid
    return out


def embed(g: AttributedGraph, n: int | None = None, space: AttributeSpace | None = None) -> Representation:
    """Vector representation of ``g`` padded to order ``n``."""
    if space is not None and (space.d_v, space.d_e) != (g.d_v, g.d_e):
        raise DimensionError(f"graph dimensions ({g.d_v}, {g.d_e}) do not match space ({space.d_v}, {space.d_e})")
    n = g.order if n is None else n
    return Representation.from_grid(pad_grid(g.grid, n))


def check_permutation(p: Sequence[int], n: int) -> np.ndarray:
    p = np.asarray(p)
    if p.shape != (n,) or not np.issubdtype(p.dtype, np.integer) or not np.array_equal(np.sort(p), np.arange(n)):
        raise InvalidPermutationError(f"{list(p)!r} is not a permutation of range({n})")
    return p


def permute_grid(grid: np.ndarray, p) -> np.ndarray:
    """Cell ``(i, j)`` of the result is cell ``(p[i], p[j])`` of ``grid``."""
    p = np.asarray(p)
    return grid[np.ix_(p, p)]


def permute(x: Representation, p: Sequence[int]) -> Representation:
    p = check_permutation(p, x.n)
    return Representation.from_grid(permute_grid(x.grid, p))


def inverse_permutation(p) -> np.ndarray:
    p = np.asarray(p)
    inv = np.empty_like(p)
    inv[p] = np.arange(p.shape[0])
    return inv


def euclidean_distance(x: Representation, y: Representation) -> float:
    if (x.n, x.d) != (y.n, y.d):
        raise DimensionError(f"shape mismatch: (n={x.n}, d={x.d}) vs (n={y.n}, d={y.d})")
    return float(np.linalg.norm(x.data - y.data))


def check_compatible(x: AttributedGraph, y: AttributedGraph) -> None:
    if x.d != y.d or x.d_v != y.d_v:
        raise DimensionError(f"incompatible attribute spaces ({x.d_v}+{x.d_e}) vs ({y.d_v}+{y.d_e})")

"""Graph distance D(X, Y) = min over vertex permutations of the Euclidean distance.

Two solvers are provided: an exact depth-first branch-and-bound search and
the graduated assignment (softassign) heuristic.  Both return an
:class:`Alignment` whose distance is recomputed from the chosen permutation,
so an approximate solver can only over-estimate D.

All distance evaluations go through a :class:`DistanceOracle`, which counts
them.  The count is the speed measure reported by the clustering code.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import AnnealingDiverged, ConfigError
from .graphs import AttributedGraph, check_compatible, inverse_permutation, pad_grid, permute_grid

EXACT = "exact"
GA = "ga"


@dataclass(frozen=True)
class Alignment:
    """Optimal (or approximate) alignment of the second graph onto the first.

    ``permutation[i]`` is the vertex of the second graph matched to vertex
    ``i`` of the first, both padded to ``len(permutation)`` vertices.
    """

    permutation: tuple[int, ...]
    distance: float
    exact: bool

    def inverse(self) -> "Alignment":
        return Alignment(tuple(int(v) for v in inverse_permutation(self.permutation)), self.distance, self.exact)


@dataclass(frozen=True)
class GaParams:
    beta0: float = 0.5
    beta_rate: float = 1.075
    beta_max: float = 10.0
    sinkhorn_iters: int = 30
    sinkhorn_tol: float = 1e-6
    outer_iters: int = 4
    discretize: str = "greedy"

    def __post_init__(self):
        if not self.beta0 > 0:
            raise ConfigError("beta0 must be positive")
        if not self.beta_rate > 1:
            raise ConfigError("beta_rate must exceed 1")
        if not self.beta_max > self.beta0:
            raise ConfigError("beta_max must exceed beta0")
        if self.sinkhorn_iters < 1 or self.outer_iters < 1:
            raise ConfigError("iteration counts must be >= 1")
        if self.discretize not in ("greedy", "hungarian"):
            raise ConfigError(f"unknown discretization {self.discretize!r}")


def _padded_pair(x: AttributedGraph, y: AttributedGraph, padding: int | None = None):
    check_compatible(x, y)
    n = max(x.order, y.order, padding or 0)
    return pad_grid(x.grid, n), pad_grid(y.grid, n)


def _aligned_distance(A: np.ndarray, B: np.ndarray, perm) -> float:
    return float(np.linalg.norm(A - permute_grid(B, perm)))


def _cell_costs(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """C[i, j, a, b] = ||A_ij - B_ab||^2."""
    n, _, d = A.shape
    a = A.reshape(n * n, d)
    b = B.reshape(n * n, d)
    c = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    np.maximum(c, 0.0, out=c)
    return c.reshape(n, n, n, n)


def _zero_vertices(G: np.ndarray) -> np.ndarray:
    """Isolated vertices with zero attribute (padding)."""
    n = G.shape[0]
    return ~np.any(G.reshape(n, -1), axis=1)


def canonical_permutation(perm, zero_a, zero_b) -> tuple[int, ...]:
    """Lexicographically least permutation with the same cost as ``perm``.

    Isolated zero vertices are interchangeable: permuting the positions in
    ``zero_a`` among themselves, or the values in ``zero_b`` among
    themselves, leaves the aligned distance unchanged.
    """
    n = len(perm)
    free_real = sorted(perm[i] for i in range(n) if zero_a[i] and not zero_b[perm[i]])
    quota = sum(1 for i in range(n) if zero_a[i] and zero_b[perm[i]])
    zeros = sorted(a for a in range(n) if zero_b[a])
    out = list(perm)
    zi = ri = 0
    for i in range(n):
        if zero_a[i]:
            take_zero = quota > 0 and (ri == len(free_real) or zeros[zi] < free_real[ri])
            if take_zero:
                out[i] = zeros[zi]
                zi += 1
                quota -= 1
            else:
                out[i] = free_real[ri]
                ri += 1
        elif zero_b[perm[i]]:
            out[i] = zeros[zi]
            zi += 1
    return tuple(int(v) for v in out)


def branch_and_bound(A: np.ndarray, B: np.ndarray, bound: str = "zero") -> tuple[int, ...]:
    """Exact minimiser of ``||A - B[p][:, p]||`` over permutations ``p``.

    Vertices of ``A`` are expanded in decreasing attribute norm.  Isolated
    zero vertices on either side are interchangeable, so only one ordering of
    them is searched.  Completions within a relative 1e-12 of the incumbent
    count as ties, resolved towards the lexicographically smallest
    permutation.
    """
    n = A.shape[0]
    if n == 1:
        return (0,)
    C = _cell_costs(A, B)
    node = np.einsum("iiaa->ia", C)
    # each unordered pair of decided vertices is charged once, for both cells
    C2 = 2.0 * C
    zero_a, zero_b = _zero_vertices(A), _zero_vertices(B)
    order = sorted(range(n), key=lambda i: (-float(np.linalg.norm(A[i])), i))
    perm = [-1] * n
    used = np.zeros(n, dtype=bool)
    best_cost = np.inf
    best_perm = None

    def remaining_bound(depth):
        if bound == "zero" or depth == n:
            return 0.0
        rest = order[depth:]
        free = np.flatnonzero(~used)
        return float(node[np.ix_(rest, free)].min(axis=1).sum())

    def tol():
        return 0.0 if best_perm is None else 1e-12 * max(1.0, best_cost)

    def dfs(depth, cost, last_zero_target):
        nonlocal best_cost, best_perm
        if depth == n:
            cand = canonical_permutation(perm, zero_a, zero_b)
            if best_perm is None or cost < best_cost - tol() or (cost <= best_cost + tol() and cand < best_perm):
                best_cost = min(cost, best_cost)
                best_perm = cand
            return
        i = order[depth]
        done = order[:depth]
        targets = [perm[j] for j in done]
        if depth:
            inc = node[i] + C2[i, done, :, targets].sum(axis=0)
        else:
            inc = node[i]
        zero_row = zero_a[i]
        lowest_free_zero = next((a for a in range(n) if zero_b[a] and not used[a]), -1)
        for a in range(n):
            if used[a]:
                continue
            if zero_row and a <= last_zero_target:
                continue
            if not zero_row and zero_b[a] and a != lowest_free_zero:
                continue
            c = cost + inc[a]
            if c > best_cost + tol():
                continue
            perm[i] = a
            used[a] = True
            if bound != "zero" and c + remaining_bound(depth + 1) > best_cost + tol():
                used[a] = False
                perm[i] = -1
                continue
            dfs(depth + 1, c, a if zero_row else last_zero_target)
            used[a] = False
            perm[i] = -1

    dfs(0, 0.0, -1)
    return best_perm


def distance_exact(x: AttributedGraph, y: AttributedGraph, oracle: "DistanceOracle | None" = None,
                   bound: str = "zero", padding: int | None = None) -> Alignment:
    """Exact graph distance by depth-first branch-and-bound.

    Both graphs are padded to ``max(x.order, y.order, padding)`` vertices.
    """
    A, B = _padded_pair(x, y, padding)
    perm = branch_and_bound(A, B, bound=bound)
    if oracle is not None:
        oracle._tick()
    return Alignment(perm, _aligned_distance(A, B, perm), True)


def _lse(x: np.ndarray, axis: int) -> np.ndarray:
    # scipy.special.logsumexp is ~20x slower on these tiny matrices
    m = x.max(axis=axis, keepdims=True)
    return m + np.log(np.exp(x - m).sum(axis=axis, keepdims=True))


def softassign(A: np.ndarray, B: np.ndarray, params: GaParams) -> np.ndarray:
    """Doubly stochastic match matrix from graduated assignment.

    Minimises the relaxed cost ``sum_ia M_ia node_ia + sum_{i!=j, a!=b}
    M_ia M_jb ||A_ij - B_ab||^2``.  Sinkhorn balancing runs in the log domain.
    """
    n = A.shape[0]
    C = _cell_costs(A, B)
    node = np.einsum("iiaa->ia", C).copy()
    idx = np.arange(n)
    C[idx, idx] = 0.0
    C[:, :, idx, idx] = 0.0
    if not (np.all(np.isfinite(C)) and np.all(np.isfinite(node))):
        raise AnnealingDiverged("non-finite compatibilities")
    # K[(i, a), (j, b)] = C[i, j, a, b], so the quadratic gradient is a mat-vec
    K = 2.0 * C.transpose(0, 2, 1, 3).reshape(n * n, n * n)
    M = np.full((n, n), 1.0 / n)
    beta = params.beta0
    while beta <= params.beta_max:
        for _ in range(params.outer_iters):
            logm = -beta * (node + (K @ M.reshape(-1)).reshape(n, n))
            for it in range(params.sinkhorn_iters):
                rows = _lse(logm, 1)
                if it and np.max(np.abs(np.expm1(rows))) < params.sinkhorn_tol:
                    break
                logm = logm - rows
                logm = logm - _lse(logm, 0)
            new = np.exp(logm)
            if not np.all(np.isfinite(new)):
                raise AnnealingDiverged(f"softassign diverged at beta={beta:.4g}")
            delta = np.max(np.abs(new - M))
            M = new
            if delta < params.sinkhorn_tol:
                break
        beta *= params.beta_rate
    return M


def discretize_greedy(M: np.ndarray) -> tuple[int, ...]:
    """Repeatedly fix the largest remaining entry; ties go to the lowest (row, column)."""
    n = M.shape[0]
    W = np.array(M, dtype=np.float64)
    perm = [-1] * n
    for _ in range(n):
        i, a = np.unravel_index(np.argmax(W), W.shape)
        perm[i] = int(a)
        W[i, :] = -np.inf
        W[:, a] = -np.inf
    return tuple(perm)


def discretize_hungarian(M: np.ndarray) -> tuple[int, ...]:
    rows, cols = linear_sum_assignment(-M)
    perm = [0] * M.shape[0]
    for i, a in zip(rows, cols):
        perm[i] = int(a)
    return tuple(perm)


def distance_ga(x: AttributedGraph, y: AttributedGraph, params: GaParams | None = None,
                oracle: "DistanceOracle | None" = None, padding: int | None = None) -> Alignment:
    """Approximate graph distance by graduated assignment (upper-bounds D)."""
    params = params or GaParams()
    A, B = _padded_pair(x, y, padding)
    if A.shape[0] == 1:
        perm = (0,)
    else:
        M = softassign(A, B, params)
        perm = discretize_greedy(M) if params.discretize == "greedy" else discretize_hungarian(M)
    if oracle is not None:
        oracle._tick()
    return Alignment(perm, _aligned_distance(A, B, perm), False)


class DistanceOracle:
    """Counting front-end for a graph matcher.

    ``calls`` grows by one for every distance actually computed.  With
    ``memoize=True`` results for graphs carrying non-``None`` ids are cached
    under the unordered id pair and served without counting.

    ``padding`` fixes the order n of the space X_n in which distances are
    taken: both operands are padded to ``max(n, x.order, y.order)``.  D is a
    metric only among graphs compared at a common n, so clustering runs set
    it to the sample's largest order (see :meth:`padded`).  ``None`` pads
    each pair to the larger of its two orders.
    """

    def __init__(self, kind: str = EXACT, ga_params: GaParams | None = None, memoize: bool = False,
                 bound: str = "zero", padding: int | None = None):
        if kind not in (EXACT, GA):
            raise ConfigError(f"unknown matcher {kind!r}")
        if bound not in ("zero", "node"):
            raise ConfigError(f"unknown bound {bound!r}")
        self.kind = kind
        self.ga_params = ga_params or GaParams()
        self.memoize = memoize
        self.bound = bound
        if padding is not None and padding < 1:
            raise ConfigError("padding must be positive")
        self.padding = padding
        self.calls = 0
        self.memo_hits = 0
        self._lock = threading.Lock()
        self._cache: dict = {}

    @property
    def exact(self) -> bool:
        return self.kind == EXACT

    def _tick(self):
        with self._lock:
            self.calls += 1

    def clone(self) -> "DistanceOracle":
        """Fresh oracle with the same configuration and a zero counter."""
        return DistanceOracle(self.kind, self.ga_params, self.memoize, self.bound, self.padding)

    @contextmanager
    def padded(self, n: int):
        """Temporarily raise the padding to at least ``n``."""
        old = self.padding
        self.padding = max(n, old or 0)
        try:
            yield self
        finally:
            self.padding = old

    def align(self, x: AttributedGraph, y: AttributedGraph) -> Alignment:
        key = None
        if self.memoize and x.id is not None and y.id is not None:
            key = (x.id, y.id) if str(x.id) <= str(y.id) else (y.id, x.id)
            with self._lock:
                hit = self._cache.get((key, self.padding))
            if hit is not None:
                with self._lock:
                    self.memo_hits += 1
                return hit if key == (x.id, y.id) else hit.inverse()
        if self.kind == EXACT:
            result = distance_exact(x, y, self, bound=self.bound, padding=self.padding)
        else:
            result = distance_ga(x, y, self.ga_params, self, padding=self.padding)
        if key is not None:
            stored = result if key == (x.id, y.id) else result.inverse()
            with self._lock:
                stored = self._cache.setdefault((key, self.padding), stored)
            result = stored if key == (x.id, y.id) else stored.inverse()
        return result

    def distance(self, x: AttributedGraph, y: AttributedGraph) -> float:
        return self.align(x, y).distance

    def __repr__(self):
        return (f"DistanceOracle(kind={self.kind!r}, calls={self.calls}, memoize={self.memoize}, "
                f"padding={self.padding})")


def inter_centroid_distances(centroids: Sequence[AttributedGraph], oracle: DistanceOracle) -> np.ndarray:
    """Symmetric matrix of pairwise centroid distances (k(k-1)/2 evaluations)."""
    k = len(centroids)
    if k < 1:
        raise ConfigError("need at least one centroid")
    out = np.zeros((k, k))
    for a in range(k):
        for b in range(a + 1, k):
            out[a, b] = out[b, a] = oracle.distance(centroids[a], centroids[b])
    return out

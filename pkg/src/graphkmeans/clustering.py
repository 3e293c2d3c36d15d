"""Standard and Elkan-accelerated k-means in a graph metric space.

Both algorithms share initialisation (a furthest-first variant seeded with
the sample member closest to the sample mean), centroid recomputation (one
IAM pass per cluster), empty-cluster handling and termination (stop after
``no_improve_limit`` iterations without improving the cluster objective).
Given the exact matcher and the same seed they visit identical partitions;
Elkan's variant skips distance evaluations that the triangle inequality
proves unnecessary.

Every distance evaluation is counted per iteration and per phase:

- ``assignment``: pattern-to-centroid distances of the assignment step
- ``intercentroid``: centroid-to-centroid distances (Elkan only)
- ``objective``: refreshes of out-of-date upper bounds needed to evaluate
  the objective exactly (Elkan only)
- ``mean``: alignments made while recomputing centroids
- ``drift``: distances between old and recomputed centroids (Elkan only)
"""
from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, EmptySampleError
from .graphs import AttributedGraph, check_compatible
from .matching import EXACT, DistanceOracle, inter_centroid_distances
from .mean import iam_mean

STD = "std"
ELKAN = "elkan"
REPAIR_FARTHEST = "repair-farthest"
DROP = "drop"
BOUND_TOL = 1e-9


@dataclass(frozen=True)
class ClusterConfig:
    k: int
    max_iters: int = 100
    no_improve_limit: int = 3
    matcher: str = EXACT
    run_seed: int = 0
    empty_cluster_policy: str = REPAIR_FARTHEST
    verification_mode: bool = False
    threads: int = 1

    def validate(self, n_samples: int) -> None:
        if n_samples == 0:
            raise EmptySampleError("cannot cluster an empty sample")
        if not 1 <= self.k <= n_samples:
            raise ConfigError(f"k={self.k} must lie in [1, {n_samples}]")
        if self.no_improve_limit < 1:
            raise ConfigError("no_improve_limit must be >= 1")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.empty_cluster_policy not in (REPAIR_FARTHEST, DROP):
            raise ConfigError(f"unknown empty-cluster policy {self.empty_cluster_policy!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.verification_mode and self.matcher != EXACT:
            raise ConfigError("verification mode requires the exact matcher")


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    assignment: tuple[int, ...]
    k: int
    matchings: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.matchings.values())


@dataclass
class VerificationLog:
    """Bound and pruning checks against recomputed true distances."""

    checks: int = 0
    violations: list[str] = field(default_factory=list)


@dataclass
class ClusteringResult:
    algorithm: str
    centroids: list[AttributedGraph]
    assignment: np.ndarray
    objective: float
    best_iteration: int
    history: list[IterationRecord]
    init_matchings: int
    seed: int
    verification: VerificationLog | None = None

    @property
    def k(self) -> int:
        return len(self.centroids)

    @property
    def membership(self) -> np.ndarray:
        return membership_matrix(self.assignment, self.k)

    @property
    def iterations(self) -> int:
        return len(self.history)

    @property
    def objective_trace(self) -> list[float]:
        return [h.objective for h in self.history]

    @property
    def matchings_per_iteration(self) -> list[int]:
        return [h.total for h in self.history]

    @property
    def matchings_total(self) -> int:
        return self.init_matchings + sum(self.matchings_per_iteration)


def membership_matrix(assignment, k: int) -> np.ndarray:
    """Binary N x k matrix with a single 1 per row."""
    assignment = np.asarray(assignment, dtype=int)
    if assignment.size and (assignment.min() < 0 or assignment.max() >= k):
        raise ConfigError("assignment index out of range")
    m = np.zeros((assignment.shape[0], k), dtype=np.int8)
    m[np.arange(assignment.shape[0]), assignment] = 1
    return m


def derive_seed(run_seed: int, cluster: int, iteration: int) -> tuple[int, int, int]:
    """Seed of the IAM shuffle for ``cluster`` at ``iteration`` (0 = initialisation)."""
    return (int(run_seed), int(cluster), int(iteration))


def _map(fn: Callable, items, threads: int) -> list:
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _check_sample(sample: Sequence[AttributedGraph]) -> list[AttributedGraph]:
    sample = list(sample)
    for g in sample[1:]:
        check_compatible(sample[0], g)
    return sample


def _oracle_for(config: ClusterConfig, oracle: DistanceOracle | None) -> DistanceOracle:
    if oracle is None:
        return DistanceOracle(config.matcher)
    if config.verification_mode and not oracle.exact:
        raise ConfigError("verification mode requires the exact matcher")
    return oracle


def furthest_first_indices(sample: Sequence[AttributedGraph], k: int, oracle: DistanceOracle, seed=0) -> list[int]:
    N = len(sample)
    if not 1 <= k <= N:
        raise ConfigError(f"k={k} must lie in [1, {N}]")
    mean = iam_mean(sample, seed=seed, oracle=oracle, compute_ssd=False).mean
    to_mean = np.array([oracle.distance(x, mean) for x in sample])
    chosen = [int(np.argmin(to_mean))]
    nearest = np.full(N, np.inf)
    while len(chosen) < k:
        last = sample[chosen[-1]]
        for i in range(N):
            if i not in chosen:
                nearest[i] = min(nearest[i], oracle.distance(sample[i], last))
        nearest[chosen] = -np.inf
        chosen.append(int(np.argmax(nearest)))
    return chosen


def init_furthest_first(sample: Sequence[AttributedGraph], k: int, oracle: DistanceOracle, seed=0) -> list[AttributedGraph]:
    """Initial centroids: the member closest to the IAM sample mean, then
    repeatedly the member furthest from all centroids chosen so far."""
    return [sample[i].with_meta(sample[i].id, sample[i].label) for i in furthest_first_indices(sample, k, oracle, seed)]


@dataclass
class EmptyClusterChange:
    repaired: list[tuple[int, int]] = field(default_factory=list)  # (cluster, pattern)
    kept: list[int] | None = None  # surviving cluster indices when dropping


def handle_empty_clusters(sample, centroids, assignment, distances, policy=REPAIR_FARTHEST):
    """Fix clusters left without members after an assignment step.

    ``repair-farthest`` re-seeds each empty cluster (in index order) with the
    pattern furthest from its own centroid among clusters that keep at least
    one other member.  ``drop`` removes empty clusters.  ``distances`` holds
    each pattern's distance to its assigned centroid, so no new distance is
    evaluated.  Returns new ``(centroids, assignment, distances, change)``.
    """
    centroids = list(centroids)
    assignment = np.array(assignment, dtype=int)
    distances = np.array(distances, dtype=np.float64)
    k = len(centroids)
    change = EmptyClusterChange()
    sizes = np.bincount(assignment, minlength=k)
    empty = np.flatnonzero(sizes == 0)
    if empty.size == 0:
        return centroids, assignment, distances, change
    if policy == DROP:
        kept = [j for j in range(k) if sizes[j] > 0]
        remap = np.full(k, -1)
        remap[kept] = np.arange(len(kept))
        change.kept = kept
        return [centroids[j] for j in kept], remap[assignment], distances, change
    for j in empty:
        sizes = np.bincount(assignment, minlength=k)
        eligible = np.flatnonzero(sizes[assignment] >= 2)
        i = int(eligible[np.argmax(distances[eligible])])
        assignment[i] = j
        distances[i] = 0.0
        centroids[j] = sample[i].with_meta(sample[i].id, sample[i].label)
        change.repaired.append((int(j), i))
    return centroids, assignment, distances, change


def _recompute(sample, assignment, k, run_seed, iteration, oracle, threads):
    def one(j):
        members = [sample[i] for i in np.flatnonzero(assignment == j)]
        return iam_mean(members, seed=derive_seed(run_seed, j, iteration), oracle=oracle,
                        compute_ssd=False, trim=True).mean
    return _map(one, range(k), threads)


def _objective(distances) -> float:
    return math.fsum(float(d) * float(d) for d in distances)


class _Progress:
    def __init__(self, limit):
        self.limit = limit
        self.best = math.inf
        self.best_state = None
        self.stale = 0

    def update(self, objective, state) -> bool:
        """Record an iteration; True when the run should stop."""
        if objective < self.best:
            self.best = objective
            self.best_state = state
            self.stale = 0
        else:
            self.stale += 1
        return self.stale >= self.limit


def _padded_run(fn, sample, config, oracle):
    """Validate, then run ``fn`` with every distance taken in X_n, n = the sample's largest order."""
    sample = _check_sample(sample)
    config.validate(len(sample))
    oracle = _oracle_for(config, oracle)
    with oracle.padded(max(g.order for g in sample)):
        return fn(sample, config, oracle)


def _start(sample, config, oracle):
    mark = oracle.calls
    centroids = init_furthest_first(sample, config.k, oracle, seed=derive_seed(config.run_seed, 0, 0))
    return sample, oracle, centroids, oracle.calls - mark


def kmeans_std(sample: Sequence[AttributedGraph], config: ClusterConfig,
               oracle: DistanceOracle | None = None) -> ClusteringResult:
    """k-means for graphs: full assignment (k*N distances) then IAM recomputation."""
    return _padded_run(_kmeans_std, sample, config, oracle)


def _kmeans_std(sample, config, oracle):
    sample, oracle, centroids, init_calls = _start(sample, config, oracle)
    N = len(sample)
    progress = _Progress(config.no_improve_limit)
    history = []
    for t in range(1, config.max_iters + 1):
        mark = oracle.calls
        D = np.array(_map(lambda x: [oracle.distance(x, c) for c in centroids], sample, config.threads))
        assignment = np.argmin(D, axis=1)
        dist = D[np.arange(N), assignment]
        phases = {"assignment": oracle.calls - mark}
        centroids, assignment, dist, _ = handle_empty_clusters(sample, centroids, assignment, dist,
                                                                config.empty_cluster_policy)
        objective = _objective(dist)
        k = len(centroids)
        mark = oracle.calls
        new = _recompute(sample, assignment, k, config.run_seed, t, oracle, config.threads)
        phases["mean"] = oracle.calls - mark
        history.append(IterationRecord(t, objective, tuple(int(a) for a in assignment), k, phases))
        stop = progress.update(objective, (t, list(centroids), assignment.copy()))
        centroids = new
        if stop:
            break
    best_t, best_centroids, best_assignment = progress.best_state
    return ClusteringResult(STD, best_centroids, best_assignment, progress.best, best_t, history,
                            init_calls, config.run_seed)


class _Verifier:
    """Recomputes true distances with an uncounted oracle and checks bounds."""

    def __init__(self, sample, oracle: DistanceOracle):
        self.sample = sample
        self.oracle = oracle
        self.log = VerificationLog()
        self.truth = None
        self._lock = threading.Lock()

    def begin(self, centroids):
        self.truth = np.array([[self.oracle.distance(x, c) for c in centroids] for x in self.sample])

    def bounds(self, i, j, a, lower, upper, where):
        msgs = []
        if lower[i, j] > self.truth[i, j] + BOUND_TOL:
            msgs.append(f"{where}: l({i},{j})={lower[i, j]!r} > D={self.truth[i, j]!r}")
        if upper[i] < self.truth[i, a] - BOUND_TOL:
            msgs.append(f"{where}: u({i})={upper[i]!r} < D(X,Y_X)={self.truth[i, a]!r}")
        self._record(msgs)

    def pruned(self, i, j, a, where):
        msgs = []
        if self.truth[i, a] > self.truth[i, j] + BOUND_TOL:
            msgs.append(f"{where}: pruned ({i},{j}) but D(X,Y_X)={self.truth[i, a]!r} > D(X,Y)={self.truth[i, j]!r}")
        self._record(msgs)

    def _record(self, msgs):
        with self._lock:
            self.log.checks += 1
            self.log.violations.extend(msgs)


def kmeans_elkan(sample: Sequence[AttributedGraph], config: ClusterConfig,
                 oracle: DistanceOracle | None = None) -> ClusteringResult:
    """Elkan's k-means for graphs.

    Keeps an upper bound ``u(X) >= D(X, Y_X)`` and lower bounds
    ``l(X, Y) <= D(X, Y)``.  The pair ``(X, Y)`` is skipped when ``Y = Y_X``,
    ``u(X) <= D(Y_X, Y) / 2`` or ``u(X) <= l(X, Y)``.  An out-of-date upper
    bound is refreshed only when some centroid survives these tests, after
    which the tests are repeated.  After the centroids move by ``delta``,
    ``l(X, Y) <- max(l(X, Y) - delta(Y), 0)`` and ``u(X) <- u(X) + delta(Y_X)``;
    ``u(X)`` becomes out-of-date only if ``delta(Y_X) > 0``.
    """
    return _padded_run(_kmeans_elkan, sample, config, oracle)


def _kmeans_elkan(sample, config, oracle):
    sample, oracle, centroids, init_calls = _start(sample, config, oracle)
    N, k = len(sample), config.k
    rng = np.random.default_rng(derive_seed(config.run_seed, 0, 0) + (1,))
    assignment = rng.integers(k, size=N)
    lower = np.zeros((N, k))
    upper = np.full(N, np.inf)
    stale = np.ones(N, dtype=bool)
    verifier = _Verifier(sample, oracle.clone()) if config.verification_mode else None
    progress = _Progress(config.no_improve_limit)
    history = []

    for t in range(1, config.max_iters + 1):
        k = len(centroids)
        phases = {}
        mark = oracle.calls
        between = inter_centroid_distances(centroids, oracle)
        phases["intercentroid"] = oracle.calls - mark
        if verifier:
            verifier.begin(centroids)

        def candidate(i, j):
            a = assignment[i]
            if verifier:
                verifier.bounds(i, j, a, lower, upper, f"iter {t}")
            if j == a:
                return False
            # a lower-index centroid wins a tie, so it may only be skipped on a strict bound
            if j < a:
                skip = upper[i] < 0.5 * between[a, j] or upper[i] < lower[i, j]
            else:
                skip = upper[i] <= 0.5 * between[a, j] or upper[i] <= lower[i, j]
            if skip:
                if verifier:
                    verifier.pruned(i, j, a, f"iter {t}")
                return False
            return True

        def visit(i):
            x = sample[i]
            for j in range(k):
                if not candidate(i, j):
                    continue
                if stale[i]:
                    a = assignment[i]
                    d = oracle.distance(x, centroids[a])
                    upper[i] = d
                    lower[i, a] = d
                    stale[i] = False
                    if not candidate(i, j):
                        continue
                d = oracle.distance(x, centroids[j])
                lower[i, j] = d
                if d < upper[i] or (d == upper[i] and j < assignment[i]):
                    upper[i] = d
                    assignment[i] = j

        mark = oracle.calls
        _map(visit, range(N), config.threads)
        phases["assignment"] = oracle.calls - mark

        mark = oracle.calls

        def refresh(i):
            a = assignment[i]
            upper[i] = oracle.distance(sample[i], centroids[a])
            lower[i, a] = upper[i]
            stale[i] = False

        _map(refresh, np.flatnonzero(stale), config.threads)
        phases["objective"] = oracle.calls - mark

        centroids, assignment, dist, change = handle_empty_clusters(sample, centroids, assignment, upper,
                                                                    config.empty_cluster_policy)
        upper = dist
        if change.kept is not None:
            lower = lower[:, change.kept]
        for j, i in change.repaired:
            lower[:, j] = 0.0
            stale[i] = False
        k = len(centroids)
        objective = _objective(upper)

        mark = oracle.calls
        new = _recompute(sample, assignment, k, config.run_seed, t, oracle, config.threads)
        phases["mean"] = oracle.calls - mark
        mark = oracle.calls
        delta = np.array([oracle.distance(centroids[j], new[j]) for j in range(k)])
        phases["drift"] = oracle.calls - mark

        history.append(IterationRecord(t, objective, tuple(int(a) for a in assignment), k,
                                       {p: phases[p] for p in ("intercentroid", "assignment", "objective", "mean", "drift")}))
        stop = progress.update(objective, (t, list(centroids), assignment.copy()))

        moved = delta[assignment]
        upper = upper + moved
        stale |= moved > 0
        lower = np.maximum(lower - delta[None, :], 0.0)
        centroids = new
        if stop:
            break

    best_t, best_centroids, best_assignment = progress.best_state
    return ClusteringResult(ELKAN, best_centroids, best_assignment, progress.best, best_t, history,
                            init_calls, config.run_seed, verifier.log if verifier else None)


ALGORITHMS = {STD: kmeans_std, ELKAN: kmeans_elkan}


def run_kmeans(sample, config: ClusterConfig, algorithm: str = ELKAN, oracle: DistanceOracle | None = None):
    try:
        fn = ALGORITHMS[algorithm]
    except KeyError:
        raise ConfigError(f"unknown algorithm {algorithm!r}") from None
    return fn(sample, config, oracle)


def best_of_runs(sample, config: ClusterConfig, algorithm: str, runs: int,
                 oracle_factory: Callable[[], DistanceOracle] | None = None) -> tuple[ClusteringResult, list[ClusteringResult]]:
    """Run with seeds ``run_seed + r`` for ``r < runs`` and keep the lowest objective (first on ties)."""
    if runs < 1:
        raise ConfigError("runs must be >= 1")
    results = []
    for r in range(runs):
        cfg = replace(config, run_seed=config.run_seed + r)
        oracle = oracle_factory() if oracle_factory else None
        results.append(run_kmeans(sample, cfg, algorithm, oracle))
    best = min(range(runs), key=lambda r: (results[r].objective, r))
    return results[best], results

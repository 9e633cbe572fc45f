"""Column clusterings, the cluster-averaging projection and a K-means engine.

Objects are the *columns* of an ``n x M`` matrix.  Labels are 0-based
integers in ``range(K)``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import DimensionError, ParameterError


@dataclass(frozen=True)
class ClusteringAssignment:
    """A map ``z: [M] -> [K]`` with every cluster nonempty.

    Parameters
    ----------
    labels : array-like of int, shape (M,)
        Cluster label of each column, values in ``0..K-1``.
    K : int, optional
        Number of clusters.  Defaults to ``max(labels) + 1``.
    """

    labels: np.ndarray
    K: int = None

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.size == 0:
            raise DimensionError("labels must be a nonempty 1-D sequence")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise ParameterError("labels must be integers")
            labels = labels.astype(int)
        K = int(labels.max()) + 1 if self.K is None else int(self.K)
        if labels.min() < 0 or labels.max() >= K:
            raise ParameterError(f"labels must lie in 0..{K - 1}")
        labels = labels.astype(np.intp, copy=True)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "K", K)
        if np.any(self.sizes == 0):
            raise ParameterError("every cluster must be nonempty")

    @property
    def M(self):
        return self.labels.size

    @property
    def sizes(self):
        """Cluster sizes, the diagonal of ``Z^T Z``."""
        return np.bincount(self.labels, minlength=self.K)

    def matrix(self):
        """The ``M x K`` 0/1 membership matrix ``Z``."""
        Z = np.zeros((self.M, self.K))
        Z[np.arange(self.M), self.labels] = 1.0
        return Z

    def projection(self):
        """``Z (Z^T Z)^{-1} Z^T``, the ``M x M`` within-cluster averaging matrix."""
        Z = self.matrix()
        return Z @ np.diag(1.0 / self.sizes) @ Z.T

    def canonical(self):
        """Relabel so clusters are numbered in order of first appearance."""
        _, first = np.unique(self.labels, return_index=True)
        order = np.argsort(first)
        remap = np.empty(self.K, dtype=np.intp)
        remap[order] = np.arange(self.K)
        return ClusteringAssignment(remap[self.labels], self.K)

    def __eq__(self, other):
        if not isinstance(other, ClusteringAssignment):
            return NotImplemented
        return self.K == other.K and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash((self.K, self.labels.tobytes()))

    def to_dict(self):
        return {"K": self.K, "labels": self.labels.tolist()}

    @classmethod
    def singletons(cls, M):
        return cls(np.arange(M), M)

    @classmethod
    def balanced_random(cls, M, K, rng):
        """Place ``M/K`` objects into each of ``K`` classes uniformly at random."""
        if K < 1 or M % K:
            raise ParameterError(f"balanced design needs K >= 1 dividing M, got M={M}, K={K}")
        rng = np.random.default_rng(rng)
        return cls(rng.permutation(np.repeat(np.arange(K), M // K)), K)


@dataclass(frozen=True)
class KMeansConfig:
    """Settings of the restarted Lloyd algorithm."""

    restarts: int = 50
    max_iters: int = 300
    tol: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1:
            raise ParameterError("restarts and max_iters must be >= 1")
        if self.tol < 0:
            raise ParameterError("tol must be nonnegative")


def project_columns(G, assignment):
    """Replace each column of ``G`` by the mean of the columns in its cluster.

    Equals ``G @ Z (Z^T Z)^{-1} Z^T``.
    """
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[1] != assignment.M:
        raise DimensionError(f"matrix has shape {G.shape}; expected {assignment.M} columns")
    sums = np.zeros((G.shape[0], assignment.K))
    np.add.at(sums.T, assignment.labels, G.T)
    means = sums / assignment.sizes
    return means[:, assignment.labels]


def within_cluster_sum_of_squares(G, assignment):
    """``||G - project_columns(G, assignment)||_F^2``."""
    G = np.asarray(G, dtype=float)
    return float(np.sum((G - project_columns(G, assignment)) ** 2))


@dataclass
class _LloydRun:
    labels: np.ndarray
    objective: float
    history: list = field(default_factory=list)


def _kmeans_plusplus(P, K, rng):
    # P holds points as rows
    M = P.shape[0]
    centers = np.empty((K, P.shape[1]))
    centers[0] = P[rng.integers(M)]
    d2 = np.sum((P - centers[0]) ** 2, axis=1)
    for k in range(1, K):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(M)
        else:
            idx = rng.choice(M, p=d2 / total)
        centers[k] = P[idx]
        d2 = np.minimum(d2, np.sum((P - centers[k]) ** 2, axis=1))
    return centers


def _sq_distances(P, centers, p_norms):
    d2 = p_norms[:, None] - 2.0 * P @ centers.T + np.sum(centers**2, axis=1)[None, :]
    return np.maximum(d2, 0.0)


def _repair_empty(labels, d2, K):
    # move the point farthest from its centroid into each empty cluster
    sizes = np.bincount(labels, minlength=K)
    for k in np.flatnonzero(sizes == 0):
        own = d2[np.arange(labels.size), labels].copy()
        own[sizes[labels] <= 1] = -np.inf
        m = int(np.argmax(own))
        sizes[labels[m]] -= 1
        labels[m] = k
        sizes[k] = 1
    return labels


def _lloyd(P, K, rng, max_iters, tol):
    M = P.shape[0]
    p_norms = np.sum(P**2, axis=1)
    centers = _kmeans_plusplus(P, K, rng)
    labels = None
    history = []
    for _ in range(max_iters):
        d2 = _sq_distances(P, centers, p_norms)
        new_labels = np.argmin(d2, axis=1)  # first minimum: lowest cluster index wins ties
        new_labels = _repair_empty(new_labels, d2, K)
        sizes = np.bincount(new_labels, minlength=K)
        centers = np.zeros_like(centers)
        np.add.at(centers, new_labels, P)
        centers /= sizes[:, None]
        obj = float(np.sum((P - centers[new_labels]) ** 2))
        history.append(obj)
        converged = labels is not None and np.array_equal(labels, new_labels)
        labels = new_labels
        if converged or (len(history) > 1 and history[-2] - obj <= tol * max(history[-2], 1e-300)):
            break
    return _LloydRun(labels, history[-1], history)


def kmeans_columns(G, K, config=None):
    """Cluster the columns of ``G`` into ``K`` groups.

    Runs ``config.restarts`` Lloyd iterations from k-means++ starts, each
    restart with its own seed spawned from ``config.seed``, and keeps the
    run with the smallest within-cluster sum of squares (lowest restart
    index on ties).

    Returns
    -------
    assignment : ClusteringAssignment
    objective : float
        ``||G - project_columns(G, assignment)||_F^2``.
    """
    config = config or KMeansConfig()
    G = np.asarray(G, dtype=float)
    if G.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {G.shape}")
    M = G.shape[1]
    if not 1 <= K <= M:
        raise ParameterError(f"K must satisfy 1 <= K <= M={M}, got {K}")
    if K == M:
        a = ClusteringAssignment.singletons(M)
        return a, 0.0
    if K == 1:
        a = ClusteringAssignment(np.zeros(M, dtype=int), 1)
        return a, within_cluster_sum_of_squares(G, a)
    P = G.T
    best = None
    for child in np.random.SeedSequence(config.seed).spawn(config.restarts):
        run = _lloyd(P, K, np.random.default_rng(child), config.max_iters, config.tol)
        if best is None or run.objective < best.objective:
            best = run
    a = ClusteringAssignment(best.labels, K)
    return a, within_cluster_sum_of_squares(G, a)


def miss_rate(estimated, truth):
    """Fraction of objects misclustered under the best matching of labels.

    The matching is an exact maximum-weight assignment on the contingency
    table; when the two label sets differ in size the smaller one is padded
    with empty classes.
    """
    if estimated.M != truth.M:
        raise DimensionError(f"assignments cover {estimated.M} and {truth.M} objects")
    K = max(estimated.K, truth.K)
    table = np.zeros((K, K), dtype=int)
    np.add.at(table, (estimated.labels, truth.labels), 1)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return 1.0 - table[rows, cols].sum() / truth.M

"""Fixed matrices consumed by the solver: feature redundancy, instance graph, Laplacian."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ArgumentError

__all__ = ["AffinityGraph", "pearson_matrix", "knn_affinity", "laplacian", "knn_indices"]


def pearson_matrix(features) -> np.ndarray:
    """Absolute Pearson correlation between every pair of feature columns.

    Rows and columns of zero-variance features are all zero, diagonal included.
    """
    X = np.asarray(features, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ArgumentError("pearson_matrix needs at least two rows")
    Xc = X - X.mean(axis=0)
    norms = np.sqrt((Xc ** 2).sum(axis=0))
    live = (norms > 0) & ~np.all(X == X[0], axis=0)
    Z = np.zeros_like(Xc)
    Z[:, live] = Xc[:, live] / norms[live]
    P = np.abs(Z.T @ Z)
    np.clip(P, 0.0, 1.0, out=P)
    P = 0.5 * (P + P.T)
    P[np.diag_indices_from(P)] = live.astype(float)
    return P


def knn_indices(sq_dist: np.ndarray, k: int) -> np.ndarray:
    """For each row, the ``k`` nearest other rows; distance ties go to the lower index."""
    n = sq_dist.shape[0]
    D = sq_dist.copy()
    D[np.arange(n), np.arange(n)] = np.inf
    # stable sort keeps ascending index order among equal distances
    return np.argsort(D, axis=1, kind="stable")[:, :k]


@dataclass(frozen=True, eq=False)
class AffinityGraph:
    similarities: np.ndarray
    neighbor_k: int
    sigma: float


def knn_affinity(features, k: int = 5, sigma=None) -> AffinityGraph:
    """Heat-kernel weights on the symmetrized k-nearest-neighbour graph.

    ``sigma=None`` (or ``"auto"``) sets sigma^2 to the mean squared distance over
    connected pairs, falling back to 1 when every connected pair coincides.
    """
    X = np.asarray(features, dtype=float)
    n = X.shape[0]
    if not 1 <= k < n:
        raise ArgumentError(f"graph k must satisfy 1 <= k < n (k={k}, n={n})")
    D2 = cdist(X, X, "sqeuclidean")
    nbrs = knn_indices(D2, k)
    adj = np.zeros((n, n), dtype=bool)
    adj[np.repeat(np.arange(n), k), nbrs.ravel()] = True
    adj |= adj.T
    np.fill_diagonal(adj, False)
    if sigma is None or sigma == "auto":
        iu = np.triu_indices(n, 1)
        connected = D2[iu][adj[iu]]
        s2 = float(connected.mean()) if connected.size else 0.0
        if s2 <= 0:
            s2 = 1.0
        sigma_val = float(np.sqrt(s2))
    else:
        sigma_val = float(sigma)
        if not sigma_val > 0:
            raise ArgumentError("sigma must be positive")
        s2 = sigma_val ** 2
    S = np.where(adj, np.exp(-D2 / s2), 0.0)
    return AffinityGraph(S, k, sigma_val)


def laplacian(graph) -> np.ndarray:
    """``diag(row sums) - S`` for an affinity graph or a raw similarity matrix."""
    S = graph.similarities if isinstance(graph, AffinityGraph) else np.asarray(graph, dtype=float)
    return np.diag(S.sum(axis=1)) - S

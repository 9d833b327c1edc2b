"""k-means with k-means++ seeding, elbow curves and silhouette scores."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import ContractError

__all__ = ["ClusterResult", "kmeans", "elbow", "silhouette"]


@dataclass(frozen=True, eq=False)
class ClusterResult:
    labels: np.ndarray
    centroids: np.ndarray
    k: int
    inertia: float
    n_iter: int
    silhouette_values: np.ndarray | None = None
    elbow: dict | None = None

    @property
    def silhouette_mean(self) -> float | None:
        if self.silhouette_values is None:
            return None
        return float(self.silhouette_values.mean())


def _plusplus(M, w, k, rng):
    n = M.shape[0]
    centers = [int(rng.choice(n, p=w / w.sum()))]
    d2 = np.sum((M - M[centers[0]]) ** 2, axis=1)
    for _ in range(1, k):
        prob = w * d2
        tot = prob.sum()
        if tot <= 0:
            # every point coincides with a chosen centre: take the next unused index
            used = set(centers)
            nxt = next(i for i in range(n) if i not in used)
        else:
            nxt = int(rng.choice(n, p=prob / tot))
        centers.append(nxt)
        d2 = np.minimum(d2, np.sum((M - M[nxt]) ** 2, axis=1))
    return M[centers].copy()


def _lloyd(M, w, C, max_iter, tol):
    k = C.shape[0]
    labels = np.zeros(M.shape[0], dtype=int)
    it = 0
    for it in range(1, max_iter + 1):
        D = cdist(M, C, "sqeuclidean")
        labels = np.argmin(D, axis=1)
        newC = np.empty_like(C)
        counts = np.bincount(labels, weights=w, minlength=k)
        for j in range(k):
            if counts[j] > 0:
                newC[j] = w[labels == j] @ M[labels == j] / counts[j]
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            # reseed each empty centroid at the point farthest from its own centroid
            dist_own = D[np.arange(M.shape[0]), labels].copy()
            for j in empty:
                far = int(np.argmax(dist_own))
                newC[j] = M[far]
                dist_own[far] = -1.0
        shift = np.max(np.sum((newC - C) ** 2, axis=1))
        C = newC
        if shift <= tol and not empty.size:
            break
    D = cdist(M, C, "sqeuclidean")
    labels = np.argmin(D, axis=1)
    inertia = float(w @ D[np.arange(M.shape[0]), labels])
    return labels, C, inertia, it


def kmeans(M, k: int, seed: int = 0, *, weights=None, n_init: int = 10, max_iter: int = 300,
           tol: float = 1e-10, init=None, compute_silhouette: bool = True) -> ClusterResult:
    """Lloyd's algorithm from the best of ``n_init`` k-means++ starts.

    ``weights`` turns the objective into a weighted within-cluster sum of
    squares (unweighted by default). ``init`` adds one explicit set of
    starting centroids to the candidate starts.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    n = M.shape[0]
    if k < 1 or n < k:
        raise ContractError(f"need 1 <= k <= n, got k={k}, n={n}")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (n,) or np.any(w <= 0):
        raise ContractError("weights must be positive, one per row")
    rng = np.random.default_rng(seed)
    starts = [_plusplus(M, w, k, rng) for _ in range(n_init)]
    if init is not None:
        starts.insert(0, np.asarray(init, dtype=float).copy())
    best = None
    for C0 in starts:
        res = _lloyd(M, w, C0, max_iter, tol)
        if best is None or res[2] < best[2]:
            best = res
    labels, C, inertia, it = best
    sil = silhouette(M, labels) if compute_silhouette and 2 <= k < n else None
    return ClusterResult(labels=labels, centroids=C, k=k, inertia=inertia, n_iter=it,
                         silhouette_values=sil)


def elbow(M, k_range, seed: int = 0, **kw) -> dict[int, float]:
    """Within-cluster sum of squares for each ``k``.

    Each ``k`` is also started from the previous solution plus the worst-fit
    point, so the curve never increases.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    out: dict[int, float] = {}
    prev = None
    for k in sorted(k_range):
        init = None
        if prev is not None and prev.k == k - 1:
            D = cdist(M, prev.centroids, "sqeuclidean").min(axis=1)
            init = np.vstack([prev.centroids, M[int(np.argmax(D))]])
        res = kmeans(M, k, seed, init=init, compute_silhouette=False, **kw)
        out[k] = res.inertia
        prev = res
    return out


def silhouette(M, labels, *, chunk: int = 2048) -> np.ndarray:
    """Per-point silhouette values with Euclidean distance.

    Points in singleton clusters get 0.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    labels = np.asarray(labels)
    uniq, lab = np.unique(labels, return_inverse=True)
    k = uniq.size
    n = M.shape[0]
    if not 2 <= k <= n - 1:
        raise ContractError(f"silhouette needs 2 <= clusters <= n-1, got {k}")
    sizes = np.bincount(lab, minlength=k).astype(float)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), lab] = 1.0
    sums = np.empty((n, k))
    for s in range(0, n, chunk):
        sums[s:s + chunk] = cdist(M[s:s + chunk], M) @ onehot
    own = sizes[lab]
    a = sums[np.arange(n), lab] / np.maximum(own - 1, 1)
    other = sums / sizes
    other[np.arange(n), lab] = np.inf
    b = other.min(axis=1)
    denom = np.maximum(a, b)
    s = np.where(denom > 0, (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
    s[own == 1] = 0.0
    return s

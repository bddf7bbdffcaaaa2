"""Spectral clustering of clients from a dataset-distance matrix.

The pipeline is self-contained on purpose: a cyclic Jacobi eigensolver and a
small k-means++ keep every numeric step of the clustering reproducible from
seeds, with no dependence on LAPACK iteration order.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np

from ..errors import ConfigError, KTooLargeError, NumericalFailureError, ShapeMismatchError
from .otdd import DistanceMatrix

log = logging.getLogger("fedwad.apps.clustering")

JACOBI_TOL = 1e-10
DEGREE_FLOOR = 1e-12


def jacobi_eigh(A, tol: float = JACOBI_TOL, max_sweeps: int = 200):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm drops below tol. Returns
    (eigenvalues ascending, eigenvectors as columns in matching order).
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatchError(f"need a square matrix, got {A.shape}")
    if np.abs(A - A.T).max(initial=0.0) > 1e-9:
        raise ConfigError("matrix is not symmetric")
    n = A.shape[0]
    M = (A + A.T) / 2.0
    V = np.eye(n)
    if n == 1:
        return M.diagonal().copy(), V

    def offnorm():
        off = M - np.diag(M.diagonal())
        return float(np.sqrt((off * off).sum()))

    for sweep in range(max_sweeps):
        if offnorm() < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = M[p, q]
                if apq == 0.0:
                    continue
                # classic two-sided rotation annihilating M[p, q]
                theta = (M[q, q] - M[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) \
                    if theta != 0.0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * M[:, p] - s * M[:, q]
                rot_q = s * M[:, p] + c * M[:, q]
                M[:, p], M[:, q] = rot_p, rot_q
                rot_p = c * M[p, :] - s * M[q, :]
                rot_q = s * M[p, :] + c * M[q, :]
                M[p, :], M[q, :] = rot_p, rot_q
                M[p, q] = M[q, p] = 0.0
                rot_p = c * V[:, p] - s * V[:, q]
                rot_q = s * V[:, p] + c * V[:, q]
                V[:, p], V[:, q] = rot_p, rot_q
    else:
        raise NumericalFailureError(
            f"Jacobi did not reach off-norm {tol} in {max_sweeps} sweeps")
    order = np.argsort(M.diagonal(), kind="stable")
    return M.diagonal()[order].copy(), V[:, order]


def _kmeans_once(X, k, rng):
    n = X.shape[0]
    # k-means++ seeding
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = X[rng.integers(n)]
        else:
            centers[j] = X[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((X - centers[j]) ** 2).sum(axis=1))

    labels = np.full(n, -1)
    for _ in range(300):
        dist = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(dist, axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = X[labels == j]
            if len(members):
                centers[j] = members.mean(axis=0)
            else:
                # reseed an empty cluster on the point worst served now
                centers[j] = X[int(np.argmax(dist.min(axis=1)))]
    inertia = float(((X - centers[labels]) ** 2).sum())
    return labels, inertia


def kmeans(X, k, seed: int = 0, restarts: int = 20):
    """k-means++ with restarts; the lowest-inertia run wins."""
    X = np.asarray(X, dtype=np.float64)
    if k < 1 or k > X.shape[0]:
        raise KTooLargeError(f"k must be in [1, {X.shape[0]}], got {k}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        labels, inertia = _kmeans_once(X, k, rng)
        if best is None or inertia < best[1]:
            best = (labels, inertia)
    return best[0]


def cluster_affinity(A, k: int, seed: int = 0):
    """Normalized-Laplacian spectral clustering of an affinity matrix."""
    A = np.asarray(A, dtype=np.float64)
    c = A.shape[0]
    if k > c:
        raise KTooLargeError(f"cannot form {k} clusters from {c} clients")
    if k < 1:
        raise ConfigError("k must be >= 1")
    deg = A.sum(axis=1)
    if (deg < DEGREE_FLOOR).any():
        warnings.warn("affinity graph has an isolated node; clustering may be "
                      "arbitrary for it", RuntimeWarning, stacklevel=2)
        deg = np.maximum(deg, DEGREE_FLOOR)
    inv_sqrt = 1.0 / np.sqrt(deg)
    L = np.eye(c) - inv_sqrt[:, None] * A * inv_sqrt[None, :]
    _, vecs = jacobi_eigh(L)
    emb = vecs[:, :k]
    norms = np.maximum(np.sqrt((emb * emb).sum(axis=1)), 1e-12)
    emb = emb / norms[:, None]
    return kmeans(emb, k, seed=seed)


def spectral_cluster(D: DistanceMatrix, k: int, mode: str = "affinity",
                     seed: int = 0):
    """Cluster clients from their pairwise distances.

    mode 'affinity' rescales distances into exp(-D / median off-diagonal);
    mode 'knn3' / 'knn5' builds a binary graph from each client's nearest
    neighbors, OR-symmetrized. Returns a length-c integer label vector.
    """
    V = D.values
    c = V.shape[0]
    if k > c:
        raise KTooLargeError(f"cannot form {k} clusters from {c} clients")
    if k < 1:
        raise ConfigError("k must be >= 1")
    if c == 1:
        return np.zeros(1, dtype=np.int64)
    if mode == "affinity":
        off = V[~np.eye(c, dtype=bool)]
        med = float(np.median(off))
        A = np.exp(-V / max(med, 1e-300))
    elif mode.startswith("knn"):
        try:
            kappa = int(mode[3:])
        except ValueError:
            raise ConfigError(f"unknown clustering mode {mode!r}") from None
        if not (1 <= kappa < c):
            raise ConfigError(f"knn neighbor count must be in [1, {c - 1}], got {kappa}")
        A = np.zeros((c, c))
        for i in range(c):
            order = [j for j in np.argsort(V[i], kind="stable") if j != i]
            A[i, order[:kappa]] = 1.0
        A = np.maximum(A, A.T)
        np.fill_diagonal(A, 0.0)
    else:
        raise ConfigError(f"unknown clustering mode {mode!r}")
    labels = cluster_affinity(A, k, seed=seed)
    return labels.astype(np.int64)

"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

Both implementations accumulate in the same order so their outputs agree
bit-for-bit; ``tests/test_kernels.py`` holds them to that.  Call
:func:`set_backend` (or set ``FASTVID_DISABLE_NUMBA``) to choose one.
"""

from __future__ import annotations

import contextlib

import numpy as np

from ._accel import HAVE_NUMBA, default_backend, njit

BACKENDS = ("numba", "numpy")
_backend = default_backend()


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from {BACKENDS}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


@contextlib.contextmanager
def backend(name: str):
    prev = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def pairwise_sqdist(x: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances via the Gram matrix.

    Rows are centred first, which keeps identical rows at exactly zero distance
    and limits cancellation for clustered data. The result is exactly symmetric.
    """
    x = np.asarray(x, dtype=np.float64)
    x = x - x.mean(axis=0)
    sq = np.einsum("ij,ij->i", x, x)
    g = x @ x.T
    d = sq[:, None] + sq[None, :] - 2.0 * g
    # BLAS gives no symmetry guarantee; mutual neighbours must see equal distances
    d = 0.5 * (d + d.T)
    np.maximum(d, 0.0, out=d)
    np.fill_diagonal(d, 0.0)
    return d


# --- local density -----------------------------------------------------------


def _knn_sqmean_numpy(sqdist: np.ndarray, k: int) -> np.ndarray:
    d = sqdist.copy()
    np.fill_diagonal(d, np.inf)
    nearest = np.sort(np.partition(d, k - 1, axis=1)[:, :k], axis=1)
    # sequential left-to-right sum to match the compiled loop
    total = np.cumsum(nearest, axis=1)[:, -1]
    return total / k


@njit
def _knn_sqmean_numba(sqdist, k):
    n = sqdist.shape[0]
    out = np.empty(n)
    best = np.empty(k)
    for i in range(n):
        # insertion into a sorted buffer of the k smallest non-self entries
        for j in range(k):
            best[j] = np.inf
        for j in range(n):
            if j == i:
                continue
            v = sqdist[i, j]
            if v < best[k - 1]:
                pos = k - 1
                while pos > 0 and best[pos - 1] > v:
                    best[pos] = best[pos - 1]
                    pos -= 1
                best[pos] = v
        total = 0.0
        for j in range(k):
            total += best[j]
        out[i] = total / k
    return out


# --- peak distance -----------------------------------------------------------


def _peak_distance_numpy(dist: np.ndarray, rho: np.ndarray) -> np.ndarray:
    higher = rho[None, :] > rho[:, None]
    nearest_higher = np.where(higher, dist, np.inf).min(axis=1)
    return np.where(higher.any(axis=1), nearest_higher, dist.max(axis=1))


@njit
def _peak_distance_numba(dist, rho):
    n = dist.shape[0]
    delta = np.empty(n)
    for i in range(n):
        best = np.inf
        far = 0.0
        found = False
        for j in range(n):
            dij = dist[i, j]
            if dij > far:
                far = dij
            if rho[j] > rho[i]:
                found = True
                if dij < best:
                    best = dij
        delta[i] = best if found else far
    return delta


# --- anchor-centric aggregation ----------------------------------------------


def _aggregate_numpy(anchors, pool, labels, beta):
    m, dim = anchors.shape
    sums = np.zeros((m, dim))
    np.add.at(sums, labels, pool)
    counts = np.bincount(labels, minlength=m)
    out = anchors.copy()
    hit = counts > 0
    out[hit] = beta * anchors[hit] + ((1.0 - beta) / counts[hit])[:, None] * sums[hit]
    return out, counts.astype(np.int64)


@njit
def _aggregate_numba(anchors, pool, labels, beta):
    m, dim = anchors.shape
    sums = np.zeros((m, dim))
    counts = np.zeros(m, dtype=np.int64)
    for i in range(pool.shape[0]):
        a = labels[i]
        counts[a] += 1
        for j in range(dim):
            sums[a, j] += pool[i, j]
    out = anchors.copy()
    for a in range(m):
        if counts[a] > 0:
            w = (1.0 - beta) / counts[a]
            for j in range(dim):
                out[a, j] = beta * anchors[a, j] + w * sums[a, j]
    return out, counts


# --- public dispatch ---------------------------------------------------------


def knn_density(sqdist: np.ndarray, k: int) -> np.ndarray:
    """``exp(-mean squared distance to the k nearest non-self neighbours)``."""
    sqdist = np.ascontiguousarray(sqdist, dtype=np.float64)
    # exp stays outside the kernels: numpy's SIMD exp and libm differ by an ulp
    if _backend == "numba":
        return np.exp(-_knn_sqmean_numba(sqdist, int(k)))
    return np.exp(-_knn_sqmean_numpy(sqdist, int(k)))


def peak_distance(dist: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Distance to the nearest strictly denser point, else to the farthest point."""
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    rho = np.ascontiguousarray(rho, dtype=np.float64)
    if _backend == "numba":
        return _peak_distance_numba(dist, rho)
    return _peak_distance_numpy(dist, rho)


def aggregate(anchors: np.ndarray, pool: np.ndarray, labels: np.ndarray, beta: float):
    """Return ``(merged_anchors, counts)`` for ``beta*a + (1-beta)*mean(assigned)``."""
    anchors = np.ascontiguousarray(anchors, dtype=np.float64)
    pool = np.ascontiguousarray(pool, dtype=np.float64).reshape(-1, anchors.shape[1])
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    if _backend == "numba":
        return _aggregate_numba(anchors, pool, labels, float(beta))
    return _aggregate_numpy(anchors, pool, labels, float(beta))

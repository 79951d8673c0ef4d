"""Deterministic k-means for the clustering baselines.

Seeding is farthest-point traversal starting from row 0, so the result depends
only on the input order. Every tie goes to the lower index.
"""

from __future__ import annotations

import numpy as np


def _sqdist_to(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def farthest_point_init(x: np.ndarray, k: int) -> np.ndarray:
    """Indices of ``k`` distinct seed rows."""
    n = x.shape[0]
    chosen = [0]
    mind = ((x - x[0]) ** 2).sum(axis=1)
    taken = np.zeros(n, dtype=bool)
    taken[0] = True
    for _ in range(1, k):
        cand = np.where(taken, -np.inf, mind)
        nxt = int(np.argmax(cand))
        chosen.append(nxt)
        taken[nxt] = True
        mind = np.minimum(mind, ((x - x[nxt]) ** 2).sum(axis=1))
    return np.array(chosen, dtype=np.int64)


def kmeans(x, k: int, max_iter: int = 100, fill_empty: bool = False):
    """Lloyd iterations on squared Euclidean distance.

    Returns ``(labels, centers)``. With ``fill_empty`` every cluster is
    guaranteed at least one member: an empty cluster takes the point farthest
    from its own centre among clusters that can spare one.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    centers = x[farthest_point_init(x, k)].copy()
    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        new = np.argmin(_sqdist_to(x, centers), axis=1)
        if np.array_equal(new, labels):
            break
        labels = new
        for j in range(k):
            members = labels == j
            if members.any():
                centers[j] = x[members].mean(axis=0)
    if fill_empty:
        labels = _fill_empty(x, labels, centers, k)
        for j in range(k):
            centers[j] = x[labels == j].mean(axis=0)
    return labels, centers


def _fill_empty(x, labels, centers, k):
    labels = labels.copy()
    for j in range(k):
        if (labels == j).any():
            continue
        sizes = np.bincount(labels, minlength=k)
        donors = sizes[labels] > 1
        err = ((x - centers[labels]) ** 2).sum(axis=1)
        err = np.where(donors, err, -np.inf)
        labels[int(np.argmax(err))] = j
    return labels

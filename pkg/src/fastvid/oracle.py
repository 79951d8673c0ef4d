"""Slow, obvious reference implementations.

Nothing here imports the fast paths (``kernels``, ``dtm``, ``ats``, ``dyseg``);
only the shared domain types.
"""

from __future__ import annotations

import math

import numpy as np

from .core import Segmentation
from .errors import BudgetOverflowError, EmptyInputError


def oracle_density(tokens, k: int):
    """Return ``(rho, delta, score)`` by exhaustive search at float64."""
    x = np.asarray(tokens, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n == 0:
        raise EmptyInputError("density needs at least one token")
    if n == 1:
        return np.ones(1), np.zeros(1), np.zeros(1)
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}], got {k}")

    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            diff = x[i] - x[j]
            dist[i, j] = math.sqrt(float(np.dot(diff, diff)))

    rho = np.empty(n)
    for i in range(n):
        others = sorted(dist[i, j] for j in range(n) if j != i)
        rho[i] = math.exp(-sum(d * d for d in others[:k]) / k)

    delta = np.empty(n)
    for i in range(n):
        higher = [dist[i, j] for j in range(n) if rho[j] > rho[i]]
        delta[i] = min(higher) if higher else max(dist[i, j] for j in range(n))
    return rho, delta, rho * delta


def oracle_topk(scores, budget: int, excluded=()) -> list[int]:
    """Full sort by ``(-score, index)``, drop excluded, keep ``budget``, return ascending."""
    excluded = set(int(e) for e in excluded)
    ranked = sorted(
        (i for i in range(len(scores)) if i not in excluded),
        key=lambda i: (-float(scores[i]), i),
    )
    if budget > len(ranked):
        raise BudgetOverflowError(f"budget {budget} exceeds {len(ranked)} candidates")
    return sorted(ranked[:budget])


def oracle_segment_check(profile, segmentation: Segmentation, c: int, tau: float) -> bool:
    """True iff the segmentation's boundaries are exactly the lowest ``c-1`` plus those below ``tau``."""
    t = [float(v) for v in profile]
    if segmentation.frame_count != len(t) + 1:
        return False
    ranked = sorted(range(len(t)), key=lambda i: (t[i], i))
    expected = set(ranked[: min(max(c - 1, 0), len(t))])
    expected |= {i for i in range(len(t)) if t[i] < tau}
    return set(segmentation.boundaries) == expected

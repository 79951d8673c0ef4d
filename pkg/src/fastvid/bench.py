"""Timing of the numba kernels against their numpy twins, and of the pipeline."""

from __future__ import annotations

import time

import numpy as np

from . import kernels
from .core import PruneConfig, default_knn_k
from .io.synth import synth_video
from .stprune import prune


def _best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_benchmark(frames: int = 32, tokens: int = 196, dim: int = 896, repeats: int = 5) -> dict:
    """Best-of-``repeats`` milliseconds per backend; compile time excluded by a warm-up call."""
    rng = np.random.default_rng(0)
    x = rng.standard_normal((tokens, dim))
    sq = kernels.pairwise_sqdist(x)
    dist = np.sqrt(sq)
    k = default_knn_k(tokens)
    pool = rng.standard_normal((tokens * 4, dim))
    anchors = rng.standard_normal((tokens // 8, dim))
    labels = rng.integers(0, anchors.shape[0], size=pool.shape[0])
    scenes = [(frames // 4, "a", 0.1), (frames // 4, "b", 0.1), (frames // 4, "c", 0.1), (frames - 3 * (frames // 4), "d", 0.1)]
    dump = synth_video(scenes, seed=0, tokens_per_frame=tokens, token_dim=dim)
    config = PruneConfig()

    report: dict = {"shape": {"frames": frames, "tokens": tokens, "dim": dim}, "ms": {}}
    for name in kernels.BACKENDS:
        try:
            ctx = kernels.backend(name)
            ctx.__enter__()
        except RuntimeError:
            continue
        try:
            rho = kernels.knn_density(sq, k)
            cases = {
                "knn_density": lambda: kernels.knn_density(sq, k),
                "peak_distance": lambda: kernels.peak_distance(dist, rho),
                "aggregate": lambda: kernels.aggregate(anchors, pool, labels, 0.6),
                "prune": lambda: prune(dump, config),
            }
            for fn in cases.values():
                fn()  # warm-up / JIT
            report["ms"][name] = {c: round(_best_of(fn, repeats) * 1e3, 3) for c, fn in cases.items()}
        finally:
            ctx.__exit__(None, None, None)
    return report

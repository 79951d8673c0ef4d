"""Attention-based token selection."""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .core import AttentionSource, TokenDump
from .errors import BudgetOverflowError, DegenerateFeatureError, UnsupportedPoolingError


def _windows(size_in: int, size_out: int) -> list[tuple[int, int]]:
    return [
        (math.floor(i * size_in / size_out), math.ceil((i + 1) * size_in / size_out))
        for i in range(size_out)
    ]


def adaptive_avg_pool(maps: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Adaptive average pooling of an ``(F, H, W)`` stack to ``(F, out_h, out_w)``."""
    maps = np.asarray(maps, dtype=np.float64)
    _, H, W = maps.shape
    if out_h > H or out_w > W:
        raise UnsupportedPoolingError(
            f"cannot pool {H}x{W} up to {out_h}x{out_w}; only downsampling is supported"
        )
    out = np.empty((maps.shape[0], out_h, out_w))
    cols = _windows(W, out_w)
    for i, (r0, r1) in enumerate(_windows(H, out_h)):
        band = maps[:, r0:r1, :]
        for j, (c0, c1) in enumerate(cols):
            out[:, i, j] = band[:, :, c0:c1].mean(axis=(1, 2))
    return out


def pool_attention(dump: TokenDump) -> np.ndarray:
    """``(F, N)`` token-resolution attention scores, flattened row-major."""
    if dump.attention is None:
        raise ValueError("dump carries no attention maps")
    pooled = adaptive_avg_pool(dump.attention, dump.pool_out_h, dump.pool_out_w)
    return pooled.reshape(dump.frame_count, -1)


def pseudo_cls_scores(dump: TokenDump) -> np.ndarray:
    """Cosine similarity between each token and its frame's mean token."""
    tok = dump.tokens.astype(np.float64)
    mean = tok.mean(axis=1, keepdims=True)
    tn = np.linalg.norm(tok, axis=2)
    mn = np.linalg.norm(mean, axis=2)
    if (tn == 0).any() or (mn == 0).any():
        raise DegenerateFeatureError("zero-norm token or frame mean in pseudo-[CLS] scoring")
    return np.einsum("fnd,fkd->fn", tok, mean) / (tn * mn)


def saliency_scores(dump: TokenDump, source: AttentionSource = AttentionSource.AUTO) -> np.ndarray:
    source = AttentionSource(source)
    if source is AttentionSource.PSEUDO_CLS or (
        source is AttentionSource.AUTO and dump.attention is None
    ):
        return pseudo_cls_scores(dump)
    return pool_attention(dump)


def select_salient(
    pooled: np.ndarray,
    frame: int,
    budget: int,
    excluded: Iterable[int] = (),
) -> list[int]:
    """Top ``budget`` spatial indices of one frame, ascending; ties to the lower index."""
    scores = np.asarray(pooled)[frame] if np.ndim(pooled) == 2 else np.asarray(pooled)
    n = scores.shape[0]
    keep = np.ones(n, dtype=bool)
    for e in excluded:
        keep[int(e)] = False
    cand = np.flatnonzero(keep)
    if budget < 0 or budget > cand.size:
        raise BudgetOverflowError(
            f"frame {frame}: budget {budget} exceeds {cand.size} available tokens"
        )
    if budget == 0:
        return []
    order = cand[np.argsort(-scores[cand], kind="stable")]
    return sorted(int(i) for i in order[:budget])

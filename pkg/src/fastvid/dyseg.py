"""Temporal segmentation: the dynamic segmenter and two baselines."""

from __future__ import annotations

import numpy as np

from .core import (
    FrameFeatureSource,
    Segmentation,
    TokenDump,
    frame_features_for,
)
from .errors import DegenerateFeatureError
from .kmeans import kmeans


def cosine_transitions(features: np.ndarray) -> np.ndarray:
    """Cosine similarity of each frame feature with the next one."""
    f = np.asarray(features, dtype=np.float64)
    if f.shape[0] < 2:
        return np.zeros(0)
    sq = np.einsum("ij,ij->i", f, f)
    zero = np.flatnonzero(sq == 0.0)
    if zero.size:
        raise DegenerateFeatureError(f"frame {int(zero[0])} has a zero-norm feature")
    dots = np.einsum("ij,ij->i", f[:-1], f[1:])
    return np.clip(dots / np.sqrt(sq[:-1] * sq[1:]), -1.0, 1.0)


def transition_profile(
    dump: TokenDump, source: FrameFeatureSource = FrameFeatureSource.DUMP
) -> np.ndarray:
    """Length ``F-1`` vector of adjacent-frame cosine similarities."""
    return cosine_transitions(frame_features_for(dump, FrameFeatureSource(source)))


def boundary_set(profile, c: int, tau: float) -> set[int]:
    """Union of the ``c-1`` lowest transitions and every transition below ``tau``."""
    t = np.asarray(profile, dtype=np.float64)
    m = min(max(c - 1, 0), t.size)
    lowest = np.argsort(t, kind="stable")[:m]
    below = np.flatnonzero(t < tau)
    return set(int(i) for i in lowest) | set(int(i) for i in below)


def dyseg(profile, c: int, tau: float) -> Segmentation:
    t = np.asarray(profile, dtype=np.float64)
    return Segmentation.from_boundaries(t.size + 1, boundary_set(t, c, tau))


def fixed_interval_segment(frame_count: int, interval: int) -> Segmentation:
    if frame_count < 1 or interval < 1:
        raise ValueError("frame_count and interval must be positive")
    return Segmentation(
        tuple((s, min(s + interval, frame_count) - 1) for s in range(0, frame_count, interval))
    )


def cluster_labels(
    dump: TokenDump,
    num_clusters: int,
    source: FrameFeatureSource = FrameFeatureSource.DUMP,
) -> np.ndarray:
    feats = frame_features_for(dump, FrameFeatureSource(source))
    labels, _ = kmeans(feats, num_clusters)
    return labels


def labels_to_segmentation(labels) -> Segmentation:
    """Cut wherever the label changes, so interleaved clusters yield extra segments."""
    labels = np.asarray(labels)
    cuts = np.flatnonzero(labels[1:] != labels[:-1])
    return Segmentation.from_boundaries(labels.size, cuts)


def cluster_segment(
    dump: TokenDump,
    num_clusters: int,
    source: FrameFeatureSource = FrameFeatureSource.DUMP,
) -> Segmentation:
    if not 1 <= num_clusters <= dump.frame_count:
        raise ValueError(
            f"num_clusters must lie in [1, {dump.frame_count}], got {num_clusters}"
        )
    return labels_to_segmentation(cluster_labels(dump, num_clusters, source))


def mean_intra_segment_similarity(profile, segmentation: Segmentation) -> float:
    """Mean transition similarity over adjacent pairs that share a segment.

    Returns 1.0 when every segment is a single frame.
    """
    t = np.asarray(profile, dtype=np.float64)
    cut = np.zeros(t.size, dtype=bool)
    cut[segmentation.boundaries] = True
    inside = t[~cut]
    return float(inside.mean()) if inside.size else 1.0

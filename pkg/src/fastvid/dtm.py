"""Density-based token merging and the two baseline mergers.

Densities use Euclidean distance; assignment of to-be-merged tokens uses
cosine similarity.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from . import kernels
from .core import Origin, RetainedToken, TokenDump, default_knn_k
from .errors import BudgetOverflowError, DegenerateFeatureError, EmptyInputError
from .kmeans import kmeans

Position = tuple[int, int]


@dataclass(frozen=True, eq=False)
class DensityScores:
    rho: np.ndarray
    delta: np.ndarray
    score: np.ndarray


@dataclass(frozen=True, eq=False)
class MergePlan:
    anchors: list[Position]
    assignment: dict[Position, Position]


@dataclass(frozen=True, eq=False)
class MergeOutcome:
    """Array form of a merge: one row per output token plus member bookkeeping.

    ``member_positions[i]`` was folded into output row ``member_rows[i]``.
    """

    positions: np.ndarray  # (m, 2) int64, sorted
    embeddings: np.ndarray  # (m, D) float64
    merged_count: np.ndarray  # (m,) int64
    member_positions: np.ndarray  # (q, 2) int64
    member_rows: np.ndarray  # (q,) int64

    def to_tokens(self) -> list[RetainedToken]:
        return [
            RetainedToken(int(f), int(s), self.embeddings[i], Origin.DTM_ANCHOR, int(self.merged_count[i]))
            for i, (f, s) in enumerate(self.positions)
        ]

    @property
    def plan(self) -> MergePlan:
        anchors = [(int(f), int(s)) for f, s in self.positions]
        assignment = {
            (int(f), int(s)): anchors[int(r)]
            for (f, s), r in zip(self.member_positions, self.member_rows)
        }
        return MergePlan(anchors, assignment)


def density_scores(tokens, k: Optional[int] = None) -> DensityScores:
    """Local density, peak distance and their product for each row of ``tokens``."""
    x = np.asarray(tokens, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n == 0:
        raise EmptyInputError("density needs at least one token")
    if n == 1:
        one = np.ones(1)
        return DensityScores(one, np.zeros(1), np.zeros(1))
    if k is None:
        k = default_knn_k(n)
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}], got {k}")
    sq = kernels.pairwise_sqdist(x)
    rho = kernels.knn_density(sq, k)
    delta = kernels.peak_distance(np.sqrt(sq), rho)
    return DensityScores(rho, delta, rho * delta)


def select_anchor_frames(segment: Position, p: int) -> list[int]:
    start, end = segment
    return list(range(start, end + 1, p))


def _top_by_score(score: np.ndarray, budget: int, excluded: Iterable[int]) -> list[int]:
    keep = np.ones(score.shape[0], dtype=bool)
    keep[list(excluded)] = False
    cand = np.flatnonzero(keep)
    if budget > cand.size:
        raise BudgetOverflowError(f"anchor budget {budget} exceeds {cand.size} candidates")
    order = cand[np.argsort(-score[cand], kind="stable")]
    return sorted(int(i) for i in order[:budget])


def _as_budgets(per_frame_budget, count: int) -> list[int]:
    if np.ndim(per_frame_budget) == 0:
        return [int(per_frame_budget)] * count
    budgets = [int(b) for b in per_frame_budget]
    if len(budgets) != count:
        raise ValueError(f"expected {count} per-frame budgets, got {len(budgets)}")
    return budgets


def select_anchors(
    dump: TokenDump,
    anchor_frames: Sequence[int],
    per_frame_budget: Union[int, Sequence[int]],
    k: Optional[int] = None,
    excluded: Optional[Mapping[int, Iterable[int]]] = None,
    workers: Optional[int] = None,
) -> list[Position]:
    """Top density-score tokens of each anchor frame, scored within that frame.

    ``excluded`` maps a frame index to spatial indices that may not become
    anchors. Frames are independent; ``workers > 1`` scores them on a thread
    pool with identical results.
    """
    budgets = _as_budgets(per_frame_budget, len(anchor_frames))
    excluded = excluded or {}

    def one(item):
        f, b = item
        if b == 0:
            return []
        s = density_scores(dump.tokens[f], k).score
        return [(f, i) for i in _top_by_score(s, b, excluded.get(f, ()))]

    items = list(zip(anchor_frames, budgets))
    if workers and workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(one, items))
    else:
        parts = [one(it) for it in items]
    return sorted(pos for part in parts for pos in part)


def uniform_anchors(
    dump: TokenDump,
    anchor_frames: Sequence[int],
    per_frame_budget: Union[int, Sequence[int]],
    excluded: Optional[Mapping[int, Iterable[int]]] = None,
) -> list[Position]:
    """Evenly strided spatial positions over each anchor frame's free tokens."""
    budgets = _as_budgets(per_frame_budget, len(anchor_frames))
    excluded = excluded or {}
    out = []
    for f, b in zip(anchor_frames, budgets):
        keep = np.ones(dump.tokens_per_frame, dtype=bool)
        keep[list(excluded.get(f, ()))] = False
        cand = np.flatnonzero(keep)
        if b > cand.size:
            raise BudgetOverflowError(f"frame {f}: anchor budget {b} exceeds {cand.size} candidates")
        out.extend((f, int(cand[(i * cand.size) // b])) for i in range(b))
    return sorted(out)


def _segment_pool(dump: TokenDump, segment: Position, taken: set[Position]) -> np.ndarray:
    """Positions of the segment's tokens not in ``taken``, in (frame, spatial) order."""
    start, end = segment
    mask = np.ones((end - start + 1, dump.tokens_per_frame), dtype=bool)
    for f, s in taken:
        if start <= f <= end:
            mask[f - start, s] = False
    pos = np.argwhere(mask).astype(np.int64)
    pos[:, 0] += start
    return pos


def _unit_rows(x: np.ndarray, what: str) -> np.ndarray:
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DegenerateFeatureError(f"zero-norm {what} at row {int(zero[0])}")
    return x / norms[:, None]


def merge_into_anchors(
    dump: TokenDump,
    segment: Position,
    anchors: Sequence[Position],
    excluded: Iterable[Position] = (),
    beta: float = 0.6,
) -> MergeOutcome:
    anchors = sorted((int(f), int(s)) for f, s in anchors)
    anchor_set = set(anchors)
    pool = _segment_pool(dump, segment, anchor_set | set(excluded))
    D = dump.token_dim
    a_idx = np.array(anchors, dtype=np.int64).reshape(-1, 2)
    a_emb = dump.tokens[a_idx[:, 0], a_idx[:, 1]].astype(np.float64)
    if len(anchors) == 0:
        if pool.shape[0]:
            raise ValueError("to-be-merged tokens present but no anchors to absorb them")
        empty = np.zeros((0, 2), dtype=np.int64)
        return MergeOutcome(empty, np.zeros((0, D)), np.zeros(0, dtype=np.int64), empty, np.zeros(0, dtype=np.int64))
    p_emb = dump.tokens[pool[:, 0], pool[:, 1]].astype(np.float64)
    if pool.shape[0]:
        sims = _unit_rows(p_emb, "to-be-merged token") @ _unit_rows(a_emb, "anchor token").T
        labels = np.argmax(sims, axis=1)
    else:
        labels = np.zeros(0, dtype=np.int64)
    merged, counts = kernels.aggregate(a_emb, p_emb, labels, beta)
    m = len(anchors)
    return MergeOutcome(
        positions=a_idx,
        embeddings=merged,
        merged_count=counts,
        member_positions=np.concatenate([a_idx, pool]),
        member_rows=np.concatenate([np.arange(m), labels]).astype(np.int64),
    )


def assign_and_merge(
    dump: TokenDump,
    segment: Position,
    anchors: Sequence[Position],
    excluded: Iterable[Position] = (),
    beta: float = 0.6,
) -> list[RetainedToken]:
    """Fold every free segment token into its most cosine-similar anchor."""
    return merge_into_anchors(dump, segment, anchors, excluded, beta).to_tokens()


def uniform_merge(
    dump: TokenDump,
    segment: Position,
    anchor_frames: Sequence[int],
    per_frame_budget: Union[int, Sequence[int]],
    beta: float = 0.6,
    excluded: Iterable[Position] = (),
) -> list[RetainedToken]:
    """Baseline: strided anchors instead of density peaks, same aggregation."""
    return _uniform_outcome(dump, segment, anchor_frames, per_frame_budget, beta, excluded).to_tokens()


def _by_frame(excluded: Iterable[Position]) -> dict[int, list[int]]:
    out: dict[int, list[int]] = {}
    for f, s in excluded:
        out.setdefault(int(f), []).append(int(s))
    return out


def _uniform_outcome(dump, segment, anchor_frames, per_frame_budget, beta, excluded):
    excluded = list(excluded)
    anchors = uniform_anchors(dump, anchor_frames, per_frame_budget, _by_frame(excluded))
    return merge_into_anchors(dump, segment, anchors, excluded, beta)


def cluster_outcome(
    dump: TokenDump,
    segment: Position,
    budget: int,
    excluded: Iterable[Position] = (),
) -> MergeOutcome:
    pool = _segment_pool(dump, segment, set((int(f), int(s)) for f, s in excluded))
    D = dump.token_dim
    if budget == 0:
        empty = np.zeros((0, 2), dtype=np.int64)
        return MergeOutcome(empty, np.zeros((0, D)), np.zeros(0, dtype=np.int64), empty, np.zeros(0, dtype=np.int64))
    if budget > pool.shape[0]:
        raise BudgetOverflowError(f"cluster budget {budget} exceeds {pool.shape[0]} tokens")
    emb = dump.tokens[pool[:, 0], pool[:, 1]].astype(np.float64)
    labels, centers = kmeans(emb, budget, fill_empty=True)
    # pool is in (frame, spatial) order, so the first member is the lowest position
    first = np.array([np.flatnonzero(labels == j)[0] for j in range(budget)])
    order = np.argsort(first, kind="stable")
    rank = np.empty(budget, dtype=np.int64)
    rank[order] = np.arange(budget)
    return MergeOutcome(
        positions=pool[first[order]],
        embeddings=centers[order],
        merged_count=np.bincount(labels, minlength=budget)[order] - 1,
        member_positions=pool,
        member_rows=rank[labels],
    )


def cluster_merge(
    dump: TokenDump,
    segment: Position,
    budget: int,
    excluded: Iterable[Position] = (),
) -> list[RetainedToken]:
    """Baseline: k-means over the segment; each cluster mean sits at its first member's position."""
    return cluster_outcome(dump, segment, budget, excluded).to_tokens()

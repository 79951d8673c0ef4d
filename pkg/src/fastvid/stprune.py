"""End-to-end pruning: segmentation, budget split, selection, merging, reassembly."""

from __future__ import annotations

import contextlib
import enum
import math
import time
from typing import Optional

import numpy as np

from . import ats, dtm, dyseg as _dyseg
from .core import (
    Origin,
    PruneConfig,
    PruneResult,
    RoundingPolicy,
    SegmentBudget,
    Segmentation,
    TokenDump,
    exact_fraction,
    round_half_up,
    validate_dump,
)
from .errors import BudgetOverflowError, BudgetUnderflowError, FastVIDError, StageError


class Segmenter(str, enum.Enum):
    DYSEG = "dyseg"
    FIXED = "fixed"
    CLUSTER = "cluster"


class Merger(str, enum.Enum):
    DENSITY = "density"
    UNIFORM = "uniform"
    CLUSTER = "cluster"


def _split_even(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def _fit_to_capacity(want: list[int], cap: list[int]) -> list[int]:
    """Clamp each entry to its capacity, pushing the excess to later then earlier slots."""
    got = [min(w, c) for w, c in zip(want, cap)]
    carry = sum(want) - sum(got)
    for i in range(len(got)):
        if carry == 0:
            break
        take = min(carry, cap[i] - got[i])
        got[i] += take
        carry -= take
    if carry:
        raise BudgetOverflowError(
            f"{carry} DTM tokens exceed anchor-frame capacity; lower d or p"
        )
    return got


def budget_plan(
    segmentation: Segmentation,
    tokens_per_frame: int,
    r: float,
    d: float,
    p: int,
    rounding_policy: RoundingPolicy = RoundingPolicy.FLOOR_THEN_DISTRIBUTE,
) -> tuple[SegmentBudget, ...]:
    """Per-segment DTM/ATS token budgets summing exactly to ``round(r*F*N)``.

    Every fractional share is floored first. The shortfall is then handed out
    one token at a time in ascending frame order to ATS, or, when ``d == 1``,
    in ascending segment order to DTM.
    """
    if RoundingPolicy(rounding_policy) is not RoundingPolicy.FLOOR_THEN_DISTRIBUTE:
        raise ValueError(f"unsupported rounding policy {rounding_policy!r}")
    N = tokens_per_frame
    rr, dd = exact_fraction(r), exact_fraction(d)
    if not (0 < rr <= 1 and 0 <= dd <= 1):
        raise ValueError(f"need r in (0, 1] and d in [0, 1], got r={r}, d={d}")
    F = segmentation.frame_count
    target = round_half_up(rr * F * N)

    ats_pf = [math.floor((1 - dd) * rr * N)] * F
    segs = list(segmentation)
    dtm_b = [math.floor(dd * rr * (e - s + 1) * N) for s, e in segs]
    frames = [dtm.select_anchor_frames(seg, p) for seg in segs]
    remainder = target - sum(dtm_b) - sum(ats_pf)

    if dd == 1:
        while remainder:
            moved = 0
            for i in range(len(segs)):
                if remainder and dtm_b[i] < len(frames[i]) * N:
                    dtm_b[i] += 1
                    remainder -= 1
                    moved += 1
            if not moved:
                raise BudgetOverflowError("retention target exceeds anchor-frame capacity")

    per_anchor = []
    anchor_load = [0] * F
    for i, (s, e) in enumerate(segs):
        if dtm_b[i] == 0:
            frames[i] = []
            per_anchor.append([])
            continue
        cap = [N - ats_pf[f] for f in frames[i]]
        alloc = _fit_to_capacity(_split_even(dtm_b[i], len(frames[i])), cap)
        for f, a in zip(frames[i], alloc):
            anchor_load[f] = a
        per_anchor.append(alloc)

    while remainder:
        moved = 0
        for f in range(F):
            if remainder and ats_pf[f] + anchor_load[f] < N:
                ats_pf[f] += 1
                remainder -= 1
                moved += 1
        if not moved:
            raise BudgetOverflowError("retention target exceeds available tokens")

    out = []
    for i, (s, e) in enumerate(segs):
        b = SegmentBudget(
            start=s,
            end=e,
            dtm_budget=dtm_b[i],
            ats_per_frame=tuple(ats_pf[s : e + 1]),
            anchor_frames=tuple(frames[i]),
            per_anchor_frame=tuple(per_anchor[i]),
        )
        if b.total == 0:
            raise BudgetUnderflowError(
                f"segment {(s, e)} would keep zero tokens; increase the retention ratio r"
            )
        out.append(b)
    return tuple(out)


@contextlib.contextmanager
def _stage(name: str, timings: Optional[dict]):
    t0 = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except (FastVIDError, ValueError) as exc:
        raise StageError(name, exc) from exc
    finally:
        if timings is not None:
            timings[name] = timings.get(name, 0.0) + time.perf_counter() - t0


def segment_video(dump: TokenDump, config: PruneConfig, segmenter=Segmenter.DYSEG) -> Segmentation:
    segmenter = Segmenter(segmenter)
    if segmenter is Segmenter.DYSEG:
        profile = _dyseg.transition_profile(dump, config.frame_feature_source)
        return _dyseg.dyseg(profile, config.min_segments, config.transition_threshold)
    if segmenter is Segmenter.FIXED:
        return _dyseg.fixed_interval_segment(dump.frame_count, config.fixed_interval)
    k = min(config.num_clusters or config.min_segments, dump.frame_count)
    return _dyseg.cluster_segment(dump, k, config.frame_feature_source)


def compare_strategies(
    dump: TokenDump,
    config: PruneConfig,
    segmenter=Segmenter.DYSEG,
    merger=Merger.DENSITY,
    workers: Optional[int] = None,
    timings: Optional[dict] = None,
) -> PruneResult:
    """Run the pipeline with any segmenter/merger pair from the ablation matrix.

    ``timings`` (if given) receives wall-clock seconds for the
    ``segmentation`` and ``compression`` stages.
    """
    merger = Merger(merger)
    with _stage("validate", None):
        validate_dump(dump)
    F, N, D = dump.frame_count, dump.tokens_per_frame, dump.token_dim

    with _stage("segmentation", timings):
        segmentation = segment_video(dump, config, segmenter)

    with _stage("compression", timings):
        plan = budget_plan(
            segmentation,
            N,
            config.retention_ratio,
            config.dtm_fraction,
            config.anchor_interval,
            config.rounding_policy,
        )
        saliency = None
        if any(b.ats_budget for b in plan):
            saliency = ats.saliency_scores(dump, config.attention_source)

        pos_parts, emb_parts, origin_parts, count_parts = [], [], [], []
        member_pos, member_row = [], []
        offset = 0
        for b in plan:
            picks = []
            for f, budget in zip(range(b.start, b.end + 1), b.ats_per_frame):
                if budget:
                    picks.extend((f, s) for s in ats.select_salient(saliency, f, budget))
            ats_pos = np.array(picks, dtype=np.int64).reshape(-1, 2)
            n_ats = ats_pos.shape[0]
            pos_parts.append(ats_pos)
            emb_parts.append(dump.tokens[ats_pos[:, 0], ats_pos[:, 1]].astype(np.float64))
            origin_parts.append(np.full(n_ats, Origin.ATS, dtype=np.uint8))
            count_parts.append(np.zeros(n_ats, dtype=np.int64))
            member_pos.append(ats_pos)
            member_row.append(offset + np.arange(n_ats))
            offset += n_ats

            if b.dtm_budget == 0:
                continue
            excluded_by_frame: dict[int, list[int]] = {}
            for f, s in picks:
                excluded_by_frame.setdefault(f, []).append(s)
            segment = (b.start, b.end)
            if merger is Merger.DENSITY:
                anchors = dtm.select_anchors(
                    dump, b.anchor_frames, b.per_anchor_frame, config.knn_k, excluded_by_frame, workers
                )
                outcome = dtm.merge_into_anchors(dump, segment, anchors, picks, config.merge_weight)
            elif merger is Merger.UNIFORM:
                anchors = dtm.uniform_anchors(dump, b.anchor_frames, b.per_anchor_frame, excluded_by_frame)
                outcome = dtm.merge_into_anchors(dump, segment, anchors, picks, config.merge_weight)
            else:
                outcome = dtm.cluster_outcome(dump, segment, b.dtm_budget, picks)
            m = outcome.positions.shape[0]
            pos_parts.append(outcome.positions)
            emb_parts.append(outcome.embeddings)
            origin_parts.append(np.full(m, Origin.DTM_ANCHOR, dtype=np.uint8))
            count_parts.append(outcome.merged_count)
            member_pos.append(outcome.member_positions)
            member_row.append(offset + outcome.member_rows)
            offset += m

        pos = np.concatenate(pos_parts) if pos_parts else np.zeros((0, 2), dtype=np.int64)
        order = np.lexsort((pos[:, 1], pos[:, 0]))
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        assignment = np.full((F, N), -1, dtype=np.int32)
        if member_pos:
            mp = np.concatenate(member_pos)
            assignment[mp[:, 0], mp[:, 1]] = rank[np.concatenate(member_row)]

        embeddings = (
            np.concatenate(emb_parts)[order] if emb_parts else np.zeros((0, D))
        ).astype(np.float32)
        result = PruneResult(
            frame_count=F,
            tokens_per_frame=N,
            token_dim=D,
            pool_out_h=dump.pool_out_h,
            pool_out_w=dump.pool_out_w,
            frame_index=pos[order, 0].astype(np.int32),
            spatial_index=pos[order, 1].astype(np.int32),
            embeddings=embeddings,
            origin=np.concatenate(origin_parts)[order],
            merged_count=np.concatenate(count_parts)[order].astype(np.int32),
            segmentation=segmentation,
            budgets=plan,
            assignment=assignment,
        )
    return result


def prune(dump: TokenDump, config: Optional[PruneConfig] = None, **kwargs) -> PruneResult:
    """Prune ``dump`` with dynamic segmentation and density-based merging."""
    return compare_strategies(dump, config or PruneConfig(), Segmenter.DYSEG, Merger.DENSITY, **kwargs)

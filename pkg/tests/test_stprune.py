import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastvid.core import Origin, PruneConfig, Segmentation, retention_target
from fastvid.errors import BudgetOverflowError, BudgetUnderflowError, StageError
from fastvid.io import synth_video
from fastvid.stprune import Merger, Segmenter, budget_plan, compare_strategies, prune


def _one(F):
    return Segmentation(((0, F - 1),))


def test_plan_single_segment_example():
    (b,) = budget_plan(_one(8), 196, 0.1, 0.4, 4)
    assert b.dtm_budget == 62 and b.ats_budget == 95 and b.total == 157
    assert b.anchor_frames == (0, 4) and b.per_anchor_frame == (31, 31)


def test_plan_d0_all_ats():
    (b,) = budget_plan(_one(8), 196, 0.1, 0.0, 4)
    assert b.dtm_budget == 0 and b.anchor_frames == () and b.ats_budget == 157


def test_plan_d1_all_dtm():
    (b,) = budget_plan(_one(8), 196, 0.1, 1.0, 4)
    assert b.ats_per_frame == (0,) * 8 and b.dtm_budget == 157
    assert b.per_anchor_frame == (79, 78)


def test_plan_single_frame():
    (b,) = budget_plan(_one(1), 196, 0.5, 0.4, 1)
    assert (b.dtm_budget, b.ats_budget) == (39, 59)


def test_plan_underflow():
    seg = Segmentation.from_boundaries(4, [0, 1, 2])
    with pytest.raises(BudgetUnderflowError):
        budget_plan(seg, 4, 0.05, 0.4, 4)


def test_plan_overflow_when_anchors_cannot_hold_dtm_share():
    with pytest.raises(BudgetOverflowError):
        budget_plan(_one(8), 4, 1.0, 1.0, 8)


def test_plan_overflow_when_ats_fills_anchor_frames():
    # DTM wants 13 but two anchor frames keep only 10 - 4 slots each
    with pytest.raises(BudgetOverflowError):
        budget_plan(_one(3), 10, 0.9, 0.5, 2)


def test_plan_rejects_other_policies():
    with pytest.raises(ValueError):
        budget_plan(_one(2), 4, 0.5, 0.5, 1, rounding_policy="nearest")


@settings(max_examples=200, deadline=None)
@given(
    st.integers(1, 40),
    st.integers(16, 256),
    st.sampled_from([0.05, 0.1, 0.15, 0.2, 0.25, 0.5, 1.0]),
    st.sampled_from([0.0, 0.2, 0.4, 0.6, 1.0]),
    st.integers(1, 4),
    st.data(),
)
def test_plan_totals_exact(F, N, r, d, p, data):
    cuts = data.draw(st.sets(st.integers(0, max(F - 2, 0)), max_size=F - 1)) if F > 1 else set()
    seg = Segmentation.from_boundaries(F, cuts)
    try:
        plan = budget_plan(seg, N, r, d, p)
    except (BudgetUnderflowError, BudgetOverflowError):
        return
    assert sum(b.total for b in plan) == retention_target(r, F, N)
    for b in plan:
        assert sum(b.per_anchor_frame) == b.dtm_budget
        assert len(b.ats_per_frame) == b.end - b.start + 1
        for f, a in zip(b.anchor_frames, b.per_anchor_frame):
            assert a + b.ats_per_frame[f - b.start] <= N


# --- full pipeline -----------------------------------------------------------


def _check(result, r):
    F, N = result.frame_count, result.tokens_per_frame
    assert len(result) == retention_target(r, F, N)
    key = result.frame_index.astype(np.int64) * N + result.spatial_index
    assert np.all(np.diff(key) > 0)
    for b in result.budgets:
        in_seg = (result.frame_index >= b.start) & (result.frame_index <= b.end)
        assert int((in_seg & (result.origin == Origin.ATS)).sum()) == b.ats_budget
        assert int((in_seg & (result.origin == Origin.DTM_ANCHOR)).sum()) == b.dtm_budget
    # every original token is retained, merged, or dropped exactly once
    assert int((result.assignment >= 0).sum()) == len(result) + int(result.merged_count.sum())


def test_default_prune(scene_dump, backend):
    res = prune(scene_dump)
    _check(res, 0.1)
    assert len(res) == 627
    assert res.stats["retention_ratio"] == 627 / (32 * 196)


def test_table5_count_calibration(scene_dump):
    assert len(prune(scene_dump, PruneConfig(retention_ratio=0.097))) == 608


def test_identity_pruning(scene_dump):
    res = prune(scene_dump, PruneConfig(retention_ratio=1.0, dtm_fraction=0.0))
    assert len(res) == 32 * 196
    assert not res.merged_count.any()
    assert np.array_equal(res.embeddings, scene_dump.tokens.reshape(-1, 64))


def test_single_frame_pipeline():
    d = synth_video([(1, "a", 0.0)], seed=1, tokens_per_frame=196, token_dim=16)
    res = prune(d, PruneConfig(retention_ratio=0.5, anchor_interval=1))
    assert len(res) == 98
    assert res.stats["dtm_anchor_count"] == 39 and res.stats["ats_count"] == 59


def test_ats_and_dtm_disjoint(scene_dump):
    res = prune(scene_dump)
    pos = list(zip(res.frame_index.tolist(), res.spatial_index.tolist()))
    assert len(set(pos)) == len(pos)


def test_assignment_map_points_into_result(scene_dump):
    res = prune(scene_dump)
    rows = res.assignment[res.frame_index, res.spatial_index]
    assert np.array_equal(rows, np.arange(len(res)))
    for i in np.flatnonzero(res.origin == Origin.DTM_ANCHOR)[:20]:
        assert int((res.assignment == i).sum()) == res.merged_count[i] + 1


def test_backends_agree(scene_dump):
    from fastvid import kernels

    with kernels.backend("numpy"):
        a = prune(scene_dump)
    with kernels.backend("numba"):
        b = prune(scene_dump)
    assert np.array_equal(a.embeddings, b.embeddings)
    assert np.array_equal(a.spatial_index, b.spatial_index)


def test_threaded_matches_sequential(scene_dump):
    a = prune(scene_dump)
    b = prune(scene_dump, workers=4)
    assert np.array_equal(a.embeddings, b.embeddings) and np.array_equal(a.assignment, b.assignment)


def test_timings_reported(scene_dump):
    t = {}
    prune(scene_dump, timings=t)
    assert set(t) == {"segmentation", "compression"}


@pytest.mark.parametrize("segmenter", list(Segmenter))
@pytest.mark.parametrize("merger", list(Merger))
def test_ablation_matrix(scene_dump, segmenter, merger):
    res = compare_strategies(scene_dump, PruneConfig(), segmenter, merger)
    _check(res, 0.1)


def test_fixed_interval_segments(scene_dump):
    res = compare_strategies(scene_dump, PruneConfig(fixed_interval=4), "fixed", "density")
    assert len(res.segmentation) == 8


def test_pseudo_cls_pipeline(scene_dump):
    res = prune(scene_dump, PruneConfig(attention_source="pseudo_cls"))
    _check(res, 0.1)


def test_stage_error_names_stage():
    d = synth_video([(4, "a", 0.1)], seed=0, tokens_per_frame=4, token_dim=4, attn_hw=(4, 4))
    with pytest.raises(StageError) as info:
        prune(d, PruneConfig(retention_ratio=0.01, min_segments=4))
    assert info.value.stage == "compression"

import dataclasses
from fractions import Fraction

import numpy as np
import pytest

from fastvid.core import (
    ModelShape,
    PruneConfig,
    Segmentation,
    TokenDump,
    default_knn_k,
    exact_fraction,
    retention_target,
    round_half_up,
    validate_dump,
)
from fastvid.errors import ConfigError, DimensionMismatchError, InvalidDumpError, NonFiniteError


def test_consistent_dump_accepted(tiny_dump):
    assert tiny_dump.frame_count == 2 and tiny_dump.tokens_per_frame == 4 and tiny_dump.token_dim == 3
    assert validate_dump(tiny_dump) is tiny_dump


def test_validate_is_idempotent(tiny_dump):
    once = validate_dump(tiny_dump)
    assert validate_dump(once) is once


def test_pool_dims_must_cover_tokens(tiny_dump):
    bad = dataclasses.replace(tiny_dump, pool_out_h=2, pool_out_w=3)
    with pytest.raises(DimensionMismatchError) as ei:
        validate_dump(bad)
    assert "pool_out" in ei.value.field


def test_nan_token_reports_index(tiny_dump):
    tok = tiny_dump.tokens.copy()
    tok[1, 2, 0] = np.nan
    bad = dataclasses.replace(tiny_dump, tokens=tok)
    with pytest.raises(NonFiniteError) as ei:
        validate_dump(bad)
    assert ei.value.field == "tokens"
    assert ei.value.index == (1, 2, 0)


@pytest.mark.parametrize(
    "field, value",
    [
        ("tokens", np.zeros((2, 5, 3), np.float32)),
        ("frame_features", np.zeros((3, 2), np.float32)),
        ("attention", np.zeros((2, 3, 2), np.float32)),
    ],
)
def test_shape_mismatch_names_field(tiny_dump, field, value):
    with pytest.raises(DimensionMismatchError) as ei:
        validate_dump(dataclasses.replace(tiny_dump, **{field: value}))
    assert ei.value.field == field


def test_negative_attention_rejected(tiny_dump):
    attn = tiny_dump.attention.copy()
    attn[0, 1, 1] = -0.5
    with pytest.raises(InvalidDumpError):
        validate_dump(dataclasses.replace(tiny_dump, attention=attn))


def test_arrays_are_readonly_float32(tiny_dump):
    assert tiny_dump.tokens.dtype == np.float32
    with pytest.raises(ValueError):
        tiny_dump.tokens[0, 0, 0] = 1.0


def test_config_defaults_match_published_setting():
    cfg = PruneConfig()
    assert (cfg.min_segments, cfg.transition_threshold, cfg.dtm_fraction, cfg.anchor_interval, cfg.merge_weight) == (
        8,
        0.9,
        0.4,
        4,
        0.6,
    )


@pytest.mark.parametrize(
    "kwargs",
    [
        {"retention_ratio": 0.0},
        {"retention_ratio": 1.5},
        {"dtm_fraction": -0.1},
        {"merge_weight": 1.1},
        {"transition_threshold": 1.2},
        {"min_segments": 0},
        {"anchor_interval": 0},
        {"knn_k": 0},
    ],
)
def test_config_ranges(kwargs):
    with pytest.raises(ConfigError):
        PruneConfig(**kwargs)


def test_segmentation_invariants():
    Segmentation(((0, 1), (2, 2), (3, 5)))
    with pytest.raises(ValueError):
        Segmentation(((1, 2),))
    with pytest.raises(ValueError):
        Segmentation(((0, 1), (3, 4)))
    with pytest.raises(ValueError):
        Segmentation(((0, 1), (2, 1)))


def test_segmentation_from_boundaries():
    seg = Segmentation.from_boundaries(4, [1, 2])
    assert seg.segments == ((0, 1), (2, 2), (3, 3))
    assert seg.boundaries == [1, 2]
    assert Segmentation.from_boundaries(1, []).segments == ((0, 0),)


def test_exact_fraction_uses_decimal_value():
    assert exact_fraction(0.1) == Fraction(1, 10)
    assert exact_fraction(0.097) == Fraction(97, 1000)


@pytest.mark.parametrize(
    "r, F, N, want",
    [(0.1, 32, 196, 627), (0.097, 32, 196, 608), (0.5, 1, 196, 98), (0.25, 1, 2, 1), (0.15, 1, 10, 2), (1.0, 3, 7, 21)],
)
def test_retention_target(r, F, N, want):
    assert retention_target(r, F, N) == want


def test_round_half_up():
    assert round_half_up(Fraction(5, 2)) == 3
    assert round_half_up(Fraction(3, 2)) == 2
    assert round_half_up(Fraction(12, 5)) == 2


@pytest.mark.parametrize("n, k", [(1, 1), (2, 1), (3, 2), (4, 2), (5, 3), (196, 14), (197, 15), (64, 8)])
def test_default_knn_k(n, k):
    assert default_knn_k(n) == k


def test_model_shape_positive():
    with pytest.raises(ConfigError):
        ModelShape(0, 1, 1, 1, 1)


def test_from_arrays_requires_pool_for_nonsquare():
    with pytest.raises(DimensionMismatchError):
        TokenDump.from_arrays(np.ones((1, 2)), np.ones((1, 6, 2)))
    d = TokenDump.from_arrays(np.ones((1, 2)), np.ones((1, 6, 2)), pool_out=(2, 3))
    assert validate_dump(d) is d

"""Domain types, validation and the deterministic policies shared by all stages."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DimensionMismatchError,
    InvalidDumpError,
    NonFiniteError,
)

STORAGE_DTYPE = np.float32
ACCUM_DTYPE = np.float64


class RoundingPolicy(str, enum.Enum):
    # floor every fractional budget, then hand out the remainder one token at
    # a time in ascending segment/frame order until round(r*F*N) is reached
    FLOOR_THEN_DISTRIBUTE = "floor_then_distribute"


class TieBreakPolicy(str, enum.Enum):
    LOWER_INDEX = "lower_index"


class AttentionSource(str, enum.Enum):
    AUTO = "auto"  # stored [CLS] attention when present, else pseudo-[CLS]
    CLS = "cls"
    PSEUDO_CLS = "pseudo_cls"


class FrameFeatureSource(str, enum.Enum):
    DUMP = "dump"
    TOKEN_MEAN = "token_mean"


class Origin(enum.IntEnum):
    DTM_ANCHOR = 0
    ATS = 1


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=STORAGE_DTYPE)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TokenDump:
    """One video's frame features, patch tokens and [CLS] attention maps.

    Arrays are stored as read-only float32. ``attention`` may be ``None`` when the
    encoder exposes no [CLS] token; the pipeline then falls back to pseudo-[CLS]
    scores.
    """

    frame_count: int
    tokens_per_frame: int
    token_dim: int
    frame_feature_dim: int
    attn_height: int
    attn_width: int
    pool_out_h: int
    pool_out_w: int
    frame_features: np.ndarray
    tokens: np.ndarray
    attention: Optional[np.ndarray]

    @classmethod
    def from_arrays(
        cls,
        frame_features,
        tokens,
        attention=None,
        pool_out: Optional[tuple[int, int]] = None,
    ) -> "TokenDump":
        """Build a dump, inferring every dimension field from the arrays.

        ``pool_out`` defaults to a square grid when ``N`` is a perfect square.
        """
        tokens = np.asarray(tokens)
        frame_features = np.asarray(frame_features)
        if tokens.ndim != 3:
            raise DimensionMismatchError("tokens", "3-D (F, N, D)", tokens.shape)
        if frame_features.ndim != 2:
            raise DimensionMismatchError("frame_features", "2-D (F, Df)", frame_features.shape)
        F, N, D = tokens.shape
        if pool_out is None:
            side = math.isqrt(N)
            if side * side != N:
                raise DimensionMismatchError("pool_out", "explicit value for non-square N", N)
            pool_out = (side, side)
        if attention is not None:
            attention = np.asarray(attention)
            if attention.ndim != 3:
                raise DimensionMismatchError("attention", "3-D (F, H, W)", attention.shape)
            H, W = attention.shape[1:]
        else:
            H, W = pool_out
        return cls(
            frame_count=F,
            tokens_per_frame=N,
            token_dim=D,
            frame_feature_dim=frame_features.shape[1],
            attn_height=H,
            attn_width=W,
            pool_out_h=pool_out[0],
            pool_out_w=pool_out[1],
            frame_features=_frozen(frame_features),
            tokens=_frozen(tokens),
            attention=None if attention is None else _frozen(attention),
        )

    @property
    def has_attention(self) -> bool:
        return self.attention is not None

    @property
    def total_tokens(self) -> int:
        return self.frame_count * self.tokens_per_frame


def _first_nonfinite(a: np.ndarray) -> Optional[tuple[int, ...]]:
    bad = ~np.isfinite(a)
    if not bad.any():
        return None
    return tuple(int(i) for i in np.unravel_index(int(np.argmax(bad)), a.shape))


def validate_dump(dump: TokenDump) -> TokenDump:
    """Return ``dump`` unchanged if every invariant holds, otherwise raise."""
    for name in (
        "frame_count",
        "tokens_per_frame",
        "token_dim",
        "frame_feature_dim",
        "pool_out_h",
        "pool_out_w",
    ):
        v = getattr(dump, name)
        if not isinstance(v, (int, np.integer)) or v < 1:
            raise DimensionMismatchError(name, "positive integer", v)

    F, N, D = dump.frame_count, dump.tokens_per_frame, dump.token_dim
    if dump.pool_out_h * dump.pool_out_w != N:
        raise DimensionMismatchError(
            "pool_out_h*pool_out_w", N, dump.pool_out_h * dump.pool_out_w
        )
    if dump.frame_features.shape != (F, dump.frame_feature_dim):
        raise DimensionMismatchError(
            "frame_features", (F, dump.frame_feature_dim), dump.frame_features.shape
        )
    if dump.tokens.shape != (F, N, D):
        raise DimensionMismatchError("tokens", (F, N, D), dump.tokens.shape)
    if dump.attention is not None:
        H, W = dump.attn_height, dump.attn_width
        if H < 1 or W < 1:
            raise DimensionMismatchError("attn_height/attn_width", "positive integers", (H, W))
        if dump.attention.shape != (F, H, W):
            raise DimensionMismatchError("attention", (F, H, W), dump.attention.shape)

    for name in ("frame_features", "tokens", "attention"):
        arr = getattr(dump, name)
        if arr is None:
            continue
        idx = _first_nonfinite(arr)
        if idx is not None:
            raise NonFiniteError(name, idx)
    if dump.attention is not None and (dump.attention < 0).any():
        idx = np.unravel_index(int(np.argmax(dump.attention < 0)), dump.attention.shape)
        raise InvalidDumpError(f"negative attention score at index {tuple(map(int, idx))}")
    return dump


@dataclass(frozen=True)
class PruneConfig:
    min_segments: int = 8
    transition_threshold: float = 0.9
    retention_ratio: float = 0.1
    dtm_fraction: float = 0.4
    anchor_interval: int = 4
    merge_weight: float = 0.6
    knn_k: Optional[int] = None
    rounding_policy: RoundingPolicy = RoundingPolicy.FLOOR_THEN_DISTRIBUTE
    tie_break_policy: TieBreakPolicy = TieBreakPolicy.LOWER_INDEX
    attention_source: AttentionSource = AttentionSource.AUTO
    frame_feature_source: FrameFeatureSource = FrameFeatureSource.DUMP
    # baseline segmenters used by the ablation matrix
    fixed_interval: int = 4
    num_clusters: Optional[int] = None  # cluster segmenter; defaults to min_segments

    def __post_init__(self):
        def positive_int(name):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")

        for name in ("min_segments", "anchor_interval", "fixed_interval"):
            positive_int(name)
        if self.knn_k is not None:
            positive_int("knn_k")
        if self.num_clusters is not None:
            positive_int("num_clusters")
        if not -1.0 <= self.transition_threshold <= 1.0:
            raise ConfigError(f"transition_threshold must lie in [-1, 1], got {self.transition_threshold}")
        if not 0.0 < self.retention_ratio <= 1.0:
            raise ConfigError(f"retention_ratio must lie in (0, 1], got {self.retention_ratio}")
        if not 0.0 <= self.dtm_fraction <= 1.0:
            raise ConfigError(f"dtm_fraction must lie in [0, 1], got {self.dtm_fraction}")
        if not 0.0 <= self.merge_weight <= 1.0:
            raise ConfigError(f"merge_weight must lie in [0, 1], got {self.merge_weight}")
        # normalise string values passed by callers
        for name, enum_cls in (
            ("rounding_policy", RoundingPolicy),
            ("tie_break_policy", TieBreakPolicy),
            ("attention_source", AttentionSource),
            ("frame_feature_source", FrameFeatureSource),
        ):
            object.__setattr__(self, name, enum_cls(getattr(self, name)))


@dataclass(frozen=True)
class Segmentation:
    """Ordered, contiguous, covering list of inclusive ``(start, end)`` frame ranges."""

    segments: tuple[tuple[int, int], ...]

    def __post_init__(self):
        segs = tuple((int(s), int(e)) for s, e in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValueError("segmentation needs at least one segment")
        if segs[0][0] != 0:
            raise ValueError(f"first segment must start at frame 0, got {segs[0]}")
        prev_end = -1
        for s, e in segs:
            if s != prev_end + 1:
                raise ValueError(f"segment {(s, e)} does not follow frame {prev_end}")
            if e < s:
                raise ValueError(f"empty segment {(s, e)}")
            prev_end = e

    @classmethod
    def from_boundaries(cls, frame_count: int, boundaries) -> "Segmentation":
        """Split ``range(frame_count)`` after every transition index in ``boundaries``."""
        cuts = sorted(set(int(b) for b in boundaries))
        segs, start = [], 0
        for b in cuts:
            segs.append((start, b))
            start = b + 1
        segs.append((start, frame_count - 1))
        return cls(tuple(segs))

    @property
    def frame_count(self) -> int:
        return self.segments[-1][1] + 1

    @property
    def boundaries(self) -> list[int]:
        return [e for _, e in self.segments[:-1]]

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def lengths(self) -> list[int]:
        return [e - s + 1 for s, e in self.segments]


@dataclass(frozen=True, eq=False)
class RetainedToken:
    frame_index: int
    spatial_index: int
    embedding: np.ndarray
    origin: Origin
    merged_count: int = 0

    @property
    def position(self) -> tuple[int, int]:
        return (self.frame_index, self.spatial_index)


@dataclass(frozen=True)
class SegmentBudget:
    start: int
    end: int
    dtm_budget: int
    ats_per_frame: tuple[int, ...]
    anchor_frames: tuple[int, ...]
    per_anchor_frame: tuple[int, ...]

    @property
    def ats_budget(self) -> int:
        return sum(self.ats_per_frame)

    @property
    def total(self) -> int:
        return self.dtm_budget + self.ats_budget


@dataclass(frozen=True, eq=False)
class PruneResult:
    """Pruned token set in strictly increasing ``(frame, spatial)`` order.

    ``assignment`` is an ``F x N`` int32 map from each original token to the index
    of the retained token that absorbed it, or -1 when the token was dropped.
    """

    frame_count: int
    tokens_per_frame: int
    token_dim: int
    pool_out_h: int
    pool_out_w: int
    frame_index: np.ndarray
    spatial_index: np.ndarray
    embeddings: np.ndarray
    origin: np.ndarray
    merged_count: np.ndarray
    segmentation: Segmentation
    budgets: tuple[SegmentBudget, ...]
    assignment: np.ndarray

    def __len__(self) -> int:
        return int(self.frame_index.shape[0])

    @property
    def retained(self) -> list[RetainedToken]:
        return [
            RetainedToken(
                int(f), int(s), self.embeddings[i], Origin(int(o)), int(m)
            )
            for i, (f, s, o, m) in enumerate(
                zip(self.frame_index, self.spatial_index, self.origin, self.merged_count)
            )
        ]

    @property
    def stats(self) -> dict:
        total = self.frame_count * self.tokens_per_frame
        n_dtm = int((self.origin == Origin.DTM_ANCHOR).sum())
        n_ats = int((self.origin == Origin.ATS).sum())
        return {
            "frames": self.frame_count,
            "tokens_per_frame": self.tokens_per_frame,
            "input_tokens": total,
            "retained_tokens": len(self),
            "retention_ratio": len(self) / total,
            "segments": len(self.segmentation),
            "dtm_anchor_count": n_dtm,
            "ats_count": n_ats,
            "merged_token_count": int(self.merged_count.sum()),
            "dropped_token_count": int((self.assignment < 0).sum()),
        }


@dataclass(frozen=True)
class ModelShape:
    hidden_size: int
    ffn_intermediate: int
    kv_heads: int
    head_dim: int
    num_layers: int

    def __post_init__(self):
        for name in ("hidden_size", "ffn_intermediate", "kv_heads", "head_dim", "num_layers"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")


def exact_fraction(x: float) -> Fraction:
    """Decimal value the user typed (0.1 -> 1/10), not its binary approximation."""
    return Fraction(repr(float(x)))


def round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def retention_target(r: float, frame_count: int, tokens_per_frame: int) -> int:
    """Global retained-token count ``round(r * F * N)`` with halves rounded up."""
    return round_half_up(exact_fraction(r) * frame_count * tokens_per_frame)


def default_knn_k(n: int) -> int:
    """``ceil(sqrt(n))`` clamped to ``[1, n - 1]``; 1 for degenerate ``n``."""
    if n <= 2:
        return 1
    return min(max(math.isqrt(n - 1) + 1, 1), n - 1)


def frame_features_for(dump: TokenDump, source: FrameFeatureSource) -> np.ndarray:
    if source is FrameFeatureSource.TOKEN_MEAN:
        return dump.tokens.astype(ACCUM_DTYPE).mean(axis=1)
    return dump.frame_features.astype(ACCUM_DTYPE)


def positions_sorted(frames: Sequence[int], spatial: Sequence[int]) -> bool:
    f = np.asarray(frames, dtype=np.int64)
    s = np.asarray(spatial, dtype=np.int64)
    if f.size < 2:
        return True
    key_prev = (f[:-1], s[:-1])
    key_next = (f[1:], s[1:])
    return bool(
        np.all((key_next[0] > key_prev[0]) | ((key_next[0] == key_prev[0]) & (key_next[1] > key_prev[1])))
    )

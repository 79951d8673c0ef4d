"""Training-free video token pruning: dynamic temporal segmentation,
density-based token merging and attention-based token selection, plus a
prefill FLOPs model."""

from .core import (
    ModelShape,
    Origin,
    PruneConfig,
    PruneResult,
    RetainedToken,
    Segmentation,
    SegmentBudget,
    TokenDump,
    retention_target,
    validate_dump,
)
from .stprune import Merger, Segmenter, budget_plan, compare_strategies, prune

__version__ = "0.1.0"

__all__ = [
    "Merger",
    "ModelShape",
    "Origin",
    "PruneConfig",
    "PruneResult",
    "RetainedToken",
    "SegmentBudget",
    "Segmentation",
    "Segmenter",
    "TokenDump",
    "budget_plan",
    "compare_strategies",
    "prune",
    "retention_target",
    "validate_dump",
]

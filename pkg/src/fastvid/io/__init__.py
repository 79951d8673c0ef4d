"""Serialization of token dumps and prune results, plus synthetic video generation."""

from .dump import read_dump, write_dump
from .result import read_result, write_result
from .synth import Scene, parse_scenes, synth_video

__all__ = [
    "Scene",
    "parse_scenes",
    "read_dump",
    "read_result",
    "synth_video",
    "write_dump",
    "write_result",
]

"""PruneResult serialization: FVPR binary, JSON statistics, SVG rendering.

FVPR v1 layout (little-endian)::

    magic "FVPR" | version u32 = 1 | flags u32 = 0
    F N D pool_out_h pool_out_w count segments       (u32 each)
    segment ranges u32[segments*2] (inclusive start, end) | budgets u32
    per budget: start end dtm_budget anchor_count (u32),
                 anchor_frames u32[anchor_count], per_anchor u32[anchor_count],
                 ats_per_frame u32[end - start + 1]
    frame_index u32[count] | spatial_index u32[count] | origin u8[count]
    merged_count u32[count] | embeddings f32[count*D] | assignment i32[F*N]
"""

from __future__ import annotations

import io as _io
import json
import os
import struct
from typing import Optional, Union

import numpy as np

from ..core import PruneResult, SegmentBudget, Segmentation
from ..errors import BadMagicError, FormatError, TruncatedPayloadError, VersionMismatchError

MAGIC = b"FVPR"
VERSION = 1
STATS_SCHEMA_VERSION = 1
HEADER = struct.Struct("<4sII7I")

PathLike = Union[str, os.PathLike]


def encode_result(result: PruneResult) -> bytes:
    out = _io.BytesIO()
    out.write(
        HEADER.pack(
            MAGIC,
            VERSION,
            0,
            result.frame_count,
            result.tokens_per_frame,
            result.token_dim,
            result.pool_out_h,
            result.pool_out_w,
            len(result),
            len(result.segmentation),
        )
    )
    u32 = lambda seq: np.asarray(seq, dtype="<u4").tobytes()  # noqa: E731
    out.write(u32([v for seg in result.segmentation for v in seg]))
    out.write(struct.pack("<I", len(result.budgets)))
    for b in result.budgets:
        out.write(struct.pack("<4I", b.start, b.end, b.dtm_budget, len(b.anchor_frames)))
        out.write(u32(b.anchor_frames))
        out.write(u32(b.per_anchor_frame))
        out.write(u32(b.ats_per_frame))
    out.write(u32(result.frame_index))
    out.write(u32(result.spatial_index))
    out.write(np.asarray(result.origin, dtype="u1").tobytes())
    out.write(u32(result.merged_count))
    out.write(np.asarray(result.embeddings, dtype="<f4").tobytes())
    out.write(np.asarray(result.assignment, dtype="<i4").tobytes())
    return out.getvalue()


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.off = 0

    def take(self, dtype: str, count: int) -> np.ndarray:
        size = np.dtype(dtype).itemsize * count
        if self.off + size > len(self.buf):
            raise TruncatedPayloadError(
                f"need {size} bytes at offset {self.off}, file has {len(self.buf)}"
            )
        a = np.frombuffer(self.buf, dtype=dtype, count=count, offset=self.off)
        self.off += size
        return a


def decode_result(buf: bytes) -> PruneResult:
    if buf[:4] != MAGIC:
        raise BadMagicError(f"expected magic {MAGIC!r}, got {bytes(buf[:4])!r}")
    if len(buf) < HEADER.size:
        raise TruncatedPayloadError("result header truncated")
    _, version, _flags, F, N, D, ph, pw, count, nseg = HEADER.unpack_from(buf)
    if version != VERSION:
        raise VersionMismatchError(f"unsupported FVPR version {version}")
    rd = _Reader(buf)
    rd.off = HEADER.size
    ranges = rd.take("<u4", 2 * nseg).reshape(-1, 2)
    if nseg == 0:
        raise FormatError("result declares no segments")
    segmentation = Segmentation(tuple((int(a), int(b)) for a, b in ranges))
    (nbudget,) = rd.take("<u4", 1)
    budgets = []
    for _ in range(int(nbudget)):
        s, e, dtm_b, na = (int(v) for v in rd.take("<u4", 4))
        frames = tuple(int(v) for v in rd.take("<u4", na))
        per = tuple(int(v) for v in rd.take("<u4", na))
        ats = tuple(int(v) for v in rd.take("<u4", e - s + 1))
        budgets.append(SegmentBudget(s, e, dtm_b, ats, frames, per))
    frame_index = rd.take("<u4", count).astype(np.int32)
    spatial_index = rd.take("<u4", count).astype(np.int32)
    origin = rd.take("u1", count).copy()
    merged = rd.take("<u4", count).astype(np.int32)
    emb = rd.take("<f4", count * D).astype(np.float32).reshape(count, D)
    assignment = rd.take("<i4", F * N).astype(np.int32).reshape(F, N)
    if rd.off != len(buf):
        raise FormatError(f"{len(buf) - rd.off} trailing bytes after result payload")
    return PruneResult(
        frame_count=F,
        tokens_per_frame=N,
        token_dim=D,
        pool_out_h=ph,
        pool_out_w=pw,
        frame_index=frame_index,
        spatial_index=spatial_index,
        embeddings=emb,
        origin=origin,
        merged_count=merged,
        segmentation=segmentation,
        budgets=tuple(budgets),
        assignment=assignment,
    )


def stats_document(result: PruneResult, extra: Optional[dict] = None) -> dict:
    doc = {
        "schema_version": STATS_SCHEMA_VERSION,
        "stats": result.stats,
        "segments": [
            {
                "start": b.start,
                "end": b.end,
                "dtm_budget": b.dtm_budget,
                "ats_budget": b.ats_budget,
                "ats_per_frame": list(b.ats_per_frame),
                "anchor_frames": list(b.anchor_frames),
                "per_anchor_frame": list(b.per_anchor_frame),
            }
            for b in result.budgets
        ],
    }
    if extra:
        doc.update(extra)
    return doc


def write_result(
    result: PruneResult,
    path: PathLike,
    format: str = "binary",
    extra: Optional[dict] = None,
) -> None:
    """Write ``result`` as ``binary`` (FVPR), ``json-stats`` or ``svg``."""
    if format == "binary":
        with open(path, "wb") as fh:
            fh.write(encode_result(result))
    elif format == "json-stats":
        with open(path, "w") as fh:
            json.dump(stats_document(result, extra), fh, indent=2, sort_keys=True)
            fh.write("\n")
    elif format == "svg":
        from .svg import render_svg

        with open(path, "w") as fh:
            fh.write(render_svg(result))
    else:
        raise ValueError(f"unknown result format {format!r}")


def read_result(path: PathLike) -> PruneResult:
    with open(path, "rb") as fh:
        return decode_result(fh.read())

"""FVTD token-dump files.

Little-endian layout::

    magic "FVTD" | version u32 = 1 | flags u32 (bit 0: attention present)
    F N D Df H W pool_out_h pool_out_w      (u32 each)
    frame_features f32[F*Df] | tokens f32[F*N*D] | attention f32[F*H*W] (if flagged)
"""

from __future__ import annotations

import os
import struct
from typing import Union

import numpy as np

from ..core import TokenDump, validate_dump
from ..errors import (
    BadMagicError,
    DimensionOverflowError,
    FormatError,
    TruncatedPayloadError,
    VersionMismatchError,
)

MAGIC = b"FVTD"
VERSION = 1
FLAG_ATTENTION = 1
HEADER = struct.Struct("<4sII8I")
# refuse headers declaring more than 2**34 floats (64 GiB)
MAX_ELEMENTS = 1 << 34

PathLike = Union[str, os.PathLike]


def encode_dump(dump: TokenDump) -> bytes:
    validate_dump(dump)
    flags = FLAG_ATTENTION if dump.attention is not None else 0
    parts = [
        HEADER.pack(
            MAGIC,
            VERSION,
            flags,
            dump.frame_count,
            dump.tokens_per_frame,
            dump.token_dim,
            dump.frame_feature_dim,
            dump.attn_height,
            dump.attn_width,
            dump.pool_out_h,
            dump.pool_out_w,
        ),
        dump.frame_features.astype("<f4").tobytes(),
        dump.tokens.astype("<f4").tobytes(),
    ]
    if dump.attention is not None:
        parts.append(dump.attention.astype("<f4").tobytes())
    return b"".join(parts)


def decode_dump(buf: bytes) -> TokenDump:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagicError(f"expected magic {MAGIC!r}, got {bytes(buf[:4])!r}")
    if len(buf) < HEADER.size:
        raise TruncatedPayloadError(f"header needs {HEADER.size} bytes, file has {len(buf)}")
    _, version, flags, F, N, D, Df, H, W, ph, pw = HEADER.unpack_from(buf)
    if version != VERSION:
        raise VersionMismatchError(f"unsupported FVTD version {version}; this reader handles {VERSION}")
    has_attn = bool(flags & FLAG_ATTENTION)
    counts = [F * Df, F * N * D] + ([F * H * W] if has_attn else [])
    if any(c > MAX_ELEMENTS for c in counts) or sum(counts) > MAX_ELEMENTS:
        raise DimensionOverflowError(f"declared dimensions {(F, N, D, Df, H, W)} are too large")
    need = HEADER.size + 4 * sum(counts)
    if len(buf) < need:
        raise TruncatedPayloadError(f"payload needs {need} bytes, file has {len(buf)}")
    if len(buf) > need:
        raise FormatError(f"{len(buf) - need} trailing bytes after payload")

    off = HEADER.size
    arrays = []
    for c in counts:
        arrays.append(np.frombuffer(buf, dtype="<f4", count=c, offset=off).astype(np.float32))
        off += 4 * c
    dump = TokenDump(
        frame_count=F,
        tokens_per_frame=N,
        token_dim=D,
        frame_feature_dim=Df,
        attn_height=H,
        attn_width=W,
        pool_out_h=ph,
        pool_out_w=pw,
        frame_features=_ro(arrays[0].reshape(F, Df)),
        tokens=_ro(arrays[1].reshape(F, N, D)),
        attention=_ro(arrays[2].reshape(F, H, W)) if has_attn else None,
    )
    return validate_dump(dump)


def _ro(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def write_dump(dump: TokenDump, path: PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_dump(dump))


def read_dump(path: PathLike) -> TokenDump:
    with open(path, "rb") as fh:
        return decode_dump(fh.read())

"""Deterministic synthetic token dumps with planted scenes and objects."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ..core import TokenDump

Center = Union[str, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class Scene:
    length: int
    center: Center = "a"
    spread: float = 0.1


def parse_scenes(text: str, default_spread: float = 0.1) -> list[Scene]:
    """Parse ``"8:a,8:b:0.2"`` into scenes of ``length:label[:spread]``.

    Scenes sharing a label share a frame-feature centre.
    """
    scenes = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if not 1 <= len(parts) <= 3:
            raise ValueError(f"malformed scene {item!r}; expected length:label[:spread]")
        try:
            length = int(parts[0])
            spread = float(parts[2]) if len(parts) == 3 else default_spread
        except ValueError:
            raise ValueError(f"malformed scene {item!r}; expected length:label[:spread]") from None
        label = parts[1] if len(parts) >= 2 else "a"
        if length < 1 or spread < 0:
            raise ValueError(f"scene {item!r} needs length >= 1 and spread >= 0")
        scenes.append(Scene(length, label, spread))
    if not scenes:
        raise ValueError("empty scene list")
    return scenes


def _label_centers(scenes: list[Scene], dim: int, rng: np.random.Generator) -> list[np.ndarray]:
    labels = []
    for sc in scenes:
        if isinstance(sc.center, str) and sc.center not in labels:
            labels.append(sc.center)
    # orthonormal centres while they fit, random unit vectors beyond that
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    table = {}
    for i, lab in enumerate(labels):
        if i < dim:
            table[lab] = q[:, i]
        else:
            v = rng.standard_normal(dim)
            table[lab] = v / np.linalg.norm(v)
    out = []
    for sc in scenes:
        if isinstance(sc.center, str):
            out.append(table[sc.center])
        else:
            c = np.asarray(sc.center, dtype=np.float64)
            if c.shape != (dim,):
                raise ValueError(f"scene centre must have {dim} entries, got {c.shape}")
            out.append(c)
    return out


def synth_video(
    scenes: Sequence[Union[Scene, tuple]],
    seed: int = 0,
    tokens_per_frame: int = 196,
    token_dim: int = 64,
    frame_feature_dim: int = 32,
    attn_hw: tuple[int, int] = (27, 27),
    pool_out: tuple[int, int] | None = None,
    objects_per_scene: int = 4,
    token_noise: float = 0.15,
    with_attention: bool = True,
) -> TokenDump:
    """Generate a dump whose frames follow ``scenes`` in order.

    Frame features sit at a per-scene centre plus ``spread``-scaled noise.
    Every scene plants a handful of objects: blobs of near-identical tokens
    drifting slowly across the patch grid. Attention peaks over the objects.
    """
    scenes = [sc if isinstance(sc, Scene) else Scene(*sc) for sc in scenes]
    if not scenes:
        raise ValueError("empty scene list")
    N = tokens_per_frame
    if pool_out is None:
        side = math.isqrt(N)
        if side * side != N:
            raise ValueError("pass pool_out explicitly for non-square tokens_per_frame")
        pool_out = (side, side)
    ph, pw = pool_out
    H, W = attn_hw
    rng = np.random.default_rng(seed)
    centers = _label_centers(scenes, frame_feature_dim, rng)
    F = sum(sc.length for sc in scenes)

    feats = np.empty((F, frame_feature_dim))
    tokens = np.empty((F, N, token_dim))
    attn = np.empty((F, H, W))
    yy, xx = np.mgrid[0:ph, 0:pw]
    ay, ax = np.mgrid[0:H, 0:W]
    f = 0
    for sc, center in zip(scenes, centers):
        background = rng.standard_normal(token_dim)
        gradient = rng.standard_normal((2, token_dim)) * 0.5
        obj_emb = rng.standard_normal((objects_per_scene, token_dim)) * 2.0
        obj_pos = rng.uniform(0, 1, size=(objects_per_scene, 2)) * [ph - 1, pw - 1]
        obj_vel = rng.normal(0, 0.3, size=(objects_per_scene, 2))
        obj_rad = rng.uniform(1.2, 2.5, size=objects_per_scene)
        obj_amp = rng.uniform(0.5, 1.0, size=objects_per_scene)
        for t in range(sc.length):
            feats[f] = center + sc.spread * rng.standard_normal(frame_feature_dim) / math.sqrt(
                frame_feature_dim
            )
            base = (
                background
                + (yy.reshape(-1, 1) / max(ph - 1, 1)) * gradient[0]
                + (xx.reshape(-1, 1) / max(pw - 1, 1)) * gradient[1]
            )
            owner = np.full(N, -1)
            best = np.full(N, np.inf)
            heat = np.full((H, W), 0.02)
            for j in range(objects_per_scene):
                cy, cx = obj_pos[j] + t * obj_vel[j]
                d2 = ((yy - cy) ** 2 + (xx - cx) ** 2).reshape(-1)
                inside = (d2 <= obj_rad[j] ** 2) & (d2 < best)
                owner[inside] = j
                best[inside] = d2[inside]
                sy, sx = cy * H / ph, cx * W / pw
                sig = obj_rad[j] * H / ph
                heat += obj_amp[j] * np.exp(-((ay - sy) ** 2 + (ax - sx) ** 2) / (2 * sig**2))
            emb = base.copy()
            hit = owner >= 0
            emb[hit] = obj_emb[owner[hit]]
            tokens[f] = emb + token_noise * rng.standard_normal((N, token_dim))
            attn[f] = heat / heat.sum()
            f += 1

    return TokenDump.from_arrays(
        feats, tokens, attn if with_attention else None, pool_out=(ph, pw)
    )

"""Prefill FLOPs of a GQA + SwiGLU decoder as a function of video-token count."""

from __future__ import annotations

from .core import ModelShape

# Public Qwen2-7B configuration; LLaVA-OneVision-7B, LLaVA-Video-7B and
# Qwen2-VL-7B share this language model.
QWEN2_7B = ModelShape(
    hidden_size=3584, ffn_intermediate=18944, kv_heads=4, head_dim=128, num_layers=28
)

PRESETS: dict[str, ModelShape] = {
    "qwen2-7b": QWEN2_7B,
    "llava-onevision-7b": QWEN2_7B,
    "llava-video-7b": QWEN2_7B,
    "qwen2-vl-7b": QWEN2_7B,
}


def get_preset(name: str) -> ModelShape:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}") from None


def layer_flops(n: int, shape: ModelShape) -> float:
    """FLOPs of one decoder layer over ``n`` tokens.

    K/V projections ``2nD(h_kv*d)``, Q/O projections ``2nD^2``, attention
    scores and mixing ``2n^2 D``, three-matrix FFN ``3nDD'``.
    """
    if n < 0:
        raise ValueError(f"token count must be non-negative, got {n}")
    n = int(n)
    D = shape.hidden_size
    kv = 2 * n * D * (shape.kv_heads * shape.head_dim)
    qo = 2 * n * D * D
    attn = 2 * n * n * D
    ffn = 3 * n * D * shape.ffn_intermediate
    return float(kv + qo + attn + ffn)


def flops_terms(n: int, shape: ModelShape) -> dict[str, int]:
    D = shape.hidden_size
    return {
        "kv_proj": 2 * n * D * shape.kv_heads * shape.head_dim,
        "qo_proj": 2 * n * D * D,
        "attention": 2 * n * n * D,
        "ffn": 3 * n * D * shape.ffn_intermediate,
    }


def total_flops(n: int, shape: ModelShape) -> float:
    return shape.num_layers * layer_flops(n, shape)


def tflops(n: int, shape: ModelShape) -> float:
    return total_flops(n, shape) / 1e12


def format_tflops(value: float) -> str:
    return f"{value:.2f}"

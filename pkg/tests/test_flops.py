import pytest

from fastvid.core import ModelShape
from fastvid.errors import ConfigError
from fastvid.flops import PRESETS, flops_terms, format_tflops, get_preset, layer_flops, tflops, total_flops

QWEN = get_preset("qwen2-7b")


@pytest.mark.parametrize(
    "n, expected",
    [(6272, 48.82), (1568, 10.73), (1248, 8.46), (930, 6.23), (608, 4.04)],
)
def test_reference_table(n, expected):
    assert tflops(n, QWEN) == pytest.approx(expected, rel=5e-3)


def test_formatting():
    assert format_tflops(tflops(6272, QWEN)) == "48.82"
    assert format_tflops(tflops(608, QWEN)) == "4.04"
    assert format_tflops(tflops(0, QWEN)) == "0.00"


def test_terms_sum_to_layer():
    assert sum(flops_terms(1000, QWEN).values()) == layer_flops(1000, QWEN)


def test_toy_shape_by_hand():
    s = ModelShape(hidden_size=2, ffn_intermediate=3, kv_heads=1, head_dim=1, num_layers=2)
    # kv 2*1*2*1 + qo 2*1*4 + attn 2*1*1*2 + ffn 3*1*2*3
    assert layer_flops(1, s) == 4 + 8 + 4 + 18
    assert total_flops(1, s) == 68


def test_quadratic_term_grows_faster():
    assert tflops(2000, QWEN) > 2 * tflops(1000, QWEN)


def test_presets_and_errors():
    assert all(PRESETS[k] == QWEN for k in PRESETS)
    with pytest.raises(KeyError):
        get_preset("gpt-9")
    with pytest.raises(ValueError):
        layer_flops(-1, QWEN)
    with pytest.raises(ConfigError):
        ModelShape(0, 1, 1, 1, 1)

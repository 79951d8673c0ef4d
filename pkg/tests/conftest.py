import numpy as np
import pytest

from fastvid import kernels
from fastvid.core import TokenDump
from fastvid.io import synth_video


@pytest.fixture(params=kernels.BACKENDS)
def backend(request):
    with kernels.backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def scene_dump():
    """32 frames in four scenes, N=196, D=64."""
    return synth_video(
        [(8, "a", 0.1), (8, "b", 0.1), (8, "c", 0.1), (8, "d", 0.1)],
        seed=3,
        tokens_per_frame=196,
        token_dim=64,
    )


@pytest.fixture
def tiny_dump():
    ff = np.array([[1.0, 0.0], [1.0, 0.1]])
    tokens = np.arange(2 * 4 * 3, dtype=np.float32).reshape(2, 4, 3) + 1.0
    attn = np.ones((2, 2, 2))
    return TokenDump.from_arrays(ff, tokens, attn, pool_out=(2, 2))

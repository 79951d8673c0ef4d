import ast
import pathlib

import numpy as np
import pytest

from fastvid.core import Segmentation
from fastvid.dyseg import dyseg
from fastvid.errors import BudgetOverflowError, EmptyInputError
from fastvid.oracle import oracle_density, oracle_segment_check, oracle_topk


def test_oracle_independent_of_fast_paths():
    import fastvid.oracle as mod

    tree = ast.parse(pathlib.Path(mod.__file__).read_text())
    imported = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            imported.add(node.module)
        elif isinstance(node, ast.Import):
            imported.update(a.name for a in node.names)
    assert imported <= {"__future__", "math", "numpy", "core", "errors"}


def test_identical_tokens_zero_scores():
    _, _, score = oracle_density(np.ones((5, 3)), 2)
    assert score.tolist() == [0.0] * 5


def test_density_errors():
    with pytest.raises(EmptyInputError):
        oracle_density(np.zeros((0, 2)), 1)
    with pytest.raises(ValueError):
        oracle_density(np.zeros((3, 2)), 0)


def test_topk_examples():
    assert oracle_topk([], 0) == []
    assert oracle_topk([1.0] * 5, 3) == [0, 1, 2]
    with pytest.raises(BudgetOverflowError):
        oracle_topk([1.0, 2.0], 2, excluded=[0])


def test_segment_check():
    profile = np.array([0.95, 0.5, 0.97, 0.99, 0.92])
    assert oracle_segment_check(profile, dyseg(profile, 2, 0.9), 2, 0.9)
    # missing the t=0.5 < tau boundary
    assert not oracle_segment_check(profile, Segmentation(((0, 5),)), 1, 0.9)
    # spurious boundary after transition 3 (0.99 is neither below tau nor among c-1 smallest)
    spurious = Segmentation.from_boundaries(6, [1, 3])
    assert not oracle_segment_check(profile, spurious, 2, 0.9)

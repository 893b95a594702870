import numpy as np
import pytest
from hypothesis import given, strategies as st

from groupsent.evaluation import CHANCE, confusion_matrix, remap_binary


def test_remap_binary():
    assert remap_binary([1, 2, 3, 4]).tolist() == [0, 0, 1, 1]
    assert remap_binary(3) == 1
    with pytest.raises(ValueError):
        remap_binary([0, 2])
    with pytest.raises(ValueError):
        remap_binary([5])


def test_confusion_example():
    r = confusion_matrix([1, 1, 2], [1, 2, 2])
    assert r.confusion.tolist() == [[1, 1], [0, 1]]
    assert r.accuracy == pytest.approx(2 / 3)
    assert r.error == pytest.approx(1 / 3)
    assert r.precision == [1.0, 0.5]
    assert r.recall == [0.5, 1.0]


def test_confusion_includes_predicted_only_classes():
    r = confusion_matrix([1, 1], [1, 3])
    assert r.classes == [1, 3]
    assert r.confusion.tolist() == [[1, 1], [0, 0]]


def test_confusion_errors():
    with pytest.raises(ValueError):
        confusion_matrix([1], [1, 2])
    with pytest.raises(ValueError):
        confusion_matrix([], [])


def test_grid_text():
    text = confusion_matrix([0, 1], [0, 0]).grid()
    lines = text.splitlines()
    assert len(lines) == 3
    assert lines[1].split() == ["0", "1", "0"]
    assert lines[2].split() == ["1", "1", "0"]


def test_chance_levels():
    assert CHANCE == {"four_way": 0.25, "binary": 0.5}


@given(st.lists(st.tuples(st.integers(1, 4), st.integers(1, 4)), min_size=1, max_size=50))
def test_confusion_totals(pairs):
    t, p = zip(*pairs)
    r = confusion_matrix(t, p)
    assert r.confusion.sum() == len(pairs)
    assert r.accuracy == pytest.approx(np.mean(np.array(t) == np.array(p)))
    assert r.confusion.shape[0] <= 4

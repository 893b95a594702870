import json

import pytest
from hypothesis import given, strategies as st

from groupsent.geometry import (
    AnnotationError,
    Box,
    Direction,
    ImageAnnotation,
    SentimentLabels,
    annotation_to_dict,
    area,
    contains,
    dump_annotations,
    iou,
    load_annotations,
    top_edge_center_distance,
)


@st.composite
def boxes(draw, limit=50):
    x0 = draw(st.integers(0, limit - 1))
    y0 = draw(st.integers(0, limit - 1))
    x1 = draw(st.integers(x0 + 1, limit))
    y1 = draw(st.integers(y0 + 1, limit))
    return Box(x0, y0, x1, y1)


@pytest.mark.parametrize(
    "outer, inner, expected",
    [
        ((0, 0, 10, 10), (2, 2, 5, 5), True),
        ((0, 0, 10, 10), (0, 0, 10, 10), True),
        ((0, 0, 10, 10), (5, 5, 12, 8), False),
    ],
)
def test_contains(outer, inner, expected):
    assert contains(Box(*outer), Box(*inner)) is expected


@pytest.mark.parametrize(
    "face, person, expected",
    [
        ((4, 0, 6, 2), (0, 0, 10, 20), 0.0),
        ((0, 3, 2, 5), (0, 0, 10, 20), 5.0),
        ((4, 1, 6, 3), (4, 1, 6, 3), 0.0),
    ],
)
def test_top_edge_center_distance(face, person, expected):
    assert top_edge_center_distance(Box(*face), Box(*person)) == pytest.approx(expected)


def test_iou_examples():
    a = Box(0, 0, 4, 4)
    assert iou(a, a) == 1.0
    assert iou(a, Box(10, 10, 12, 12)) == 0.0
    # overlap 2x4 = 8, union 16 + 16 - 8 = 24
    assert iou(a, Box(2, 0, 6, 4)) == pytest.approx(1 / 3)


@pytest.mark.parametrize("b, expected", [((0, 0, 1, 1), 1), ((0, 0, 10, 20), 200), ((2, 3, 5, 7), 12)])
def test_area(b, expected):
    assert area(Box(*b)) == expected


@pytest.mark.parametrize("bad", [(5, 0, 4, 4), (0, 0, 0, 4), (-1, 0, 2, 2), (0, 0, float("nan"), 1)])
def test_invalid_box(bad):
    with pytest.raises(ValueError):
        Box(*bad)


@given(boxes(), boxes())
def test_contains_antisymmetric(a, b):
    assert contains(a, a)
    if contains(a, b) and contains(b, a):
        assert a == b


@given(boxes(), boxes())
def test_iou_properties(a, b):
    v = iou(a, b)
    assert v == iou(b, a)
    assert 0.0 <= v <= 1.0
    overlap = min(a.x_max, b.x_max) > max(a.x_min, b.x_min) and min(a.y_max, b.y_max) > max(a.y_min, b.y_min)
    assert (v == 0.0) == (not overlap)
    assert iou(a, a) == 1.0


def test_direction_vectors_unit():
    import numpy as np

    for d in Direction:
        assert np.linalg.norm(d.unit_vector) == pytest.approx(1.0, abs=1e-12)
    assert list(Direction.N.unit_vector) == [0.0, -1.0]
    assert list(Direction.E.unit_vector) == [1.0, 0.0]


def _write(tmp_path, lines):
    p = tmp_path / "ann.jsonl"
    p.write_text("".join(l + "\n" for l in lines), encoding="utf-8")
    return p


VALID = {
    "image": "a.ppm", "width": 100, "height": 80,
    "persons": [[10, 10, 40, 70]], "faces": [[20, 12, 30, 22]], "torsos": [[15, 25, 35, 50]],
    "poselets": [{"id": 3, "score": 0.95, "box": [10, 10, 40, 70]}],
    "labels": {"interaction": 1, "activity": 2, "happiness": 3, "focus": 4},
    "orientations": ["NE"],
}


def test_load_empty(tmp_path):
    assert load_annotations(_write(tmp_path, [])) == []


def test_load_one(tmp_path):
    anns = load_annotations(_write(tmp_path, [json.dumps(VALID)]))
    assert len(anns) == 1
    a = anns[0]
    assert a.persons[0] == Box(10, 10, 40, 70)
    assert a.labels == SentimentLabels(1, 2, 3, 4)
    assert a.orientations == (Direction.NE,)
    assert a.resolve_image() == tmp_path / "a.ppm"


def test_load_reports_bad_box(tmp_path):
    bad = dict(VALID, persons=[[50, 10, 40, 70]])
    with pytest.raises(AnnotationError, match=r"persons\[0\]"):
        load_annotations(_write(tmp_path, [json.dumps(VALID), json.dumps(bad)]))


def test_load_reports_line_number(tmp_path):
    with pytest.raises(AnnotationError, match=":2:"):
        load_annotations(_write(tmp_path, [json.dumps(VALID), "{not json"]))


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"orientations": ["N", "S"]}, "orientations"),
        ({"labels": {"interaction": 0, "activity": 2, "happiness": 3, "focus": 4}}, "labels"),
        ({"faces": [[90, 10, 120, 20]]}, "faces"),
        ({"poselets": [{"id": 150, "score": 1.0, "box": [0, 0, 1, 1]}]}, "poselets"),
        ({"orientations": ["UP"]}, "orientations"),
    ],
)
def test_invariant_violations_name_field(tmp_path, patch, field):
    with pytest.raises(AnnotationError, match=field) as exc:
        load_annotations(_write(tmp_path, [json.dumps(dict(VALID, **patch))]))
    assert "a.ppm" in str(exc.value)


def test_round_trip(tmp_path, corpus):
    anns = load_annotations(corpus / "annotations.jsonl")
    out = tmp_path / "copy.jsonl"
    dump_annotations(anns, out)
    again = load_annotations(out)
    assert [annotation_to_dict(a) for a in again] == [annotation_to_dict(a) for a in anns]
    assert again == anns

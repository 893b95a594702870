"""Boxes, detections, annotations and the predicates used by the matcher.

Coordinates are image pixels with the origin at the top-left corner and
``y`` growing downward.  Boxes are closed rectangles.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np


class AnnotationError(ValueError):
    """Raised when an annotation file is malformed or violates an invariant."""


@dataclass(frozen=True)
class Box:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        vals = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite box coordinates {vals}")
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise ValueError(f"degenerate box {vals}: need x_min < x_max and y_min < y_max")
        if min(vals) < 0:
            raise ValueError(f"negative box coordinates {vals}")

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "Box":
        if len(values) != 4:
            raise ValueError(f"box needs 4 coordinates, got {len(values)}")
        return cls(*(float(v) for v in values))

    def to_list(self) -> list:
        return [_num(self.x_min), _num(self.y_min), _num(self.x_max), _num(self.y_max)]

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def center(self) -> tuple:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    @property
    def top_center(self) -> tuple:
        return ((self.x_min + self.x_max) / 2.0, self.y_min)


class Direction(Enum):
    """Eight ground-plane facing directions, in tie-break order."""

    N = 0
    NE = 1
    E = 2
    SE = 3
    S = 4
    SW = 5
    W = 6
    NW = 7

    @property
    def unit_vector(self) -> np.ndarray:
        return _DIRECTION_VECTORS[self].copy()

    @classmethod
    def from_name(cls, name: str) -> "Direction":
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"unknown direction {name!r}") from None


_H = 1.0 / math.sqrt(2.0)
_DIRECTION_VECTORS = {
    Direction.N: np.array([0.0, -1.0]),
    Direction.NE: np.array([_H, -_H]),
    Direction.E: np.array([1.0, 0.0]),
    Direction.SE: np.array([_H, _H]),
    Direction.S: np.array([0.0, 1.0]),
    Direction.SW: np.array([-_H, _H]),
    Direction.W: np.array([-1.0, 0.0]),
    Direction.NW: np.array([-_H, -_H]),
}


@dataclass(frozen=True)
class PoseletDetection:
    id: int
    score: float
    box: Box

    def __post_init__(self):
        if not 0 <= self.id <= 149:
            raise ValueError(f"poselet id {self.id} outside [0, 149]")
        if not math.isfinite(self.score) or self.score < 0:
            raise ValueError(f"poselet score {self.score} must be finite and >= 0")


AXES = ("interaction", "activity", "happiness", "focus")


@dataclass(frozen=True)
class SentimentLabels:
    interaction: int
    activity: int
    happiness: int
    focus: int

    def __post_init__(self):
        for axis in AXES:
            v = getattr(self, axis)
            if not isinstance(v, (int, np.integer)) or not 1 <= v <= 4:
                raise ValueError(f"label {axis}={v!r} must be an integer in [1, 4]")

    def get(self, axis: str) -> int:
        if axis not in AXES:
            raise ValueError(f"unknown label axis {axis!r}")
        return getattr(self, axis)


@dataclass(frozen=True)
class ImageAnnotation:
    image_path: str
    width: float
    height: float
    persons: tuple = ()
    faces: tuple = ()
    torsos: tuple = ()
    poselets: tuple = ()
    labels: Optional[SentimentLabels] = None
    orientations: Optional[tuple] = None
    base_dir: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        # tuples keep the record hashable/immutable even when lists were passed
        for name in ("persons", "faces", "torsos", "poselets"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.orientations is not None:
            object.__setattr__(self, "orientations", tuple(self.orientations))
        validate_annotation(self)

    def resolve_image(self) -> Path:
        path = Path(self.image_path)
        if not path.is_absolute() and self.base_dir is not None:
            path = Path(self.base_dir) / path
        return path


def validate_annotation(ann: ImageAnnotation) -> None:
    where = f"image {ann.image_path!r}"
    if not (ann.width > 0 and ann.height > 0):
        raise AnnotationError(f"{where}: width/height must be positive")
    for name in ("persons", "faces", "torsos"):
        for i, box in enumerate(getattr(ann, name)):
            if box.x_max > ann.width or box.y_max > ann.height:
                raise AnnotationError(f"{where}: {name}[{i}] {box.to_list()} outside image bounds")
    for i, det in enumerate(ann.poselets):
        b = det.box
        if b.x_max > ann.width or b.y_max > ann.height:
            raise AnnotationError(f"{where}: poselets[{i}] {b.to_list()} outside image bounds")
    if ann.orientations is not None:
        if len(ann.orientations) != len(ann.persons):
            raise AnnotationError(
                f"{where}: orientations has {len(ann.orientations)} entries "
                f"for {len(ann.persons)} persons"
            )
        for d in ann.orientations:
            if not isinstance(d, Direction):
                raise AnnotationError(f"{where}: orientations entry {d!r} is not a Direction")


def contains(outer: Box, inner: Box) -> bool:
    """True iff ``inner`` lies inside ``outer``; touching edges count."""
    return (
        outer.x_min <= inner.x_min
        and outer.y_min <= inner.y_min
        and inner.x_max <= outer.x_max
        and inner.y_max <= outer.y_max
    )


def top_edge_center_distance(face: Box, person: Box) -> float:
    fx, fy = face.top_center
    px, py = person.top_center
    return math.hypot(fx - px, fy - py)


def area(b: Box) -> float:
    return (b.x_max - b.x_min) * (b.y_max - b.y_min)


def intersection_area(a: Box, b: Box) -> float:
    w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def iou(a: Box, b: Box) -> float:
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (area(a) + area(b) - inter)


# ---------------------------------------------------------------------------
# JSON-lines annotation files
# ---------------------------------------------------------------------------


def _num(v: float):
    """Write integral floats as ints so hand-written files round-trip cleanly."""
    v = float(v)
    return int(v) if v.is_integer() else v


def annotation_from_dict(obj: dict, base_dir: Optional[str] = None) -> ImageAnnotation:
    image = obj.get("image")
    where = f"image {image!r}"

    def boxes(key):
        out = []
        for i, raw in enumerate(obj.get(key, [])):
            try:
                out.append(Box.from_list(raw))
            except (ValueError, TypeError) as exc:
                raise AnnotationError(f"{where}: {key}[{i}] {raw!r}: {exc}") from None
        return out

    if image is None or "width" not in obj or "height" not in obj:
        raise AnnotationError("record needs 'image', 'width' and 'height' keys")

    poselets = []
    for i, raw in enumerate(obj.get("poselets", [])):
        try:
            poselets.append(
                PoseletDetection(int(raw["id"]), float(raw["score"]), Box.from_list(raw["box"]))
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise AnnotationError(f"{where}: poselets[{i}]: {exc}") from None

    labels = None
    if obj.get("labels") is not None:
        try:
            labels = SentimentLabels(**{a: obj["labels"][a] for a in AXES})
        except (KeyError, ValueError, TypeError) as exc:
            raise AnnotationError(f"{where}: labels: {exc}") from None

    orientations = None
    if obj.get("orientations") is not None:
        try:
            orientations = [Direction.from_name(s) for s in obj["orientations"]]
        except ValueError as exc:
            raise AnnotationError(f"{where}: orientations: {exc}") from None

    try:
        return ImageAnnotation(
            image_path=str(image),
            width=float(obj["width"]),
            height=float(obj["height"]),
            persons=boxes("persons"),
            faces=boxes("faces"),
            torsos=boxes("torsos"),
            poselets=poselets,
            labels=labels,
            orientations=orientations,
            base_dir=base_dir,
        )
    except AnnotationError:
        raise
    except (ValueError, TypeError) as exc:
        raise AnnotationError(f"{where}: {exc}") from None


def annotation_to_dict(ann: ImageAnnotation) -> dict:
    obj = {
        "image": ann.image_path,
        "width": _num(ann.width),
        "height": _num(ann.height),
        "persons": [b.to_list() for b in ann.persons],
        "faces": [b.to_list() for b in ann.faces],
        "torsos": [b.to_list() for b in ann.torsos],
        "poselets": [{"id": d.id, "score": d.score, "box": d.box.to_list()} for d in ann.poselets],
    }
    if ann.labels is not None:
        obj["labels"] = {a: ann.labels.get(a) for a in AXES}
    if ann.orientations is not None:
        obj["orientations"] = [d.name for d in ann.orientations]
    return obj


def load_annotations(path) -> list:
    """Parse a JSON-lines annotation file.

    Image paths inside the file are resolved relative to the file's directory.
    Blank lines are skipped.
    """
    path = Path(path)
    base_dir = str(path.parent)
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise AnnotationError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise AnnotationError(f"{path}:{lineno}: expected a JSON object")
            try:
                out.append(annotation_from_dict(obj, base_dir=base_dir))
            except AnnotationError as exc:
                raise AnnotationError(f"{path}:{lineno}: {exc}") from None
    return out


def dump_annotations(annotations: Iterable[ImageAnnotation], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ann in annotations:
            fh.write(json.dumps(annotation_to_dict(ann)) + "\n")

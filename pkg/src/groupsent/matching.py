"""Greedy assignment of faces and torsos to person boxes.

Faces are de-duplicated, then each face (in input order) takes the remaining
person box that contains it and whose top-edge midpoint is closest.  Persons
are then visited from smallest to largest, each taking the largest remaining
torso it contains.  Persons left with neither are dropped.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

from .geometry import Box, ImageAnnotation, area, contains, iou, top_edge_center_distance

DEFAULT_IOU_THRESHOLD = 0.3


@dataclass(frozen=True)
class PersonRecord:
    person: Box
    face: Optional[Box]
    torso: Optional[Box]
    person_index: int

    def __post_init__(self):
        if self.face is not None and not contains(self.person, self.face):
            raise ValueError("face must lie inside its person box")
        if self.torso is not None and not contains(self.person, self.torso):
            raise ValueError("torso must lie inside its person box")

    def to_dict(self) -> dict:
        return {
            "person_index": self.person_index,
            "person": self.person.to_list(),
            "face": None if self.face is None else self.face.to_list(),
            "torso": None if self.torso is None else self.torso.to_list(),
        }


def dedupe_faces(faces: Sequence[Box], iou_threshold: float = DEFAULT_IOU_THRESHOLD) -> List[Box]:
    """Keep faces largest-first, dropping any overlapping a kept face by IoU >= threshold."""
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in [0, 1], got {iou_threshold}")
    order = sorted(range(len(faces)), key=lambda i: -area(faces[i]))  # stable: ties keep list order
    kept: List[Box] = []
    for i in order:
        if all(iou(faces[i], k) < iou_threshold for k in kept):
            kept.append(faces[i])
    return kept


def match_faces(faces: Sequence[Box], persons: Sequence[Box]) -> List[Optional[int]]:
    """Person index for every face, or None."""
    free = set(range(len(persons)))
    out: List[Optional[int]] = []
    for face in faces:
        best, best_d = None, None
        for j in sorted(free):
            if not contains(persons[j], face):
                continue
            d = top_edge_center_distance(face, persons[j])
            if best_d is None or d < best_d:
                best, best_d = j, d
        if best is not None:
            free.discard(best)
        out.append(best)
    return out


def match_torsos(
    torsos: Sequence[Box], persons: Sequence[Box], taken: Sequence[int] = ()
) -> List[Optional[int]]:
    """Torso index for every person, or None.

    ``taken`` lists torso indices already consumed elsewhere; they are never
    handed out again.
    """
    free = set(range(len(torsos))) - set(taken)
    out: List[Optional[int]] = [None] * len(persons)
    for p in sorted(range(len(persons)), key=lambda i: (area(persons[i]), i)):
        best = None
        for t in sorted(free):
            if contains(persons[p], torsos[t]) and (
                best is None or area(torsos[t]) > area(torsos[best])
            ):
                best = t
        if best is not None:
            free.discard(best)
            out[p] = best
    return out


def build_person_records(
    annotation: ImageAnnotation, iou_threshold: float = DEFAULT_IOU_THRESHOLD
) -> List[PersonRecord]:
    persons = list(annotation.persons)
    faces = dedupe_faces(annotation.faces, iou_threshold)
    face_of = [None] * len(persons)
    for f, p in enumerate(match_faces(faces, persons)):
        if p is not None:
            face_of[p] = faces[f]
    torso_of = match_torsos(annotation.torsos, persons)
    records = []
    for i, person in enumerate(persons):
        face = face_of[i]
        torso = None if torso_of[i] is None else annotation.torsos[torso_of[i]]
        if face is None and torso is None:
            continue
        records.append(PersonRecord(person, face, torso, i))
    return records

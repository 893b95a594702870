"""Scene-level featurizers and the f1 | f2 | f3 assembly."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .geometry import Box, PoseletDetection, area

SMILE = "smile"
NEUTRAL = "neutral"
GRID = 4
N_POSELETS = 150
POSELET_THRESHOLD = 0.9
MAX_BOXES = 15

EMOTION_DIM = 2 * GRID * GRID
POSELET_DIM = N_POSELETS
GROUP_DIM = 6
SCENE_DIM = EMOTION_DIM + POSELET_DIM + GROUP_DIM
GROUP_NAMES = ["f3_k", "f3_mean_size", "f3_max_size", "f3_singletons", "f3_mean_dist", "f3_mean_facing"]


def _cell(v: float, extent: float) -> int:
    return min(int(np.floor(GRID * v / extent)), GRID - 1)


def emotion_grid(image_w: float, image_h: float, faces: Sequence[Tuple[Box, str]]) -> np.ndarray:
    """Smile and neutral counts over a 4x4 grid, keyed by face-box centre.

    The first 16 entries are smile counts (row-major), the next 16 neutral.
    """
    out = np.zeros(EMOTION_DIM)
    for box, label in faces:
        if label not in (SMILE, NEUTRAL):
            raise ValueError(f"face label must be {SMILE!r} or {NEUTRAL!r}, got {label!r}")
        cx, cy = box.center
        idx = _cell(cy, image_h) * GRID + _cell(cx, image_w)
        out[idx + (0 if label == SMILE else GRID * GRID)] += 1
    return out


def poselet_histogram(detections: Sequence[PoseletDetection], threshold: float = POSELET_THRESHOLD,
                      mode: str = "count") -> np.ndarray:
    if mode not in ("count", "score"):
        raise ValueError(f"mode must be 'count' or 'score', got {mode!r}")
    hist = np.zeros(N_POSELETS)
    for det in detections:
        if not 0 <= det.id < N_POSELETS:
            raise ValueError(f"poselet id {det.id} out of range")
        if det.score >= threshold:
            hist[det.id] += 1.0 if mode == "count" else det.score
    return hist


def bbox_baseline(persons: Sequence[Box], image_w: float, image_h: float,
                  max_boxes: int = MAX_BOXES, seed: int = 0, normalize: bool = True) -> np.ndarray:
    """Flattened person-box coordinates, at most ``max_boxes``, zero padded."""
    persons = list(persons)
    if len(persons) > max_boxes:
        rng = np.random.Generator(np.random.Philox(seed))
        keep = rng.choice(len(persons), size=max_boxes, replace=False)
        persons = [persons[i] for i in sorted(keep)]
    persons.sort(key=lambda b: -area(b))
    out = np.zeros(4 * max_boxes)
    scale = np.array([image_w, image_h, image_w, image_h]) if normalize else np.ones(4)
    for i, b in enumerate(persons):
        out[4 * i : 4 * i + 4] = np.array(b.to_list(), dtype=np.float64) / scale
    return out


@dataclass(frozen=True)
class SceneFeatures:
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray

    @property
    def combined(self) -> np.ndarray:
        return np.concatenate([self.f1, self.f2, self.f3])

    @property
    def fidelity(self) -> np.ndarray:
        """f1 | f2 only: the emotion and poselet blocks without group statistics."""
        return np.concatenate([self.f1, self.f2])


def assemble_scene(f1, f2, f3) -> SceneFeatures:
    f1, f2, f3 = (np.asarray(v, dtype=np.float64).ravel() for v in (f1, f2, f3))
    for name, v, n in (("f1", f1, EMOTION_DIM), ("f2", f2, POSELET_DIM), ("f3", f3, GROUP_DIM)):
        if v.shape[0] != n:
            raise ValueError(f"{name} must have length {n}, got {v.shape[0]}")
    return SceneFeatures(f1, f2, f3)


# ---------------------------------------------------------------------------
# column naming and CSV files
# ---------------------------------------------------------------------------


def emotion_names() -> List[str]:
    names = []
    for label in (SMILE, NEUTRAL):
        names += [f"f1_{label}_r{r}c{c}" for r in range(GRID) for c in range(GRID)]
    return names


def poselet_names() -> List[str]:
    return [f"f2_poselet_{i}" for i in range(N_POSELETS)]


def color_names() -> List[str]:
    return [f"color_bin_{i}" for i in range(512)]


def bbox_names(max_boxes: int = MAX_BOXES) -> List[str]:
    return [f"bbox_{i}_{k}" for i in range(max_boxes) for k in ("x_min", "y_min", "x_max", "y_max")]


def write_feature_csv(path, image_paths: Sequence[str], matrix: np.ndarray, names: Sequence[str]) -> None:
    matrix = np.asarray(matrix, dtype=np.float64).reshape(len(image_paths), len(names))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["image"] + list(names))
        for img, row in zip(image_paths, matrix):
            w.writerow([img] + [repr(float(v)) for v in row])


def read_feature_csv(path):
    """Returns ``(image_paths, matrix, names)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["image"]:
        raise ValueError(f"{path}: missing header row starting with 'image'")
    names = rows[0][1:]
    images = [r[0] for r in rows[1:]]
    matrix = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=np.float64)
    return images, matrix.reshape(len(images), len(names)), names

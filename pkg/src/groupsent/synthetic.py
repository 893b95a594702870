"""Procedural mini-corpus: scene images, annotations and a face training set.

Everything is drawn from a single seed so the shipped copy under
``groupsent/data/synthetic`` can be regenerated byte for byte.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .geometry import AXES, Box, Direction, ImageAnnotation, PoseletDetection, SentimentLabels, annotation_to_dict
from .imaging import resize_bilinear, save_pgm, save_ppm

N_SCENES = 12
SCENE_W, SCENE_H = 320, 200
FACE_SIZE = 48

def bundled_corpus_dir() -> Path:
    return Path(__file__).parent / "data" / "synthetic"


def face_template(smile: bool, rng: np.random.Generator, noise: float = 6.0) -> np.ndarray:
    """48x48 grayscale cartoon face; smiles curve up at the corners."""
    yy, xx = np.mgrid[0:FACE_SIZE, 0:FACE_SIZE].astype(np.float64)
    img = np.full((FACE_SIZE, FACE_SIZE), 60.0)
    img[((xx - 24) / 17) ** 2 + ((yy - 25) / 21) ** 2 <= 1.0] = 185.0
    for ex in (16.0, 32.0):
        img[(xx - ex) ** 2 + (yy - 18) ** 2 <= 9.0] = 35.0
    xs = np.arange(14, 35)
    if smile:
        mouth_y = 37.0 - (xs - 24.0) ** 2 / 16.0
    else:
        mouth_y = np.full(xs.shape, 34.0)
    for x, y in zip(xs, mouth_y):
        y0 = int(round(y))
        img[max(y0 - 1, 0) : y0 + 1, x] = 40.0
    img += rng.normal(0.0, noise, img.shape)
    return np.clip(img, 0, 255)


def _person_texture(direction: Direction, w: int, h: int, color: np.ndarray) -> np.ndarray:
    """Body fill whose stripe angle encodes the facing direction."""
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    angle = np.pi * direction.value / 8.0
    stripes = 0.5 + 0.5 * np.sign(np.sin((xx * np.cos(angle) + yy * np.sin(angle)) * 0.9))
    return color[None, None, :] * (0.55 + 0.45 * stripes[..., None])


def _labels(rng):
    cols = {}
    for axis in AXES:
        vals = np.repeat(np.arange(1, 5), N_SCENES // 4)
        cols[axis] = rng.permutation(vals)
    return [SentimentLabels(**{a: int(cols[a][i]) for a in AXES}) for i in range(N_SCENES)]


def make_scene(index: int, labels: SentimentLabels, rng: np.random.Generator):
    """Render one scene; returns ``(rgb image, annotation dict without 'image')``."""
    bg = np.array([70 + 12 * (index % 4), 90 + 10 * (index % 3), 110 - 8 * (index % 5)], dtype=np.float64)
    img = np.clip(bg[None, None, :] + rng.normal(0, 8, (SCENE_H, SCENE_W, 3)), 0, 255)

    n_groups = 1 + index % 2
    sizes = [int(rng.integers(2, 4)) for _ in range(n_groups)]
    smile_prob = (labels.happiness - 1) / 3.0
    persons, faces, torsos, orientations, poselets = [], [], [], [], []
    x_cursor = 8.0
    for g, size in enumerate(sizes):
        axis_pair = (Direction.E, Direction.W)
        for m in range(size):
            pw = float(rng.integers(24, 32))
            ph = round(pw * 2.4)
            px = x_cursor
            py = float(rng.integers(20, SCENE_H - ph - 4))
            x_cursor += pw + float(rng.integers(2, 6))
            person = Box(px, py, px + pw, py + ph)
            if m == 0:
                direction = axis_pair[0]
            elif m == size - 1:
                direction = axis_pair[1]
            else:
                direction = Direction.S if rng.random() < 0.5 else Direction.N
            persons.append(person)
            orientations.append(direction)

            color = rng.uniform(80, 220, 3)
            x0, y0 = int(px), int(py)
            img[y0 : y0 + ph, x0 : x0 + int(pw)] = _person_texture(direction, int(pw), ph, color)

            fs = round(pw * 0.45)
            fx = round(px + (pw - fs) / 2 + rng.uniform(-1, 1))
            fy = round(py + 2)
            face = Box(fx, fy, fx + fs, fy + fs)
            smile = bool(rng.random() < smile_prob)
            patch = resize_bilinear(face_template(smile, rng), fs, fs)
            img[fy : fy + fs, fx : fx + fs] = patch[..., None]
            has_face = not (g == 0 and m == 1)
            if has_face:
                faces.append(face)
                if rng.random() < 0.3:
                    # shifted duplicate detection of the same face
                    faces.append(Box(fx + 1, fy + 1, fx + fs + 1, min(fy + fs + 1, py + ph)))
            torsos.append(Box(px + 3, py + fs + 4, px + pw - 3, py + fs + 4 + ph * 0.35))
            if rng.random() < 0.5:
                torsos.append(Box(px + 6, py + fs + 8, px + 12, py + fs + 14))
        x_cursor += float(rng.integers(14, 24))

    base = 10 * labels.activity
    for i, person in enumerate(persons):
        for _ in range(int(rng.integers(2, 5))):
            pid = int((base + rng.integers(0, 12)) % 150)
            score = float(np.round(rng.uniform(0.8, 1.0), 3))
            poselets.append(PoseletDetection(pid, score, person))

    ann = {
        "width": SCENE_W,
        "height": SCENE_H,
        "persons": persons,
        "faces": faces,
        "torsos": torsos,
        "poselets": poselets,
        "labels": labels,
        "orientations": orientations,
    }
    return img, ann


def make_corpus(out_dir, seed: int = 0, n_faces: int = 40) -> Path:
    """Write ``annotations.jsonl``, ``images/*.ppm``, ``faces.jsonl`` and ``faces/*.pgm``."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "faces").mkdir(parents=True, exist_ok=True)
    rng = np.random.Generator(np.random.Philox(seed))
    labels = _labels(rng)
    lines = []
    for i in range(N_SCENES):
        img, parts = make_scene(i, labels[i], rng)
        rel = f"images/scene_{i:02d}.ppm"
        save_ppm(out / rel, img)
        ann = ImageAnnotation(image_path=rel, **parts)
        lines.append(json.dumps(annotation_to_dict(ann)))
    (out / "annotations.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")

    face_lines = []
    for i in range(n_faces):
        smile = i % 2 == 0
        rel = f"faces/face_{i:03d}.pgm"
        save_pgm(out / rel, face_template(smile, rng, noise=10.0))
        face_lines.append(json.dumps({"image": rel, "label": "smile" if smile else "neutral"}))
    (out / "faces.jsonl").write_text("\n".join(face_lines) + "\n", encoding="utf-8")
    return out

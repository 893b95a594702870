"""HOG descriptors for person crops and 8-way facing-direction classification."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import classifier
from .geometry import Direction
from .imaging import central_dx, central_dy, crop, load_ppm, resize_bilinear, to_grayscale

HOG_EPS = 1e-5


@dataclass(frozen=True)
class HogConfig:
    width: int = 64
    height: int = 128
    cell: int = 8
    block: int = 2
    bins: int = 9

    def __post_init__(self):
        if self.width % self.cell or self.height % self.cell:
            raise ValueError("window must be divisible by the cell size")

    @property
    def n_features(self) -> int:
        bx = self.width // self.cell - self.block + 1
        by = self.height // self.cell - self.block + 1
        return bx * by * self.block * self.block * self.bins


def cell_histograms(img: np.ndarray, cfg: HogConfig = HogConfig()) -> np.ndarray:
    """``(cells_y, cells_x, bins)`` magnitude-weighted unsigned orientation histograms.

    Bin ``k`` is centred on ``k * 180 / bins`` degrees; votes are split
    linearly between the two nearest centres, wrapping at 180.
    """
    gx = central_dx(img)
    gy = central_dy(img)
    mag = np.hypot(gx, gy)
    ang = np.degrees(np.arctan2(gy, gx)) % 180.0
    pos = ang / (180.0 / cfg.bins)
    lo = np.floor(pos).astype(int)
    frac = pos - lo
    lo %= cfg.bins
    hi = (lo + 1) % cfg.bins

    cy, cx = cfg.height // cfg.cell, cfg.width // cfg.cell
    cell_id = (np.arange(cfg.height) // cfg.cell)[:, None] * cx + (np.arange(cfg.width) // cfg.cell)[None, :]
    hist = np.zeros(cy * cx * cfg.bins)
    np.add.at(hist, (cell_id * cfg.bins + lo).ravel(), (mag * (1.0 - frac)).ravel())
    np.add.at(hist, (cell_id * cfg.bins + hi).ravel(), (mag * frac).ravel())
    return hist.reshape(cy, cx, cfg.bins)


def extract_hog(crop_img: np.ndarray, cfg: HogConfig = HogConfig()) -> np.ndarray:
    img = np.asarray(crop_img, dtype=np.float64)
    if img.shape != (cfg.height, cfg.width):
        raise ValueError(f"HOG needs a {cfg.width}x{cfg.height} grayscale crop, got shape {img.shape}")
    cells = cell_histograms(img, cfg)
    cy, cx, _ = cells.shape
    blocks = []
    for r in range(cy - cfg.block + 1):
        for c in range(cx - cfg.block + 1):
            v = cells[r : r + cfg.block, c : c + cfg.block].ravel()
            blocks.append(v / math.sqrt(float(v @ v) + HOG_EPS))
    return np.concatenate(blocks)


def prepare_person(crop_img: np.ndarray, cfg: HogConfig = HogConfig()) -> np.ndarray:
    return resize_bilinear(to_grayscale(crop_img), cfg.width, cfg.height)


class HogTransformer(BaseEstimator, TransformerMixin):
    """Person crops (any size, gray or RGB) to HOG vectors."""

    def __init__(self, width=64, height=128, cell=8, block=2, bins=9):
        self.width = width
        self.height = height
        self.cell = cell
        self.block = block
        self.bins = bins

    def _config(self):
        return HogConfig(self.width, self.height, self.cell, self.block, self.bins)

    def fit(self, X, y=None):
        self.n_features_out_ = self._config().n_features
        return self

    def transform(self, X):
        cfg = self._config()
        rows = [extract_hog(prepare_person(np.asarray(c), cfg), cfg) for c in X]
        if not rows:
            return np.zeros((0, cfg.n_features))
        return np.stack(rows)


def orientation_dataset(annotations, cfg: HogConfig = HogConfig(), image_loader=load_ppm):
    """HOG rows and direction indices for every labelled person box."""
    missing = [a.image_path for a in annotations if a.orientations is None and a.persons]
    if missing:
        raise ValueError(f"annotations without orientations: {', '.join(missing)}")
    X, y = [], []
    for ann in annotations:
        if not ann.persons:
            continue
        img = image_loader(ann.resolve_image())
        for box, direction in zip(ann.persons, ann.orientations):
            X.append(extract_hog(prepare_person(crop(img, box), cfg), cfg))
            y.append(direction.value)
    return np.array(X).reshape(len(X), cfg.n_features), np.array(y, dtype=int)


def model_from_direction_indices(model: classifier.LinearModel, cfg: HogConfig) -> classifier.LinearModel:
    model.classes = [Direction(int(i)).name for i in model.classes]
    model.config = dict(model.config, hog=cfg.__dict__.copy())
    return model


def train_orientation(annotations, cfg: HogConfig = HogConfig(), lam=1e-4, epochs=100,
                      eta0=0.01, seed=0, image_loader=load_ppm) -> classifier.LinearModel:
    """Train a one-vs-rest direction classifier on annotated person boxes.

    Classes are stored as direction names in N, NE, ..., NW order so that the
    lower-index direction wins ties.
    """
    X, y = orientation_dataset(annotations, cfg, image_loader)
    if len(set(y.tolist())) < 2:
        raise ValueError("need at least 2 distinct directions to train")
    model = classifier.train(X, y, lam=lam, epochs=epochs, eta0=eta0, seed=seed)
    return model_from_direction_indices(model, cfg)


def predict_orientation(model: classifier.LinearModel, person_crop: np.ndarray,
                        cfg: HogConfig = HogConfig()) -> Direction:
    feats = extract_hog(prepare_person(person_crop, cfg), cfg)
    scores = classifier.decision_values(model, feats)
    order = [Direction.from_name(c) for c in model.classes]
    best = max(range(len(order)), key=lambda k: (scores[k], -order[k].value))
    return order[best]

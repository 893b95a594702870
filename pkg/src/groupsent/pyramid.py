"""Half-octave multi-scale Gaussian derivative features for face crops."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array

from .imaging import gaussian_convolve, gradients, resize_bilinear, to_grayscale

WINDOW = 4
LEVELS_PER_SCALE = 3
STATS_PER_WINDOW = 10


@dataclass(frozen=True)
class PyramidConfig:
    face_size: int = 48
    base_sigma: float = 1.0
    scales: int = 3

    def __post_init__(self):
        if self.face_size < WINDOW or self.face_size % WINDOW:
            raise ValueError(f"face_size {self.face_size} must be a positive multiple of {WINDOW}")
        if self.scales < 1:
            raise ValueError("scales must be >= 1")
        if not self.base_sigma > 0:
            raise ValueError("base_sigma must be positive")

    @property
    def n_features(self) -> int:
        n_windows = (self.face_size // WINDOW) ** 2
        return self.scales * LEVELS_PER_SCALE * n_windows * STATS_PER_WINDOW


def window_stats(img: np.ndarray, window: int = WINDOW) -> np.ndarray:
    """Per-window [5 gradient means, 5 population stds], windows row-major."""
    h, w = img.shape
    maps = np.stack(gradients(img))  # (5, h, w)
    blocks = maps.reshape(5, h // window, window, w // window, window)
    blocks = blocks.transpose(1, 3, 0, 2, 4).reshape(h // window, w // window, 5, window * window)
    means = blocks.mean(axis=-1)
    stds = blocks.std(axis=-1)
    return np.concatenate([means, stds], axis=-1).reshape(-1)


def pyramid_levels(face: np.ndarray, cfg: PyramidConfig = PyramidConfig()):
    """Yield ``(scale, level, image)`` for I0, I1, I2 of every scale.

    I1 = I0 * g(s), I2 = I1 * g(sqrt(2) s); the next scale starts at I2 with
    s doubled.  There is no subsampling between scales.
    """
    base = np.asarray(face, dtype=np.float64)
    sigma = cfg.base_sigma
    for i in range(cfg.scales):
        i1 = gaussian_convolve(base, sigma)
        i2 = gaussian_convolve(i1, math.sqrt(2.0) * sigma)
        yield i, 0, base
        yield i, 1, i1
        yield i, 2, i2
        base = i2
        sigma *= 2.0


def extract_face_features(face: np.ndarray, cfg: PyramidConfig = PyramidConfig()) -> np.ndarray:
    face = np.asarray(face, dtype=np.float64)
    if face.ndim != 2 or face.shape != (cfg.face_size, cfg.face_size):
        raise ValueError(
            f"face must be {cfg.face_size}x{cfg.face_size} grayscale, got shape {face.shape}"
        )
    parts = [window_stats(level) for _, _, level in pyramid_levels(face, cfg)]
    return np.concatenate(parts)


def prepare_face(crop: np.ndarray, face_size: int = 48) -> np.ndarray:
    """Grayscale and resize an arbitrary face crop to ``face_size`` square."""
    return resize_bilinear(to_grayscale(crop), face_size, face_size)


class FacePyramidTransformer(BaseEstimator, TransformerMixin):
    """Stateless transformer mapping face crops to pyramid features.

    ``X`` is either a 3-D array ``(n, face_size, face_size)`` or a 2-D array of
    flattened faces ``(n, face_size**2)``.  Set ``resize=True`` to accept a list
    of crops of any size (grayscale or RGB).
    """

    def __init__(self, face_size=48, base_sigma=1.0, scales=3, resize=False):
        self.face_size = face_size
        self.base_sigma = base_sigma
        self.scales = scales
        self.resize = resize

    def _config(self):
        return PyramidConfig(self.face_size, self.base_sigma, self.scales)

    def fit(self, X, y=None):
        self.config_ = self._config()
        self.n_features_out_ = self.config_.n_features
        return self

    def transform(self, X):
        cfg = self._config()
        if self.resize:
            faces = [prepare_face(np.asarray(c), cfg.face_size) for c in X]
        else:
            arr = np.asarray(X, dtype=np.float64)
            if arr.ndim == 2:
                arr = check_array(arr).reshape(-1, cfg.face_size, cfg.face_size)
            faces = list(arr)
        if not faces:
            return np.zeros((0, cfg.n_features))
        return np.stack([extract_face_features(f, cfg) for f in faces])

from pathlib import Path

import numpy as np
import pytest

from groupsent.imaging import load_pgm
from groupsent.pyramid import FacePyramidTransformer, PyramidConfig, extract_face_features, pyramid_levels

DATA = Path(__file__).parent / "data"
N_WIN = 12 * 12


def test_default_length():
    assert PyramidConfig().n_features == 3 * 3 * 144 * 10 == 12960


def test_constant_face_all_zero():
    out = extract_face_features(np.full((48, 48), 93.0))
    assert out.shape == (12960,)
    assert np.all(out == 0.0)


def test_ramp_level0_mean_ix():
    face = np.tile(np.arange(48, dtype=float), (48, 1))
    out = extract_face_features(face).reshape(3, 3, 12, 12, 10)
    level0 = out[0, 0]
    interior = level0[:, 1:-1]
    assert np.allclose(interior[..., 0], 1.0)  # mean Ix
    assert np.allclose(interior[..., 5], 0.0)  # std Ix


def test_wrong_shape_rejected():
    with pytest.raises(ValueError):
        extract_face_features(np.zeros((48, 40)))
    with pytest.raises(ValueError):
        extract_face_features(np.zeros((32, 32)))
    with pytest.raises(ValueError):
        PyramidConfig(face_size=50)


def test_sigma_schedule():
    from groupsent.imaging import gaussian_convolve

    face = np.random.default_rng(0).uniform(0, 255, (48, 48))
    levels = list(pyramid_levels(face))
    assert [(s, l) for s, l, _ in levels] == [(s, l) for s in range(3) for l in range(3)]
    # scale 1 starts at the last level of scale 0 and blurs with sigma 2
    assert np.array_equal(levels[3][2], levels[2][2])
    assert np.array_equal(levels[4][2], gaussian_convolve(levels[2][2], 2.0))


def test_deterministic_and_dc_invariant():
    rng = np.random.default_rng(5)
    face = rng.uniform(0, 255, (48, 48))
    a = extract_face_features(face)
    assert np.array_equal(a, extract_face_features(face.copy()))
    assert np.max(np.abs(extract_face_features(face + 37.0) - a)) < 1e-9


def test_horizontal_flip_mirrors_mean_ix():
    rng = np.random.default_rng(6)
    face = rng.uniform(0, 255, (48, 48))
    a = extract_face_features(face).reshape(3, 3, 12, 12, 10)
    b = extract_face_features(face[:, ::-1]).reshape(3, 3, 12, 12, 10)
    assert np.allclose(b[..., 0], -a[:, :, :, ::-1, 0], atol=1e-9)
    assert np.allclose(np.sort(np.abs(b[..., 0]).ravel()), np.sort(np.abs(a[..., 0]).ravel()), atol=1e-9)


def test_golden_vector():
    face = load_pgm(DATA / "golden_face.pgm")
    golden = np.load(DATA / "golden_face_features.npy")
    assert np.array_equal(extract_face_features(face), golden)


def test_transformer():
    rng = np.random.default_rng(7)
    faces = rng.uniform(0, 255, (3, 48, 48))
    t = FacePyramidTransformer().fit(faces)
    out = t.transform(faces)
    assert out.shape == (3, 12960)
    assert np.array_equal(out, t.transform(faces.reshape(3, -1)))
    crops = [rng.uniform(0, 255, (20, 17)), rng.uniform(0, 255, (60, 60, 3))]
    assert FacePyramidTransformer(resize=True).fit_transform(crops).shape == (2, 12960)
    assert FacePyramidTransformer(scales=1).get_params()["scales"] == 1

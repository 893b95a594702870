"""Image I/O and the numeric primitives every featurizer builds on.

RGB images are ``(height, width, 3)`` uint8 arrays and grayscale images are
``(height, width)`` float64 arrays.  Only binary 8-bit PPM (P6) and PGM (P5)
are read and written; convert other formats beforehand.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

GRAY_WEIGHTS = (0.299, 0.587, 0.114)


class ImageFormatError(ValueError):
    pass


def _read_header(data: bytes, n_fields: int):
    """Return header integers and the payload offset of a netpbm file."""
    fields = []
    pos = 2
    while len(fields) < n_fields:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated header")
        try:
            fields.append(int(data[start:pos]))
        except ValueError:
            raise ImageFormatError(f"bad header field {data[start:pos]!r}") from None
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise ImageFormatError("truncated header")
    return fields, pos + 1


def _load_netpbm(path, magic: bytes, channels: int) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:2] != magic:
        raise ImageFormatError(f"{path}: bad magic number {data[:2]!r}, expected {magic!r}")
    (width, height, maxval), offset = _read_header(data, 3)
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: invalid dimensions {width}x{height}")
    if maxval != 255:
        raise ImageFormatError(f"{path}: maxval {maxval} unsupported, only 255")
    need = width * height * channels
    payload = data[offset : offset + need]
    if len(payload) < need:
        raise ImageFormatError(
            f"{path}: truncated payload, {len(payload)} of {need} bytes for {width}x{height}"
        )
    arr = np.frombuffer(payload, dtype=np.uint8)
    if channels == 1:
        return arr.reshape(height, width)
    return arr.reshape(height, width, channels)


def load_ppm(path) -> np.ndarray:
    return _load_netpbm(path, b"P6", 3).copy()


def load_pgm(path) -> np.ndarray:
    return _load_netpbm(path, b"P5", 1).astype(np.float64)


def save_ppm(path, img: np.ndarray) -> None:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("PPM needs an (h, w, 3) array")
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(np.clip(np.rint(img), 0, 255).astype(np.uint8).tobytes())


def save_pgm(path, img: np.ndarray) -> None:
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError("PGM needs an (h, w) array")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(np.clip(np.rint(img), 0, 255).astype(np.uint8).tobytes())


def to_grayscale(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img.copy()
    r, g, b = GRAY_WEIGHTS
    return r * img[..., 0] + g * img[..., 1] + b * img[..., 2]


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled 1-D Gaussian, radius ceil(3 sigma), normalized to unit sum."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = max(1, math.ceil(3.0 * sigma))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return k / k.sum()


def _correlate_axis(img: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = len(kernel) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(img, pad, mode="edge")
    n = img.shape[axis]
    out = np.zeros_like(img)
    for j, kv in enumerate(kernel):
        sl = [slice(None), slice(None)]
        sl[axis] = slice(j, j + n)
        out += kv * padded[tuple(sl)]
    return out


def gaussian_convolve(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with clamp-to-edge borders; output keeps the input shape."""
    kernel = gaussian_kernel(sigma)
    img = np.asarray(img, dtype=np.float64)
    return _correlate_axis(_correlate_axis(img, kernel, 1), kernel, 0)


def _shift(img: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """out[y, x] = img[clamp(y + dy), clamp(x + dx)]."""
    h, w = img.shape
    ys = np.clip(np.arange(h) + dy, 0, h - 1)
    xs = np.clip(np.arange(w) + dx, 0, w - 1)
    return img[np.ix_(ys, xs)]


def central_dx(img: np.ndarray) -> np.ndarray:
    return (_shift(img, 1, 0) - _shift(img, -1, 0)) / 2.0


def central_dy(img: np.ndarray) -> np.ndarray:
    return (_shift(img, 0, 1) - _shift(img, 0, -1)) / 2.0


def gradients(img: np.ndarray):
    """First and second order central differences: ``(Ix, Iy, Ixx, Iyy, Ixy)``."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < 3 or img.shape[1] < 3:
        raise ValueError(f"gradients need a 2-D image of at least 3x3, got {img.shape}")
    ix = central_dx(img)
    iy = central_dy(img)
    ixx = _shift(img, 1, 0) - 2.0 * img + _shift(img, -1, 0)
    iyy = _shift(img, 0, 1) - 2.0 * img + _shift(img, 0, -1)
    ixy = central_dy(ix)
    return ix, iy, ixx, iyy, ixy


def resize_bilinear(img: np.ndarray, new_w: int, new_h: int) -> np.ndarray:
    """Bilinear resampling with pixel-center alignment (half-pixel offsets)."""
    if new_w < 1 or new_h < 1:
        raise ValueError(f"target size must be at least 1x1, got {new_w}x{new_h}")
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    if (h, w) == (new_h, new_w):
        return img.copy()

    def coords(n_out, n_in):
        src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0, n_in - 1)
        lo = np.floor(src).astype(int)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, src - lo

    y0, y1, fy = coords(new_h, h)
    x0, x1, fx = coords(new_w, w)
    if img.ndim == 3:
        fy = fy[:, None, None]
        fx = fx[None, :, None]
    else:
        fy = fy[:, None]
        fx = fx[None, :]
    top = img[y0][:, x0] * (1 - fx) + img[y0][:, x1] * fx
    bottom = img[y1][:, x0] * (1 - fx) + img[y1][:, x1] * fx
    return top * (1 - fy) + bottom * fy


def crop(img: np.ndarray, box) -> np.ndarray:
    """Sub-image under ``box``, rounded outward to whole pixels and clipped to the image."""
    h, w = img.shape[:2]
    x0 = max(0, math.floor(box.x_min))
    y0 = max(0, math.floor(box.y_min))
    x1 = min(w, math.ceil(box.x_max))
    y1 = min(h, math.ceil(box.y_max))
    if x0 >= x1 or y0 >= y1:
        raise ValueError(f"box {box} lies outside the {w}x{h} image")
    return img[y0:y1, x0:x1].copy()


def color_histogram(img: np.ndarray, normalize: bool = True) -> np.ndarray:
    """512-bin joint RGB histogram, 8 levels per channel."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("color_histogram needs an (h, w, 3) RGB image")
    q = img.astype(np.int64) // 32
    idx = q[..., 0] * 64 + q[..., 1] * 8 + q[..., 2]
    hist = np.bincount(idx.ravel(), minlength=512).astype(np.float64)
    if normalize:
        hist /= hist.sum()
    return hist

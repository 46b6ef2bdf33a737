"""Scene preprocessing, matched to the simulation engine's contract.

The engine normalizes every scene the same way before rendering:
bilinear resize with half-pixel center alignment, BT.601 luma, then
cumulative-histogram equalization of the luma plane.  Segmentation has
to run on the same normalized view or mask boundaries drift against
what participants actually see, so this module reimplements that
pipeline from the written contract.  Equivalence is held to within one
luma level by test.

Conventions that matter for equivalence:

* resize samples destination pixel centers at source pixel centers
  (``(i + 0.5) * src / dst - 0.5``, edge clamped) and blends with the
  convex form ``a * (1 - w) + b * w``;
* color channels are rounded to uint8 after resizing, then the BT.601
  matrix is applied as one full-matrix product and rounded; the luma
  row is ``(0.299, 1 - 0.114 - 0.299, 0.114)``.  The operation shape
  matters: rounding sits right at half-level boundaries for many pixel
  values, so the product must be computed the way the contract states
  it, as a single RGB-to-YUV matrix application, not a per-plane dot;
* the equalization map is ``round((cdf - cdf_min) / (N - cdf_min) * 255)``
  with ``cdf_min`` taken at the first occupied bin, and a constant
  plane passes through unchanged.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

_KB, _KR = 0.114, 0.299
_LUMA_ROW = np.array([_KR, 1.0 - _KB - _KR, _KB])
# Byte-range chroma rows: scaled to 0.5 at the extremes and offset by
# +128 so each plane occupies [0, 255].
_YUV_MATRIX = np.stack([
    _LUMA_ROW,
    0.5 / (1.0 - _KB) * (np.array([0.0, 0.0, 1.0]) - _LUMA_ROW),
    0.5 / (1.0 - _KR) * (np.array([1.0, 0.0, 0.0]) - _LUMA_ROW),
])
_YUV_OFFSET = np.array([0.0, 128.0, 128.0])

LUMA_WEIGHTS = tuple(_LUMA_ROW)


def _axis_samples(n_dst: int, n_src: int):
    """Source coordinates, floor/ceil indices and blend weights for one axis."""
    centers = (np.arange(n_dst, dtype=np.float64) + 0.5) * (n_src / n_dst) - 0.5
    centers = np.clip(centers, 0.0, n_src - 1.0)
    lo = np.floor(centers).astype(np.intp)
    hi = np.minimum(lo + 1, n_src - 1)
    return lo, hi, centers - lo


def resample_plane(plane: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resize of one float plane; identity sizes return a copy."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ValueError(f"expected a 2-D plane, got shape {plane.shape}")
    if width <= 0 or height <= 0:
        raise ValueError(f"target size must be positive, got {width}x{height}")
    src_h, src_w = plane.shape
    if (src_w, src_h) == (width, height):
        return plane.copy()
    x0, x1, wx = _axis_samples(width, src_w)
    y0, y1, wy = _axis_samples(height, src_h)
    rows_lo = plane.take(y0, axis=0)
    rows_hi = plane.take(y1, axis=0)
    top = rows_lo.take(x0, axis=1) * (1.0 - wx) + rows_lo.take(x1, axis=1) * wx
    bot = rows_hi.take(x0, axis=1) * (1.0 - wx) + rows_hi.take(x1, axis=1) * wx
    return top * (1.0 - wy[:, None]) + bot * wy[:, None]


def resize_rgb(img: np.ndarray, width: int, height: int) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValueError("expected a uint8 (H, W, 3) image")
    if (img.shape[1], img.shape[0]) == (width, height):
        return img.copy()
    out = np.empty((height, width, 3), dtype=np.uint8)
    for c in range(3):
        plane = resample_plane(img[:, :, c].astype(np.float64), width, height)
        out[:, :, c] = np.clip(np.rint(plane), 0, 255).astype(np.uint8)
    return out


def luma_u8(img: np.ndarray) -> np.ndarray:
    """BT.601 luma of a uint8 RGB image, rounded to uint8."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {img.shape}")
    yuv = img.astype(np.float64) @ _YUV_MATRIX.T + _YUV_OFFSET
    return np.clip(np.rint(yuv), 0, 255).astype(np.uint8)[:, :, 0]


def equalize_u8(y: np.ndarray) -> np.ndarray:
    """Cumulative-histogram equalization over 256 bins."""
    y = np.asarray(y)
    if y.dtype != np.uint8 or y.ndim != 2:
        raise ValueError("expected a uint8 plane")
    counts, _ = np.histogram(y, bins=256, range=(0, 256))
    occupied = np.flatnonzero(counts)
    if occupied.size <= 1:
        return y.copy()
    cdf = np.cumsum(counts)
    floor = cdf[occupied[0]]
    table = np.rint((cdf - floor) / float(y.size - floor) * 255.0)
    return np.clip(table, 0, 255).astype(np.uint8)[y]


def preprocess_luma(img: np.ndarray, width: int = 1024, height: int = 1024) -> np.ndarray:
    """Resize, weight to luma and equalize; returns a [0, 1] float plane.

    This is the view the segmenter operates on and the plane the
    engine-equivalence tests compare.
    """
    return equalize_u8(luma_u8(resize_rgb(img, width, height))).astype(np.float64) / 255.0


def read_rgb(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def write_rgb(path, img: np.ndarray):
    Image.fromarray(img, mode="RGB").save(path, format="PNG")

"""Deterministic image preprocessing.

Grayscale frames are float64 arrays in [0, 1]; color images are uint8
arrays of shape (H, W, 3).  All operations are pure functions of their
inputs, so identical inputs always produce identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy import ndimage

# BT.601 full-range RGB -> YUV.  Chroma uses the 0.5-normalized (byte
# range) scaling and a +128 offset so all three planes fit an unsigned
# byte; the analog 0.436/0.615 scaling would overflow it.
_KB, _KR = 0.114, 0.299
_LUMA = np.array([_KR, 1.0 - _KB - _KR, _KB])
_RGB_TO_YUV = np.stack([
    _LUMA,
    0.5 / (1.0 - _KB) * (np.array([0.0, 0.0, 1.0]) - _LUMA),
    0.5 / (1.0 - _KR) * (np.array([1.0, 0.0, 0.0]) - _LUMA),
])
_YUV_OFFSET = np.array([0.0, 128.0, 128.0])
# Exact matrix inverse keeps the round trip within rounding error.
_YUV_TO_RGB = np.linalg.inv(_RGB_TO_YUV)


def _check_rgb(img) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) color image, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 color image, got dtype {img.dtype}")
    return img


def _check_gray(frame) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 2:
        raise ValueError(f"expected 2-D grayscale frame, got shape {frame.shape}")
    return frame


def rgb_to_yuv(img: np.ndarray) -> np.ndarray:
    """Convert an RGB image to BT.601 YUV, rounded to uint8 planes.

    Y = 0.299 R + 0.587 G + 0.114 B; U and V carry the standard +128
    offset.  For full-range RGB input all three planes stay inside
    [0, 255] before rounding.
    """
    img = _check_rgb(img)
    yuv = img.astype(np.float64) @ _RGB_TO_YUV.T + _YUV_OFFSET
    return np.clip(np.rint(yuv), 0, 255).astype(np.uint8)


def yuv_to_rgb(yuv: np.ndarray) -> np.ndarray:
    """Invert :func:`rgb_to_yuv`.  Round trips are exact within +/-2."""
    yuv = _check_rgb(yuv)
    rgb = (yuv.astype(np.float64) - _YUV_OFFSET) @ _YUV_TO_RGB.T
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


def equalize_luma(yuv: np.ndarray) -> np.ndarray:
    """Histogram-equalize the Y plane over 256 bins; U and V pass through.

    Uses the cumulative-histogram mapping
    ``h(v) = round((cdf(v) - cdf_min) / (N - cdf_min) * 255)`` where
    ``cdf_min`` is the first nonzero cumulative count.  A constant Y
    plane is returned unchanged: there is no contrast to spread.
    """
    yuv = _check_rgb(yuv)
    y = yuv[:, :, 0]
    hist = np.bincount(y.ravel(), minlength=256)
    occupied = np.flatnonzero(hist)
    out = yuv.copy()
    if occupied.size <= 1:
        return out
    cdf = np.cumsum(hist)
    cdf_min = cdf[occupied[0]]
    n = y.size
    lut = np.rint((cdf - cdf_min) / float(n - cdf_min) * 255.0)
    lut = np.clip(lut, 0, 255).astype(np.uint8)
    out[:, :, 0] = lut[y]
    return out


def equalize_gray(frame: np.ndarray) -> np.ndarray:
    """Equalize a [0, 1] grayscale frame via its 8-bit quantization."""
    frame = _check_gray(frame)
    y = np.clip(np.rint(frame * 255.0), 0, 255).astype(np.uint8)
    stacked = np.stack([y, y, y], axis=2)
    return equalize_luma(stacked)[:, :, 0].astype(np.float64) / 255.0


def resize(img: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resize with half-pixel center alignment.

    Accepts either a float grayscale frame or a uint8 color image and
    returns the same kind.  Resizing to the identical size returns an
    exact copy.  Bilinear blending is convex, so output values never
    leave the input range.
    """
    if width <= 0 or height <= 0:
        raise ValueError(f"target size must be positive, got {width}x{height}")
    img = np.asarray(img)
    if img.ndim == 2:
        frame = _check_gray(img)
        return _resize_plane(frame, width, height)
    img = _check_rgb(img)
    if (img.shape[1], img.shape[0]) == (width, height):
        return img.copy()
    planes = [
        _resize_plane(img[:, :, c].astype(np.float64), width, height)
        for c in range(3)
    ]
    return np.clip(np.rint(np.stack(planes, axis=2)), 0, 255).astype(np.uint8)


def _resize_plane(plane: np.ndarray, width: int, height: int) -> np.ndarray:
    src_h, src_w = plane.shape
    if (src_w, src_h) == (width, height):
        return plane.copy()
    # Sample positions map destination pixel centers onto source pixel
    # centers; edges clamp.
    xs = np.clip((np.arange(width) + 0.5) * (src_w / width) - 0.5, 0.0, src_w - 1.0)
    ys = np.clip((np.arange(height) + 0.5) * (src_h / height) - 0.5, 0.0, src_h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, src_w - 1)
    y1 = np.minimum(y0 + 1, src_h - 1)
    wx = xs - x0
    wy = ys - y0
    top = plane[y0][:, x0] * (1.0 - wx) + plane[y0][:, x1] * wx
    bot = plane[y1][:, x0] * (1.0 - wx) + plane[y1][:, x1] * wx
    return top * (1.0 - wy[:, None]) + bot * wy[:, None]


@dataclass(frozen=True)
class EdgeParams:
    """Canny parameters.  Thresholds are gradient magnitudes measured on
    the 0..255 intensity scale with an unnormalized 3x3 Sobel response."""

    low_threshold: float = 25.0
    high_threshold: float = 50.0
    gaussian_sigma: float = 5.0

    def __post_init__(self):
        if not 0 <= self.low_threshold <= self.high_threshold:
            raise ValueError(
                "thresholds must satisfy 0 <= low <= high, got "
                f"low={self.low_threshold} high={self.high_threshold}"
            )
        if self.gaussian_sigma <= 0:
            raise ValueError(f"gaussian_sigma must be positive, got {self.gaussian_sigma}")


_SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
_SOBEL_Y = _SOBEL_X.T

# Neighbor offsets (dy, dx) along the quantized gradient direction.
_NMS_OFFSETS = ((0, 1), (1, 1), (1, 0), (1, -1))


def _shift(a: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Translate with zero fill; out-of-frame neighbors read 0."""
    out = np.zeros_like(a)
    h, w = a.shape
    ys = slice(max(dy, 0), h + min(dy, 0))
    xs = slice(max(dx, 0), w + min(dx, 0))
    yd = slice(max(-dy, 0), h + min(-dy, 0))
    xd = slice(max(-dx, 0), w + min(-dx, 0))
    out[yd, xd] = a[ys, xs]
    return out


def canny_edges(frame: np.ndarray, params: EdgeParams | None = None) -> np.ndarray:
    """Canny edge extraction; returns a binary {0, 1} float frame.

    Gaussian smoothing (kernel truncated at 4 sigma), 3x3 Sobel
    gradients, non-maximum suppression along the quantized gradient
    direction, then double-threshold hysteresis with 8-connectivity.
    Adding a constant to the frame cannot change the output because the
    gradient operator annihilates constants.
    """
    if params is None:
        params = EdgeParams()
    frame = _check_gray(frame)
    h, w = frame.shape
    if h < 3 or w < 3:
        raise ValueError(f"frame must be at least 3x3, got {h}x{w}")
    support = 2 * int(4.0 * params.gaussian_sigma + 0.5) + 1
    if h < support or w < support:
        raise ValueError(
            f"frame {h}x{w} is smaller than the Gaussian kernel support "
            f"({support} at sigma={params.gaussian_sigma})"
        )

    # Work on the 0..255 scale so the thresholds keep their usual units.
    smoothed = ndimage.gaussian_filter(
        frame * 255.0, sigma=params.gaussian_sigma, truncate=4.0, mode="nearest"
    )
    gx = ndimage.correlate(smoothed, _SOBEL_X, mode="nearest")
    gy = ndimage.correlate(smoothed, _SOBEL_Y, mode="nearest")
    mag = np.hypot(gx, gy)

    theta = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    sector = (np.floor((theta + 22.5) / 45.0).astype(np.intp)) % 4
    keep = np.zeros(mag.shape, dtype=bool)
    for s, (dy, dx) in enumerate(_NMS_OFFSETS):
        ahead = _shift(mag, -dy, -dx)
        behind = _shift(mag, dy, dx)
        sel = sector == s
        keep[sel] = (mag[sel] >= ahead[sel]) & (mag[sel] >= behind[sel])
    nms = np.where(keep, mag, 0.0)

    strong = nms >= params.high_threshold
    weak = nms >= params.low_threshold
    if not strong.any():
        return np.zeros(frame.shape, dtype=np.float64)
    # Keep weak chains only when they touch a strong pixel.
    labels, count = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    strong_labels = np.unique(labels[strong])
    strong_labels = strong_labels[strong_labels != 0]
    lut = np.zeros(count + 1, dtype=bool)
    lut[strong_labels] = True
    return lut[labels].astype(np.float64)


def preprocess(img: np.ndarray, width: int = 1024, height: int = 1024) -> np.ndarray:
    """Scene preprocessing: bilinear resize then luma equalization.

    Works in YUV so chroma is untouched; returns uint8 RGB.
    """
    resized = resize(_check_rgb(img), width, height)
    return yuv_to_rgb(equalize_luma(rgb_to_yuv(resized)))


def preprocess_luma(img: np.ndarray, width: int = 1024, height: int = 1024) -> np.ndarray:
    """Equalized Y plane of the preprocessed scene as a [0, 1] frame."""
    resized = resize(_check_rgb(img), width, height)
    y = equalize_luma(rgb_to_yuv(resized))[:, :, 0]
    return y.astype(np.float64) / 255.0


def read_rgb(path) -> np.ndarray:
    """Load a color image file as a uint8 (H, W, 3) array."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def write_rgb(path, img: np.ndarray):
    Image.fromarray(_check_rgb(img), mode="RGB").save(path, format="PNG")


def read_gray(path) -> np.ndarray:
    """Load an image file as a [0, 1] grayscale frame."""
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.float64) / 255.0


def write_gray(path, frame: np.ndarray):
    frame = _check_gray(frame)
    if frame.size and (frame.min() < 0.0 or frame.max() > 1.0):
        raise ValueError("grayscale frame values must lie in [0, 1]")
    data = np.clip(np.rint(frame * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path, format="PNG")


def encode_gray_png(frame: np.ndarray) -> bytes:
    """Encode a [0, 1] frame as 8-bit grayscale PNG bytes."""
    import io

    frame = _check_gray(frame)
    data = np.clip(np.rint(frame * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(data, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def encode_rgb_png(img: np.ndarray) -> bytes:
    import io

    buf = io.BytesIO()
    Image.fromarray(_check_rgb(img), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    """Decode PNG bytes; grayscale gives a [0, 1] frame, color gives uint8 RGB."""
    import io

    with Image.open(io.BytesIO(data)) as im:
        if im.mode == "L":
            return np.asarray(im, dtype=np.float64) / 255.0
        return np.asarray(im.convert("RGB"), dtype=np.uint8)

"""Image conditioning ahead of feature extraction.

Order used by :func:`preprocess`: average filter, contrast stretch, histogram
equalization, crop, resize.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import Raster
from .resample import AffineParams, KernelSpec, warp


@dataclass(frozen=True)
class PreprocConfig:
    filter_size: int = 3
    stretch_low_pct: float = 1.0
    stretch_high_pct: float = 99.0
    target_size: tuple[int, int] = (32, 32)

    def __post_init__(self):
        if self.filter_size < 1 or self.filter_size % 2 == 0:
            raise ValueError("filter_size must be an odd integer >= 1")
        if not 0 <= self.stretch_low_pct < self.stretch_high_pct <= 100:
            raise ValueError("need 0 <= stretch_low_pct < stretch_high_pct <= 100")
        if len(self.target_size) != 2 or min(self.target_size) < 1:
            raise ValueError("target_size must be two positive integers")


def average_filter(image: Raster, k: int) -> Raster:
    """k x k box mean with clamp-to-edge borders."""
    if k < 1 or k % 2 == 0:
        raise ValueError(f"filter size must be odd, got {k}")
    if k > min(image.width, image.height):
        raise ValueError(f"filter size {k} exceeds image {image.width}x{image.height}")
    if k == 1:
        return image
    out = ndimage.uniform_filter(image.pixels, size=k, mode="nearest")
    # keep the output inside the input range despite summation round-off
    return Raster(np.clip(out, image.pixels.min(), image.pixels.max()))


def nearest_rank(values: np.ndarray, pct: float) -> float:
    """Nearest-rank percentile: the ceil(p/100 * N)-th smallest value (1-based)."""
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    rank = max(1, math.ceil(pct / 100.0 * v.size))
    return float(v[min(rank, v.size) - 1])


def contrast_stretch(image: Raster, low_pct: float, high_pct: float) -> Raster:
    """Map the [low_pct, high_pct] intensity percentiles linearly onto [0, 255].

    If both percentiles land on the same level the image's min and max are used;
    a constant image is returned unchanged.
    """
    if not low_pct < high_pct:
        raise ValueError("low_pct must be below high_pct")
    lo = nearest_rank(image.pixels, low_pct)
    hi = nearest_rank(image.pixels, high_pct)
    if hi <= lo:
        # the percentiles collapsed onto one level; stretch the full range instead
        lo, hi = float(image.pixels.min()), float(image.pixels.max())
        if hi <= lo:
            return image
    out = np.clip((image.pixels - lo) / (hi - lo), 0.0, 1.0) * 255.0
    return Raster(out)


def hist_equalize(image: Raster) -> Raster:
    """Classic CDF remap on the 256-level quantized image."""
    q = np.clip(np.floor(image.pixels + 0.5), 0, 255).astype(np.int64)
    hist = np.bincount(q.ravel(), minlength=256)
    cdf = np.cumsum(hist)
    n = q.size
    cdf_min = cdf[q.min()]
    if n == cdf_min:
        return Raster(np.zeros_like(image.pixels))
    lut = np.floor((cdf - cdf_min) / (n - cdf_min) * 255.0 + 0.5)
    return Raster(lut[q])


def crop(image: Raster, x0: int, y0: int, w: int, h: int) -> Raster:
    if w < 1 or h < 1 or x0 < 0 or y0 < 0 or x0 + w > image.width or y0 + h > image.height:
        raise ValueError(
            f"crop rectangle ({x0},{y0},{w},{h}) outside {image.width}x{image.height} image"
        )
    return Raster(image.pixels[y0:y0 + h, x0:x0 + w])


def resize(image: Raster, w: int, h: int, spec: KernelSpec = KernelSpec("linear")) -> Raster:
    if w < 1 or h < 1:
        raise ValueError("target size must be positive")
    params = AffineParams.scaling(w / image.width, h / image.height)
    return warp(image, params, spec, (w, h))


def preprocess(image: Raster, config: PreprocConfig, rect=None,
               spec: KernelSpec = KernelSpec("linear")) -> Raster:
    """Full conditioning chain; ``rect`` is an optional (x0, y0, w, h) face box."""
    out = average_filter(image, config.filter_size)
    out = contrast_stretch(out, config.stretch_low_pct, config.stretch_high_pct)
    out = hist_equalize(out)
    if rect is not None:
        out = crop(out, *rect)
    return resize(out, *config.target_size, spec=spec)

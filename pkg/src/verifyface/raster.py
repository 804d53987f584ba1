"""Grayscale raster type and PGM/PNG file I/O.

Intensities are kept as float64 internally; quantization to 8 bits only
happens when an image is written to disk.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

import numpy as np


class ImageIOError(Exception):
    """Base class for image read/write failures."""


class UnreadableImageError(ImageIOError):
    pass


class MalformedHeaderError(ImageIOError):
    pass


class UnsupportedBitDepthError(ImageIOError):
    pass


@dataclass(frozen=True, eq=False)
class Raster:
    """Immutable 2-D grayscale image, row-major, top-left origin.

    ``x`` is the column index and ``y`` the row index throughout the package.
    """

    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"raster needs a non-empty 2-D array, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_flat(cls, width: int, height: int, values) -> "Raster":
        values = np.asarray(values, dtype=np.float64)
        if width < 1 or height < 1:
            raise ValueError("width and height must be positive")
        if values.size != width * height:
            raise ValueError(
                f"pixel count {values.size} does not match {width}x{height}"
            )
        return cls(values.reshape(height, width))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def flat(self) -> np.ndarray:
        return self.pixels.ravel()

    def __eq__(self, other):
        if not isinstance(other, Raster):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __repr__(self):
        return f"Raster(width={self.width}, height={self.height})"


@dataclass(frozen=True)
class Signal1D:
    """Uniformly sampled 1-D signal with sampling step ``step``."""

    samples: np.ndarray = field(repr=False)
    step: float = 1.0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("sampling step must be positive")
        arr = np.array(self.samples, dtype=np.float64).ravel()
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self):
        return self.samples.size


def quantize(values) -> np.ndarray:
    """Round half away from zero and clamp to [0, 255] as uint8."""
    v = np.asarray(values, dtype=np.float64)
    rounded = np.sign(v) * np.floor(np.abs(v) + 0.5)
    return np.clip(rounded, 0, 255).astype(np.uint8)


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _read_pgm(data: bytes) -> np.ndarray:
    pos = 2
    fields = []
    for _ in range(3):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise MalformedHeaderError("truncated PGM header")
        fields.append(m.group(1))
        pos = m.end()
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError as exc:
        raise MalformedHeaderError(f"non-numeric PGM header field: {exc}") from None
    if width < 1 or height < 1:
        raise MalformedHeaderError(f"invalid PGM dimensions {width}x{height}")
    if maxval > 255 or maxval < 1:
        raise UnsupportedBitDepthError(f"unsupported bit depth (maxval {maxval})")
    # exactly one whitespace byte separates the header from the raster
    pos += 1
    body = data[pos:pos + width * height]
    if len(body) != width * height:
        raise MalformedHeaderError(
            f"expected {width * height} pixel bytes, found {len(body)}"
        )
    pixels = np.frombuffer(body, dtype=np.uint8).astype(np.float64).reshape(height, width)
    if maxval != 255:
        pixels = pixels * (255.0 / maxval)
    return pixels


def _read_png(path) -> np.ndarray:
    from PIL import Image

    try:
        with Image.open(path) as im:
            if im.mode in ("I;16", "I;16B", "I", "F"):
                raise UnsupportedBitDepthError(f"unsupported bit depth (PNG mode {im.mode})")
            if im.mode == "L":
                return np.asarray(im, dtype=np.float64)
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
    except ImageIOError:
        raise
    except Exception as exc:
        raise MalformedHeaderError(f"cannot decode PNG: {exc}") from None
    return _luma(rgb[..., 0], rgb[..., 1], rgb[..., 2])


def load_image(path) -> Raster:
    """Read an 8-bit binary PGM (P5) or PNG file."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise UnreadableImageError(f"cannot read {path}: {exc.strerror}") from None
    if data[:2] == b"P5":
        return Raster(_read_pgm(data))
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return Raster(_read_png(path))
    raise MalformedHeaderError(f"{path}: not a binary PGM (P5) or PNG file")


def encode_pgm(raster: Raster) -> bytes:
    header = f"P5\n{raster.width} {raster.height}\n255\n".encode("ascii")
    return header + quantize(raster.pixels).tobytes()


def save_image(raster: Raster, path) -> None:
    """Write ``raster`` as binary PGM, rounding and clamping to 8 bits."""
    payload = encode_pgm(raster)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise ImageIOError(f"cannot write {path}: {exc.strerror}") from None


def _luma(r, g, b):
    # 0.299 r + 0.587 g + 0.114 b, arranged so r == g == b returns r exactly
    return r + 0.587 * (g - r) + 0.114 * (b - r)


def to_grayscale(rgb) -> Raster:
    """Convert an RGB image to luma.

    ``rgb`` is either an (H, W, 3) array or a sequence of three equally sized
    channel rasters/arrays.
    """
    if isinstance(rgb, np.ndarray) and rgb.ndim == 3:
        if rgb.shape[2] != 3:
            raise ValueError(f"expected 3 channels, got {rgb.shape[2]}")
        channels = [rgb[..., i] for i in range(3)]
    else:
        channels = list(rgb)
        if len(channels) != 3:
            raise ValueError(f"expected 3 channels, got {len(channels)}")
    arrays = [c.pixels if isinstance(c, Raster) else np.asarray(c, dtype=np.float64)
              for c in channels]
    if not (arrays[0].shape == arrays[1].shape == arrays[2].shape):
        raise ValueError("channel size mismatch: "
                         + ", ".join(str(a.shape) for a in arrays))
    return Raster(_luma(*arrays))

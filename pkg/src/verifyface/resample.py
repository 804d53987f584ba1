"""Affine warps with nearest/linear/cubic interpolation kernels.

This is both the forgery synthesizer (it produces the resampled images the
detector is meant to catch) and the kernel library the detector's oracles are
built on: kernel values, their analytic derivatives, and the closed-form
per-phase variance of a differentiated, interpolated white-noise signal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .raster import Raster, Signal1D

KERNEL_KINDS = ("nearest", "linear", "cubic")
_SUPPORT = {"nearest": 0.5, "linear": 1.0, "cubic": 2.0}
# source-sample offsets relative to floor(u) that can carry nonzero weight
_TAPS = {"nearest": (0, 1), "linear": (0, 1), "cubic": (-1, 0, 1, 2)}


@dataclass(frozen=True)
class AffineParams:
    """Forward map x' = a0 + a1 x + a2 y, y' = b0 + b1 x + b2 y."""

    a0: float
    a1: float
    a2: float
    b0: float
    b1: float
    b2: float

    @property
    def determinant(self) -> float:
        return self.a1 * self.b2 - self.a2 * self.b1

    def as_tuple(self):
        return (self.a0, self.a1, self.a2, self.b0, self.b1, self.b2)

    def inverse(self) -> "AffineParams":
        det = self.determinant
        if det == 0 or not math.isfinite(det):
            raise ValueError("affine map is not invertible (determinant 0)")
        i1, i2 = self.b2 / det, -self.a2 / det
        j1, j2 = -self.b1 / det, self.a1 / det
        return AffineParams(-(i1 * self.a0 + i2 * self.b0), i1, i2,
                            -(j1 * self.a0 + j2 * self.b0), j1, j2)

    @classmethod
    def identity(cls) -> "AffineParams":
        return cls(0.0, 1.0, 0.0, 0.0, 0.0, 1.0)

    @classmethod
    def scaling(cls, sx: float, sy: float | None = None) -> "AffineParams":
        return cls(0.0, float(sx), 0.0, 0.0, 0.0, float(sx if sy is None else sy))

    @classmethod
    def rotation(cls, degrees: float) -> "AffineParams":
        """Rotation about the origin with matrix [[cos, sin], [-sin, cos]]."""
        t = math.radians(degrees)
        c, s = math.cos(t), math.sin(t)
        return cls(0.0, c, s, 0.0, -s, c)

    @classmethod
    def shear(cls, kx: float, ky: float = 0.0) -> "AffineParams":
        return cls(0.0, 1.0, float(kx), 0.0, float(ky), 1.0)

    def then(self, other: "AffineParams") -> "AffineParams":
        """Composition: apply ``self`` first, then ``other``."""
        return AffineParams(
            other.a0 + other.a1 * self.a0 + other.a2 * self.b0,
            other.a1 * self.a1 + other.a2 * self.b1,
            other.a1 * self.a2 + other.a2 * self.b2,
            other.b0 + other.b1 * self.a0 + other.b2 * self.b0,
            other.b1 * self.a1 + other.b2 * self.b1,
            other.b1 * self.a2 + other.b2 * self.b2,
        )


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "linear"
    cubic_a: float = -0.5

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel {self.kind!r}; choose from {KERNEL_KINDS}")

    @property
    def support(self) -> float:
        return _SUPPORT[self.kind]


@dataclass(frozen=True)
class NoiseModel:
    sigma2: float = 1.0

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")


def affine_apply(params: AffineParams, x, y):
    return (params.a0 + params.a1 * x + params.a2 * y,
            params.b0 + params.b1 * x + params.b2 * y)


# Keys cubic, written on s = |t|:
#   s in [0, 1): (a+2) s^3 - (a+3) s^2 + 1
#   s in [1, 2): a s^3 - 5a s^2 + 8a s - 4a
def _cubic_pieces(s, a, n):
    if n == 0:
        inner = ((a + 2) * s - (a + 3)) * s * s + 1
        outer = ((a * s - 5 * a) * s + 8 * a) * s - 4 * a
    elif n == 1:
        inner = (3 * (a + 2) * s - 2 * (a + 3)) * s
        outer = (3 * a * s - 10 * a) * s + 8 * a
    else:
        inner = 6 * (a + 2) * s - 2 * (a + 3)
        outer = 6 * a * s - 10 * a
    return inner, outer


def _eval(spec: KernelSpec, n: int, t):
    t = np.asarray(t, dtype=np.float64)
    if spec.kind == "nearest":
        if n:
            return np.zeros_like(t)
        return ((t >= -0.5) & (t < 0.5)).astype(np.float64)

    # Pieces are half-open on the right ([k, k+1)), so a knot takes the value
    # of the piece to its right: derivatives at knots are right limits.
    s = np.abs(t)
    neg = t < 0
    if spec.kind == "linear":
        in_inner = np.where(neg, s <= 1, s < 1)
        if n == 0:
            val = 1.0 - s
        elif n == 1:
            val = np.where(neg, 1.0, -1.0)
        else:
            val = np.zeros_like(t)
        return np.where(in_inner, val, 0.0)

    inner, outer = _cubic_pieces(s, spec.cubic_a, n)
    # odd derivatives flip sign on the negative half (w is even)
    if n == 1:
        inner = np.where(neg, -inner, inner)
        outer = np.where(neg, -outer, outer)
    in_inner = np.where(neg, s <= 1, s < 1)
    in_outer = np.where(neg, (s > 1) & (s <= 2), (s >= 1) & (s < 2))
    return np.where(in_inner, inner, np.where(in_outer, outer, 0.0))


def kernel_value(spec: KernelSpec, t):
    """Interpolation kernel w(t); zero outside its support."""
    out = _eval(spec, 0, t)
    return float(out) if out.ndim == 0 else out


def kernel_derivative(spec: KernelSpec, n: int, t):
    """Analytic n-th derivative of w at t (n in {1, 2}).

    At a knot the value of the piece on the right is returned.
    """
    if n not in (1, 2):
        raise ValueError("derivative order must be 1 or 2")
    out = _eval(spec, n, t)
    return float(out) if out.ndim == 0 else out


def interp_weights(spec: KernelSpec, u):
    """Source indices and kernel weights for sample positions ``u``.

    Returns ``(idx, w)`` with a trailing taps axis; indices are not clamped.
    """
    u = np.asarray(u, dtype=np.float64)
    base = np.floor(u).astype(np.int64)
    offsets = np.asarray(_TAPS[spec.kind], dtype=np.int64)
    idx = base[..., None] + offsets
    w = _eval(spec, 0, u[..., None] - idx)
    return idx, w


def interpolate_1d(signal: Signal1D, spec: KernelSpec, x):
    """Evaluate sum_k f_k w(x/step - k) with clamp-to-edge sample lookup."""
    f = signal.samples
    if f.size == 0:
        raise ValueError("cannot interpolate an empty signal")
    idx, w = interp_weights(spec, np.asarray(x, dtype=np.float64) / signal.step)
    out = np.sum(w * f[np.clip(idx, 0, f.size - 1)], axis=-1)
    return float(out) if out.ndim == 0 else out


def warp(image: Raster, params: AffineParams, spec: KernelSpec, out_size) -> Raster:
    """Resample ``image`` under the forward affine map ``params``.

    Each output pixel (x', y') pulls from the source at the inverse image of
    (x', y'), using the separable 2-D kernel and edge clamping.
    """
    inv = params.inverse()
    out_w, out_h = (int(v) for v in out_size)
    if out_w < 1 or out_h < 1:
        raise ValueError(f"invalid output size {out_size}")
    yy, xx = np.mgrid[0:out_h, 0:out_w].astype(np.float64)
    sx, sy = affine_apply(inv, xx, yy)

    src = image.pixels
    ix, wx = interp_weights(spec, sx)
    iy, wy = interp_weights(spec, sy)
    ix = np.clip(ix, 0, image.width - 1)
    iy = np.clip(iy, 0, image.height - 1)
    out = np.zeros((out_h, out_w))
    for j in range(iy.shape[-1]):
        for i in range(ix.shape[-1]):
            out += wy[..., j] * wx[..., i] * src[iy[..., j], ix[..., i]]
    return Raster(out)


def scale_image(image: Raster, factor: float, spec: KernelSpec) -> Raster:
    """Origin-aligned uniform rescale: output pixel i samples source i/factor."""
    out_w = max(1, int(round(image.width * factor)))
    out_h = max(1, int(round(image.height * factor)))
    return warp(image, AffineParams.scaling(factor), spec, (out_w, out_h))


def centered(params: AffineParams, in_size, out_size) -> AffineParams:
    """Conjugate a linear map so the input centre lands on the output centre."""
    cx, cy = (in_size[0] - 1) / 2.0, (in_size[1] - 1) / 2.0
    ox, oy = (out_size[0] - 1) / 2.0, (out_size[1] - 1) / 2.0
    lin = AffineParams(0.0, params.a1, params.a2, 0.0, params.b1, params.b2)
    to_origin = AffineParams(-cx, 1.0, 0.0, -cy, 0.0, 1.0)
    back = AffineParams(ox, 1.0, 0.0, oy, 0.0, 1.0)
    return to_origin.then(lin).then(back)


def bounding_size(params: AffineParams, in_size) -> tuple[int, int]:
    """Output size that holds the whole transformed input (linear part only)."""
    w, h = in_size
    xs, ys = affine_apply(params, np.array([0, w - 1, 0, w - 1], float),
                          np.array([0, 0, h - 1, h - 1], float))
    span_x = xs.max() - xs.min()
    span_y = ys.max() - ys.min()
    return int(round(span_x + 1e-9)) + 1, int(round(span_y + 1e-9)) + 1


def predicted_variance(spec: KernelSpec, n: int, noise: NoiseModel, phase: float) -> float:
    """sigma^2 * sum_k (D^n w(phase - k))^2 over the kernel support.

    ``phase`` is in units of the sampling step; any real value is accepted and
    phase and phase + integer give identical results.
    """
    if n not in (1, 2):
        raise ValueError("derivative order must be 1 or 2")
    base = math.floor(phase)
    frac = phase - base  # exact in floating point
    reach = int(math.ceil(spec.support)) + 1
    k = np.arange(-reach, reach + 1, dtype=np.float64)
    d = _eval(spec, n, frac - k)
    return float(noise.sigma2 * np.sum(d * d))

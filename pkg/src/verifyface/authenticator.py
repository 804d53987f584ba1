"""Resampling-trace detector.

Interpolation leaves the variance of an image's derivatives periodic in the
sampling phase. The detector differentiates the image, projects the
derivative magnitude along every direction 0..179 degrees, and looks for a
dominant spectral line in the autocovariance of each projection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .raster import Raster, Signal1D

ORIGINAL = "Original"
FORGED = "Forged"
INDETERMINATE = "Indeterminate"

ALL_ANGLES = tuple(range(180))

# Peak-to-median score threshold picked by `verifyface calibrate` with the
# default seed (99th percentile of pristine 128x128 noise scores).
DEFAULT_THRESHOLD = 35.6788168535867


@dataclass(frozen=True)
class DetectorConfig:
    threshold: float = DEFAULT_THRESHOLD
    orders: tuple[int, ...] = (2, 1)
    f_lo: float = 0.05
    max_lag: int | None = None
    flat_floor: float = 1e-6
    # width of the Gaussian local mean removed from |D^n b| before projection;
    # 0 projects the raw derivative magnitude
    center_sigma: float = 2.0

    def __post_init__(self):
        if not self.orders or any(n not in (1, 2) for n in self.orders):
            raise ValueError(f"derivative orders must be drawn from {{1, 2}}, got {self.orders}")
        if not 0 <= self.f_lo < 0.5:
            raise ValueError("f_lo must lie in [0, 0.5)")
        if self.max_lag is not None and self.max_lag < 15:
            raise ValueError("max_lag must be at least 15")
        if not self.threshold >= 0:
            raise ValueError("threshold must be non-negative")
        if not self.center_sigma >= 0:
            raise ValueError("center_sigma must be non-negative")


@dataclass(frozen=True)
class Sinogram:
    angles: tuple[int, ...]
    data: np.ndarray = field(repr=False)  # (n_angles, n_bins)

    @property
    def projections(self) -> list[Signal1D]:
        return [Signal1D(row) for row in self.data]

    def projection(self, angle: int) -> np.ndarray:
        return self.data[self.angles.index(angle)]


@dataclass(frozen=True)
class AutocovSeq:
    values: np.ndarray
    mean_removed: bool = True


@dataclass(frozen=True)
class PeriodicityReport:
    per_angle_score: np.ndarray = field(repr=False)
    best_angle: int
    best_frequency: float
    score: float
    best_order: int
    best_axis: str
    frequencies: np.ndarray = field(repr=False)
    spectrum: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class Verdict:
    label: str
    score: float
    threshold: float
    report: PeriodicityReport | None

    @property
    def forged(self) -> bool:
        return self.label == FORGED


def derivative_image(image: Raster, n: int, axis: str) -> Raster:
    """Valid-region n-th difference along ``axis`` ("rows" = along x, "cols" = along y)."""
    if n not in (1, 2):
        raise ValueError("derivative order must be 1 or 2")
    if axis not in ("rows", "cols"):
        raise ValueError("axis must be 'rows' or 'cols'")
    ax = 1 if axis == "rows" else 0
    if image.pixels.shape[ax] < n + 1:
        raise ValueError(f"image too small for order-{n} difference along {axis}")
    return Raster(np.diff(image.pixels, n=n, axis=ax))


def projection_geometry(width: int, height: int):
    """Bin count and centre bin of the projection axis.

    The rotation centre is the integer pixel (floor((w-1)/2), floor((h-1)/2)),
    so at 0 and 90 degrees every pixel lands exactly on a bin. The axis is long
    enough to hold the footprint of the farthest pixel at any angle.
    """
    reach = math.hypot(width // 2, height // 2)
    half = math.ceil(reach + math.sqrt(0.5) - 0.5)
    return 2 * half + 1, half


def _footprint_cdf(u, a, b):
    """CDF of a unit pixel's projected footprint, measured from its left end.

    The footprint of a unit square at angle theta is the convolution of boxes
    of widths a = max(|cos|, |sin|) and b = min(|cos|, |sin|): a trapezoid.
    """
    u = np.asarray(u, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        rise = u * u / (2.0 * a * b)
        flat = (u - 0.5 * b) / a
        r = a + b - u
        fall = 1.0 - r * r / (2.0 * a * b)
    out = np.where(u < b, rise, np.where(u <= a, flat, fall))
    return np.where(u <= 0.0, 0.0, np.where(u >= a + b, 1.0, out))


def _splat_numpy(pix, cos, sin, centre, nbins):
    h, w = pix.shape
    xs = np.arange(w, dtype=np.float64) - (w - 1) // 2
    ys = np.arange(h, dtype=np.float64) - (h - 1) // 2
    vals = pix.ravel()
    out = np.zeros((cos.size, nbins))
    for i, (c, s) in enumerate(zip(cos, sin)):
        a, b = max(abs(c), abs(s)), min(abs(c), abs(s))
        left = (np.add.outer(s * ys, c * xs) + centre - 0.5 * (a + b)).ravel()
        k0 = np.floor(left + 0.5)
        prev = np.zeros_like(left)
        # a footprint is at most sqrt(2) wide, so it touches at most three bins
        for step in range(3):
            cur = _footprint_cdf(k0 + step + 0.5 - left, a, b)
            idx = k0.astype(np.int64) + step
            keep = cur > prev
            out[i] += np.bincount(idx[keep], weights=((cur - prev) * vals)[keep],
                                  minlength=nbins)[:nbins]
            prev = cur
    return out


def _cdf_scalar(u, a, b):
    if u <= 0.0:
        return 0.0
    if u >= a + b:
        return 1.0
    if u < b:
        return u * u / (2.0 * a * b)
    if u <= a:
        return (u - 0.5 * b) / a
    r = a + b - u
    return 1.0 - r * r / (2.0 * a * b)


def _splat_loops(pix, cos, sin, centre, nbins):
    h, w = pix.shape
    out = np.zeros((cos.size, nbins))
    cx = (w - 1) // 2
    cy = (h - 1) // 2
    for i in range(cos.size):
        c = cos[i]
        s = sin[i]
        a = max(abs(c), abs(s))
        b = min(abs(c), abs(s))
        half = 0.5 * (a + b)
        for y in range(h):
            base = (y - cy) * s + centre - half
            for x in range(w):
                v = pix[y, x]
                if v == 0.0:
                    continue
                left = (x - cx) * c + base
                k = int(math.floor(left + 0.5))
                prev = 0.0
                while prev < 1.0:
                    cur = _cdf_scalar(k + 0.5 - left, a, b)
                    out[i, k] += (cur - prev) * v
                    prev = cur
                    k += 1
    return out


try:
    import numba

    _cdf_scalar = numba.njit(cache=True)(_cdf_scalar)
    _splat = numba.njit(cache=True)(_splat_loops)
except ImportError:  # pragma: no cover - numba is a declared dependency
    _splat = _splat_numpy


def radon(image, angles=ALL_ANGLES, backend=None) -> Sinogram:
    """Line-integral projections of ``image`` by rotate-and-splat.

    For angle theta each pixel centre lands at x' = (x-cx) cos(theta) + (y-cy) sin(theta)
    on the projection axis. The pixel is treated as a unit square whose
    projected footprint (a trapezoid) is integrated over the unit-width bins,
    so every projection carries the full mass, the 0 and 90 degree projections
    are exact column and row sums, and a uniform region projects without
    pixel-lattice ripple at oblique angles.
    ``backend="numpy"`` forces the vectorized implementation.
    """
    pix = image.pixels if isinstance(image, Raster) else np.asarray(image, dtype=np.float64)
    if pix.size == 0:
        raise ValueError("cannot project an empty image")
    pix = np.ascontiguousarray(pix, dtype=np.float64)
    h, w = pix.shape
    nbins, centre = projection_geometry(w, h)
    angles = tuple(int(a) for a in angles)
    theta = np.deg2rad(np.asarray(angles, dtype=np.float64))
    cos = np.cos(theta)
    sin = np.sin(theta)
    # cos(90 deg) is 6e-17 in floating point; snap so axis-aligned bins are exact
    cos[np.abs(cos) < 1e-12] = 0.0
    sin[np.abs(sin) < 1e-12] = 0.0
    splat = _splat_numpy if backend == "numpy" else _splat
    return Sinogram(angles, splat(pix, cos, sin, float(centre), nbins))


def autocovariance(projection, max_lag: int) -> AutocovSeq:
    """R(k) = sum_i (p[i+k] - mean)(p[i] - mean) for k = 0..max_lag."""
    p = projection.samples if isinstance(projection, Signal1D) else np.asarray(projection, float)
    return AutocovSeq(_autocov_rows(p[None, :], max_lag)[0])


def _autocov_rows(data: np.ndarray, max_lag: int) -> np.ndarray:
    n = data.shape[-1]
    if max_lag < 1 or n < max_lag + 1:
        raise ValueError(f"projection of length {n} is too short for max_lag={max_lag}")
    c = data - data.mean(axis=-1, keepdims=True)
    nfft = 1 << int(math.ceil(math.log2(2 * n)))
    spec = np.fft.rfft(c, nfft, axis=-1)
    r = np.fft.irfft(spec * np.conj(spec), nfft, axis=-1)[..., :max_lag + 1]
    return r


def _spectra(acov: np.ndarray):
    """Magnitude spectra of mean-removed, Hann-windowed autocovariance rows."""
    k = acov.shape[-1]
    x = acov - acov.mean(axis=-1, keepdims=True)
    x = x * np.hanning(k)
    mag = np.abs(np.fft.rfft(x, axis=-1))
    freqs = np.fft.rfftfreq(k)
    return freqs, mag


def _scores(acov: np.ndarray, f_lo: float):
    if acov.shape[-1] < 16:
        raise ValueError("autocovariance needs at least 16 lags")
    freqs, mag = _spectra(acov)
    band = freqs > f_lo
    bm = mag[..., band]
    med = np.median(bm, axis=-1)
    peak_idx = np.argmax(bm, axis=-1)
    peak = np.take_along_axis(bm, peak_idx[..., None], axis=-1)[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(peak > 0, peak / np.where(med > 0, med, np.inf), 0.0)
    # a spectrum whose band median vanishes but whose peak does not is a pure line
    score = np.where((med <= 0) & (peak > 0), np.inf, score)
    return score, freqs[band][peak_idx], freqs, mag


def periodicity_score(acov, f_lo: float = 0.05) -> tuple[float, float]:
    """Peak-to-median ratio of the autocovariance spectrum above ``f_lo``.

    Returns (score, frequency in cycles/sample of the peak).
    """
    values = acov.values if isinstance(acov, AutocovSeq) else np.asarray(acov, float)
    score, freq, _, _ = _scores(values[None, :], f_lo)
    return float(score[0]), float(freq[0])


def default_max_lag(n_bins: int) -> int:
    return min(n_bins // 2, 256)


def analyze(image: Raster, config: DetectorConfig = DetectorConfig()) -> PeriodicityReport:
    """Score every (order, axis, angle) and report the strongest periodicity."""
    best = None
    per_angle = np.zeros(180)
    for n in config.orders:
        for axis in ("rows", "cols"):
            deriv = np.abs(derivative_image(image, n, axis).pixels)
            if config.center_sigma > 0:
                # Removing the local mean cancels the projection's support
                # envelope, whose low-frequency leakage would otherwise give
                # pristine images a size-dependent score.
                deriv = deriv - ndimage.gaussian_filter(deriv, config.center_sigma, mode="nearest")
            sino = radon(deriv, ALL_ANGLES)
            max_lag = config.max_lag or default_max_lag(sino.data.shape[1])
            max_lag = min(max_lag, sino.data.shape[1] - 1)
            acov = _autocov_rows(sino.data, max_lag)
            scores, freqs_at_peak, freqs, mag = _scores(acov, config.f_lo)
            per_angle = np.maximum(per_angle, scores)
            i = int(np.argmax(scores))
            if best is None or scores[i] > best[0]:
                best = (float(scores[i]), i, float(freqs_at_peak[i]), n, axis, freqs, mag[i])
    score, angle, freq, n, axis, freqs, spectrum = best
    return PeriodicityReport(per_angle, ALL_ANGLES[angle], freq, float(per_angle.max()),
                             n, axis, freqs, spectrum)


def authenticate(image: Raster, config: DetectorConfig = DetectorConfig()) -> Verdict:
    if image.width < 32 or image.height < 32:
        raise ValueError(f"image must be at least 32x32, got {image.width}x{image.height}")
    if float(np.var(image.pixels)) < config.flat_floor:
        return Verdict(INDETERMINATE, 0.0, config.threshold, None)
    report = analyze(image, config)
    label = FORGED if report.score > config.threshold else ORIGINAL
    return Verdict(label, report.score, config.threshold, report)


@dataclass(frozen=True)
class Calibration:
    threshold: float
    pristine_scores: np.ndarray = field(repr=False)
    forged_scores: np.ndarray = field(repr=False)

    def rates(self, threshold: float | None = None) -> tuple[float, float]:
        """(TPR, FPR) with Forged iff score > threshold."""
        t = self.threshold if threshold is None else threshold
        return (float(np.mean(self.forged_scores > t)), float(np.mean(self.pristine_scores > t)))

    def roc_csv(self) -> str:
        lines = ["threshold,tpr,fpr"]
        cuts = np.unique(np.concatenate([self.pristine_scores, self.forged_scores]))
        for t in cuts:
            tpr, fpr = self.rates(t)
            lines.append(f"{t:.9g},{tpr:.9g},{fpr:.9g}")
        return "\n".join(lines) + "\n"


def calibrate(pristine_scores, forged_scores, percentile: float = 99.0) -> Calibration:
    """Threshold at the nearest-rank ``percentile`` of the pristine scores."""
    p = np.sort(np.asarray(pristine_scores, dtype=np.float64))
    f = np.asarray(forged_scores, dtype=np.float64)
    if p.size == 0:
        raise ValueError("calibration needs at least one pristine score")
    rank = max(1, math.ceil(percentile / 100.0 * p.size))
    return Calibration(float(p[rank - 1]), p, f)

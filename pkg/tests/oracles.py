"""Independent reference implementations used as test oracles.

Nothing here imports the package's numerical code; each function is a direct
transcription of the textbook definition, favouring clarity over speed.
"""
import math

import numpy as np


def ref_kernel(kind, t, a=-0.5):
    """Interpolation kernels written piece by piece."""
    t = np.asarray(t, dtype=np.float64)
    s = np.abs(t)
    if kind == "nearest":
        return ((t >= -0.5) & (t < 0.5)).astype(float)
    if kind == "linear":
        return np.where(s < 1, 1 - s, 0.0)
    inner = (a + 2) * s**3 - (a + 3) * s**2 + 1
    outer = a * s**3 - 5 * a * s**2 + 8 * a * s - 4 * a
    return np.where(s < 1, inner, np.where(s < 2, outer, 0.0))


def ref_interpolate(samples, kind, x, a=-0.5):
    """sum_k f_k w(x - k) with clamp-to-edge, looping over a wide window."""
    samples = np.asarray(samples, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros(np.broadcast_shapes(x.shape, samples.shape[:-1]))
    base = int(math.floor(np.min(x)))
    for k in range(base - 3, int(math.floor(np.max(x))) + 4):
        f = samples[..., min(max(k, 0), samples.shape[-1] - 1)]
        out = out + f * ref_kernel(kind, x - k, a)
    return out


def mc_phase_variance(kind, n, phases, realizations=100_000, seed=0, chunk=5000, a=-0.5):
    """Empirical variance of the n-th derivative of interpolated unit white noise.

    The derivative is taken by forward finite differences, so at a kernel knot
    it is the right limit. One independent generator per chunk of realizations.
    """
    phases = np.asarray(phases, dtype=np.float64)
    length = 16
    x0 = 8.0 + phases
    h = 1e-6 if n == 1 else 1e-4
    points = [x0 + j * h for j in range(n + 1)]
    total = np.zeros(phases.size)
    count = 0
    for child in np.random.SeedSequence(seed).spawn(-(-realizations // chunk)):
        m = min(chunk, realizations - count)
        f = np.random.default_rng(child).standard_normal((m, 1, length))
        vals = [ref_interpolate(f, kind, p[None, :], a) for p in points]
        if n == 1:
            d = (vals[1] - vals[0]) / h
        else:
            d = (vals[2] - 2 * vals[1] + vals[0]) / (h * h)
        total += np.sum(d * d, axis=0)
        count += m
    return total / count


def dct_matrix(n):
    """Orthonormal DCT-II matrix C[k, j] = alpha_k cos(pi (2j+1) k / 2n)."""
    k = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    c = np.cos(np.pi * (2 * j + 1) * k / (2 * n))
    alpha = np.where(k == 0, math.sqrt(1.0 / n), math.sqrt(2.0 / n))
    return alpha * c


def brute_autocov(p, max_lag):
    p = np.asarray(p, dtype=np.float64)
    mu = p.mean()
    return np.array([sum((p[i + k] - mu) * (p[i] - mu) for i in range(p.size - k))
                     for k in range(max_lag + 1)])


def nearest_neighbour(features, query):
    """Index of the closest row, ties resolved to the first occurrence."""
    best, best_d = None, None
    for i, row in enumerate(features):
        d = math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(row, query)))
        if best_d is None or d < best_d:
            best, best_d = i, d
    return best, best_d

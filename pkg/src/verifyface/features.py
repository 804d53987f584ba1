"""Vectorization, 2-D DCT compression and PCA projection."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .raster import Raster


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray = field(repr=False)
    basis: np.ndarray = field(repr=False)  # (m, dim), rows orthonormal
    eigenvalues: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.mean.size


def vectorize(image: Raster) -> np.ndarray:
    return image.pixels.ravel().copy()


def devectorize(values, width: int, height: int) -> Raster:
    return Raster.from_flat(width, height, values)


def dct2(block) -> np.ndarray:
    """Orthonormal 2-D DCT-II."""
    arr = block.pixels if isinstance(block, Raster) else np.asarray(block, dtype=np.float64)
    return sfft.dctn(arr, type=2, norm="ortho")


def idct2(coefs) -> np.ndarray:
    return sfft.idctn(np.asarray(coefs, dtype=np.float64), type=2, norm="ortho")


def dct_compress(image: Raster, keep: int) -> np.ndarray:
    """Top-left keep x keep block of DCT coefficients, row-major."""
    if keep < 1 or keep > min(image.width, image.height):
        raise ValueError(f"keep={keep} outside 1..{min(image.width, image.height)}")
    return dct2(image)[:keep, :keep].ravel().copy()


def dct_reconstruct(coefs, keep: int, width: int, height: int) -> np.ndarray:
    """Inverse of :func:`dct_compress` with the discarded coefficients zeroed."""
    grid = np.zeros((height, width))
    grid[:keep, :keep] = np.asarray(coefs, dtype=np.float64).reshape(keep, keep)
    return idct2(grid)


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # rows: make the first entry that is not negligible positive
    out = vecs.copy()
    for row in out:
        nz = np.flatnonzero(np.abs(row) > 1e-12 * max(1.0, np.abs(row).max()))
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return out


def pca_fit(vectors, m: int) -> PcaModel:
    """Principal components of ``vectors`` (one sample per row).

    Uses the Gram matrix of the centred samples when there are fewer samples
    than dimensions, the covariance matrix otherwise. Eigenvalues are those of
    the sample covariance (divisor count - 1).
    """
    rows = [np.asarray(v, dtype=np.float64).ravel() for v in vectors]
    if len(rows) < 2:
        raise ValueError("PCA needs at least two vectors")
    if len({r.size for r in rows}) != 1:
        raise ValueError("feature vectors have mismatched dimensions")
    x = np.vstack(rows)
    count, dim = x.shape
    if not 1 <= m <= min(count - 1, dim):
        raise ValueError(f"m={m} outside 1..{min(count - 1, dim)}")
    mean = x.mean(axis=0)
    xc = x - mean
    if count < dim:
        vals, vecs = gram_eigh(xc)
    else:
        vals, vecs = covariance_eigh(xc)
    vals = np.where(vals < 0, 0.0, vals)[:m]
    basis = _fix_signs(vecs[:m])
    return PcaModel(mean, basis, vals)


def gram_eigh(xc: np.ndarray):
    """Eigenpairs of the covariance via the count x count Gram matrix.

    Meant for count <= dim; with more samples use :func:`covariance_eigh`.
    """
    count = xc.shape[0]
    if count > xc.shape[1]:
        raise ValueError("Gram route needs no more samples than dimensions")
    gram = xc @ xc.T
    vals, u = np.linalg.eigh(gram)
    order = np.argsort(vals)[::-1]
    vals, u = vals[order], u[:, order]
    keep = vals > max(vals[0], 0.0) * 1e-12
    vecs = np.zeros((count, xc.shape[1]))
    mapped = (xc.T @ u[:, keep]).T
    vecs[:mapped.shape[0]] = mapped / np.linalg.norm(mapped, axis=1, keepdims=True)
    # Gram eigenvectors beyond the rank carry no direction; fill them with an
    # orthonormal completion so the basis stays orthonormal.
    if mapped.shape[0] < count:
        q, _ = np.linalg.qr(np.vstack([vecs[:mapped.shape[0]],
                                       np.eye(xc.shape[1])]).T)
        vecs[mapped.shape[0]:] = q[:, mapped.shape[0]:count].T
    vals = np.concatenate([vals[keep], np.zeros(count - keep.sum())])
    return vals / (count - 1), vecs


def covariance_eigh(xc: np.ndarray):
    cov = xc.T @ xc / (xc.shape[0] - 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order].T


def pca_project(model: PcaModel, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size != model.dim:
        raise ValueError(f"vector has dimension {v.size}, model expects {model.dim}")
    return model.basis @ (v - model.mean)


def pca_reconstruct(model: PcaModel, coefs) -> np.ndarray:
    return model.mean + np.asarray(coefs, dtype=np.float64) @ model.basis

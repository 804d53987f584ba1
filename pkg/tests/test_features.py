import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import dct_matrix
from verifyface.features import (
    covariance_eigh, dct2, dct_compress, dct_reconstruct, devectorize, gram_eigh, idct2,
    pca_fit, pca_project, pca_reconstruct, vectorize,
)
from verifyface.raster import Raster


def principal_angles(a, b):
    """Principal angles between the row spaces of a and b."""
    qa, _ = np.linalg.qr(a.T)
    qb, _ = np.linalg.qr(b.T)
    s = np.linalg.svd(qa.T @ qb, compute_uv=False)
    return np.arccos(np.clip(s, -1.0, 1.0))


# ---- vectorization ----

def test_vectorize_examples():
    assert vectorize(Raster([[1, 2], [3, 4]])).tolist() == [1, 2, 3, 4]
    assert vectorize(Raster([[5, 6, 7]])).tolist() == [5, 6, 7]
    img = Raster(np.arange(12.0).reshape(3, 4))
    assert devectorize(vectorize(img), 4, 3) == img


# ---- DCT ----

@pytest.mark.parametrize("shape", [(8, 8), (5, 7), (16, 16)])
def test_dct2_matches_cosine_matrix(shape, rng):
    x = rng.normal(size=shape)
    expected = dct_matrix(shape[0]) @ x @ dct_matrix(shape[1]).T
    np.testing.assert_allclose(dct2(x), expected, atol=1e-12)


def test_dct2_ones_block():
    c = dct2(np.ones((8, 8)))
    assert c[0, 0] == pytest.approx(8.0, abs=1e-12)
    c[0, 0] = 0
    assert np.max(np.abs(c)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 16), st.integers(1, 16)), elements=st.floats(-1e3, 1e3)))
def test_dct_parseval_and_round_trip(x):
    c = dct2(x)
    assert np.sum(c * c) == pytest.approx(np.sum(x * x), rel=1e-9, abs=1e-9)
    np.testing.assert_allclose(idct2(c), x, atol=1e-9)


def test_dct_compress_examples(rng):
    img = Raster(rng.normal(size=(6, 6)))
    np.testing.assert_allclose(dct_compress(img, 6), dct2(img).ravel())
    const = dct_compress(Raster(np.full((8, 8), 3.0)), 4)
    assert const.size == 16 and const[0] == pytest.approx(24.0)
    assert np.max(np.abs(const[1:])) < 1e-12
    with pytest.raises(ValueError):
        dct_compress(img, 7)


def test_dct_compress_smooth_gradient():
    y, x = np.mgrid[0:32, 0:32]
    img = 30.0 + 5.0 * x + 2.0 * y
    rec = dct_reconstruct(dct_compress(Raster(img), 8), 8, 32, 32)
    rms = np.sqrt(np.mean((rec - img) ** 2))
    assert rms < 0.05 * np.ptp(img)


# ---- PCA ----

def test_two_point_pca():
    a, b = np.array([1.0, 2.0, 3.0]), np.array([4.0, 0.0, 3.0])
    model = pca_fit([a, b], 1)
    d = (b - a) / np.linalg.norm(b - a)
    assert abs(abs(model.basis[0] @ d) - 1) < 1e-12
    assert model.eigenvalues[0] == pytest.approx(np.sum((b - a) ** 2) / 2)


def test_pca_errors():
    with pytest.raises(ValueError):
        pca_fit([np.ones(3)], 1)
    with pytest.raises(ValueError, match="mismatched"):
        pca_fit([np.ones(3), np.ones(4)], 1)
    with pytest.raises(ValueError):
        pca_fit([np.ones(3), np.zeros(3)], 2)
    model = pca_fit([np.ones(3), np.zeros(3)], 1)
    with pytest.raises(ValueError):
        pca_project(model, np.ones(4))


def random_data(rng, count, dim, rank=None):
    x = rng.normal(size=(count, dim)) * rng.uniform(0.5, 3.0, dim)
    if rank is not None:
        x = rng.normal(size=(count, rank)) @ rng.normal(size=(rank, dim))
    return x


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 20), st.integers(1, 16), st.integers(0, 2**31))
def test_pca_basis_invariants(count, dim, seed):
    rng = np.random.default_rng(seed)
    x = random_data(rng, count, dim)
    m = min(count - 1, dim)
    model = pca_fit(x, m)
    np.testing.assert_allclose(model.basis @ model.basis.T, np.eye(m), atol=1e-9)
    assert np.all(model.eigenvalues >= 0)
    assert np.all(np.diff(model.eigenvalues) <= 1e-12)
    for row in model.basis:
        first = row[np.abs(row) > 1e-9][0]
        assert first > 0
    # completeness: full reconstruction of the training set
    rec = np.array([pca_reconstruct(model, pca_project(model, v)) for v in x])
    assert np.sqrt(np.mean((rec - x) ** 2)) < 1e-6
    # projection energy equals total variance at full rank
    total = np.sum((x - x.mean(axis=0)) ** 2) / (count - 1)
    assert abs(model.eigenvalues.sum() - total) <= 1e-6 * max(1.0, total)
    if m > 1:
        assert pca_fit(x, m - 1).eigenvalues.sum() <= total + 1e-9


@pytest.mark.parametrize("count,dim,rank", [(5, 16, None), (8, 12, None), (6, 16, 3), (10, 16, 9)])
def test_gram_route_matches_covariance(count, dim, rank, rng):
    x = random_data(rng, count, dim, rank)
    xc = x - x.mean(axis=0)
    gv, gvec = gram_eigh(xc)
    # brute-force covariance oracle, independent of the package
    cov = sum(np.outer(r, r) for r in xc) / (count - 1)
    ov, ovec = np.linalg.eigh(cov)
    ov, ovec = ov[::-1], ovec[:, ::-1].T
    k = count - 1
    np.testing.assert_allclose(gv[:k], ov[:k], atol=1e-8)
    cv, _ = covariance_eigh(xc)
    np.testing.assert_allclose(cv[:k], ov[:k], atol=1e-8)
    r = int(np.sum(ov[:k] > 1e-8))
    assert np.max(principal_angles(gvec[:r], ovec[:r])) < 1e-6


def test_fit_uses_gram_when_few_samples(rng):
    x = random_data(rng, 6, 16)
    a = pca_fit(x, 5)
    cov = np.cov(x, rowvar=False)
    ov = np.sort(np.linalg.eigvalsh(cov))[::-1][:5]
    np.testing.assert_allclose(a.eigenvalues, ov, atol=1e-8)


def test_projection_examples(rng):
    x = random_data(rng, 12, 8)
    model = pca_fit(x, 4)
    np.testing.assert_allclose(pca_project(model, model.mean), 0, atol=1e-12)
    np.testing.assert_allclose(pca_project(model, model.mean + model.basis[0]), [1, 0, 0, 0], atol=1e-12)
    for v in rng.normal(size=(20, 8)) * 5:
        assert np.linalg.norm(pca_project(model, v)) <= np.linalg.norm(v - model.mean) + 1e-9


def test_feature_determinism(rng):
    x = random_data(rng, 9, 16)
    a, b = pca_fit(x, 6), pca_fit(x.copy(), 6)
    assert np.array_equal(a.basis, b.basis) and np.array_equal(a.eigenvalues, b.eigenvalues)
    img = Raster(rng.uniform(0, 255, (32, 32)))
    assert np.array_equal(dct_compress(img, 8), dct_compress(Raster(img.pixels.copy()), 8))


def test_gram_route_rejects_more_samples_than_dimensions(rng):
    with pytest.raises(ValueError):
        gram_eigh(rng.normal(size=(6, 4)))

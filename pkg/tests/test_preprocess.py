import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from verifyface.preprocess import (
    PreprocConfig, average_filter, contrast_stretch, crop, hist_equalize, nearest_rank,
    preprocess, resize,
)
from verifyface.raster import Raster
from verifyface.resample import KernelSpec

images = arrays(np.float64, st.tuples(st.integers(3, 12), st.integers(3, 12)),
                elements=st.floats(0, 255))


def box_oracle(pix, k):
    """k x k mean with clamped indices, by direct summation."""
    h, w = pix.shape
    r = k // 2
    out = np.zeros_like(pix)
    for y in range(h):
        for x in range(w):
            total = 0.0
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    total += pix[min(max(y + dy, 0), h - 1), min(max(x + dx, 0), w - 1)]
            out[y, x] = total / (k * k)
    return out


# ---- average filter ----

def test_average_filter_examples():
    const = Raster(np.full((6, 5), 17.0))
    np.testing.assert_allclose(average_filter(const, 3).pixels, 17.0, atol=1e-12)
    impulse = np.zeros((5, 5))
    impulse[2, 2] = 1.0
    out = average_filter(Raster(impulse), 3).pixels
    expected = np.zeros((5, 5))
    expected[1:4, 1:4] = 1 / 9
    np.testing.assert_allclose(out, expected, atol=1e-15)


@pytest.mark.parametrize("k", [1, 3, 5])
def test_average_filter_matches_direct_sum(k, rng):
    pix = rng.uniform(0, 255, (9, 11))
    out = average_filter(Raster(pix), k).pixels
    np.testing.assert_allclose(out, box_oracle(pix, k), atol=1e-9)
    r = k // 2
    if r:
        inner = out[r:-r, r:-r]
        direct = np.mean([pix[r + dy:9 - r + dy, r + dx:11 - r + dx]
                          for dy in range(-r, r + 1) for dx in range(-r, r + 1)], axis=0)
        assert abs(inner.mean() - direct.mean()) < 1e-9


def test_average_filter_errors():
    with pytest.raises(ValueError):
        average_filter(Raster(np.ones((5, 5))), 2)
    with pytest.raises(ValueError):
        average_filter(Raster(np.ones((5, 5))), 7)


@settings(max_examples=50, deadline=None)
@given(images)
def test_average_filter_stays_in_range(pix):
    out = average_filter(Raster(pix), 3).pixels
    assert out.min() >= pix.min() and out.max() <= pix.max()


# ---- contrast stretch ----

def test_contrast_stretch_examples():
    full = Raster(np.array([[0.0, 64.0], [191.0, 255.0]]))
    np.testing.assert_allclose(contrast_stretch(full, 0, 100).pixels, full.pixels, atol=1e-9)
    mid = contrast_stretch(Raster([[50.0, 75.0, 100.0]]), 0, 100).flat()
    assert mid.tolist() == [0.0, 127.5, 255.0]
    const = Raster(np.full((3, 3), 40.0))
    assert contrast_stretch(const, 1, 99) == const
    with pytest.raises(ValueError):
        contrast_stretch(full, 50, 50)


def test_nearest_rank():
    v = np.arange(1, 11, dtype=float)
    assert nearest_rank(v, 0) == 1 and nearest_rank(v, 100) == 10
    assert nearest_rank(v, 25) == 3 and nearest_rank(v, 30) == 3 and nearest_rank(v, 31) == 4


@settings(max_examples=60, deadline=None)
@given(images, st.floats(0, 40), st.floats(60, 100))
def test_contrast_stretch_range_and_monotone(pix, lo, hi):
    out = contrast_stretch(Raster(pix), lo, hi).pixels
    assert out.min() >= 0 and out.max() <= 255
    order = np.argsort(pix, axis=None, kind="stable")
    assert np.all(np.diff(out.ravel()[order]) >= -1e-9)


ONE_DARK_PIXEL = np.ones((9, 12))
ONE_DARK_PIXEL[0, 0] = 0.0


def test_contrast_stretch_collapsed_percentiles_use_full_range():
    out = contrast_stretch(Raster(ONE_DARK_PIXEL), 1, 99).pixels
    assert out[0, 0] == 0 and np.all(out.ravel()[1:] == 255)


@settings(max_examples=30, deadline=None)
@given(images, st.floats(0.5, 3.0))
@example(ONE_DARK_PIXEL, 0.5)
def test_contrast_stretch_ignores_global_gain(pix, gain):
    a = contrast_stretch(Raster(pix), 1, 99).pixels
    b = contrast_stretch(Raster(pix * gain), 1, 99).pixels
    if np.ptp(pix) > 1e-6:
        np.testing.assert_allclose(a, b, atol=1e-6)


# ---- histogram equalization ----

def test_hist_equalize_examples():
    assert np.all(hist_equalize(Raster(np.full((4, 4), 99.0))).pixels == 0)
    half = Raster(np.array([[0.0, 255.0], [0.0, 255.0]]))
    assert hist_equalize(half) == half


def test_hist_equalize_uniform_levels_is_identity():
    img = Raster(np.repeat(np.arange(256.0), 3).reshape(24, 32))
    assert hist_equalize(img) == img


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_hist_equalize_follows_normalized_cdf(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 64))
    levels = rng.choice(256, int(rng.integers(64, 256)), replace=False)
    img = rng.choice(levels, (n, n)).astype(float)
    out = hist_equalize(Raster(img)).pixels
    N = img.size
    cdf_min = np.sum(img == img.min())
    for v in np.unique(img):
        cdf = np.sum(img <= v)  # brute-force count
        target = (cdf - cdf_min) / (N - cdf_min)
        got = out[img == v]
        assert np.all(got == got[0])
        assert abs(got[0] / 255 - target) <= 1 / 256 + 1 / N


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_hist_equalize_monotone_and_idempotent(seed):
    rng = np.random.default_rng(seed)
    levels = rng.choice(256, int(rng.integers(64, 256)), replace=False)
    img = rng.choice(levels, (20, 20)).astype(float)
    once = hist_equalize(Raster(img)).pixels
    order = np.argsort(img, axis=None, kind="stable")
    assert np.all(np.diff(once.ravel()[order]) >= 0)
    twice = hist_equalize(Raster(once)).pixels
    assert np.max(np.abs(twice - once)) <= 1


# ---- crop and resize ----

def test_crop_examples(rng):
    img = Raster(rng.uniform(0, 255, (6, 7)))
    assert crop(img, 0, 0, 7, 6) == img
    assert crop(img, 2, 3, 1, 1).flat()[0] == img.pixels[3, 2]
    inner = crop(crop(img, 1, 2, 5, 4), 2, 1, 3, 2)
    assert inner == crop(img, 3, 3, 3, 2)
    for rect in [(-1, 0, 2, 2), (6, 0, 2, 2), (0, 0, 0, 1), (0, 5, 1, 2)]:
        with pytest.raises(ValueError):
            crop(img, *rect)


def test_resize_examples(rng):
    img = Raster(rng.uniform(0, 255, (10, 12)))
    np.testing.assert_allclose(resize(img, 12, 10).pixels, img.pixels, atol=1e-9)
    const = resize(Raster(np.full((10, 12), 33.0)), 7, 19, KernelSpec("cubic"))
    assert const.shape == (19, 7)
    np.testing.assert_allclose(const.pixels, 33.0, atol=1e-9)
    with pytest.raises(ValueError):
        resize(img, 0, 3)


def test_down_up_gradient_round_trip():
    y, x = np.mgrid[0:64, 0:64]
    grad = Raster((x + y) * 255.0 / 126.0)
    back = resize(resize(grad, 32, 32), 64, 64)
    assert np.sqrt(np.mean((back.pixels - grad.pixels) ** 2)) < 2.0


# ---- full chain ----

def test_preprocess_chain_order(rng):
    img = Raster(rng.uniform(40, 200, (40, 48)))
    cfg = PreprocConfig()
    out = preprocess(img, cfg, rect=(4, 2, 32, 36))
    step = hist_equalize(contrast_stretch(average_filter(img, 3), 1, 99))
    manual = resize(crop(step, 4, 2, 32, 36), 32, 32)
    assert out.shape == (32, 32)
    assert out == manual


def test_preproc_config_validation():
    with pytest.raises(ValueError):
        PreprocConfig(filter_size=4)
    with pytest.raises(ValueError):
        PreprocConfig(stretch_low_pct=50, stretch_high_pct=40)
    with pytest.raises(ValueError):
        PreprocConfig(target_size=(0, 32))

"""Metric checks against closed forms and an independent MS-SSIM oracle.

The oracle below shares no code path with the production metric: windows
are materialized explicitly with sliding_window_view and reduced with
direct 2-D weighted sums, versus the production separable filtering.
"""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.lib.stride_tricks import sliding_window_view

from masklink import Image, ber, ms_ssim, psnr, synthetic_image
from masklink.metrics import (MSSSIM_SIGMA, MSSSIM_WEIGHTS, MSSSIM_WINDOW,
                              PSNR_INF)

C1 = (0.01 * 255.0) ** 2
C2 = (0.03 * 255.0) ** 2


def window_2d() -> np.ndarray:
    half = (MSSSIM_WINDOW - 1) / 2.0
    g = np.exp(-((np.arange(MSSSIM_WINDOW) - half) ** 2) / (2 * MSSSIM_SIGMA**2))
    g = g / g.sum()
    return np.outer(g, g)


def oracle_terms(x, y):
    w = window_2d()
    xw = sliding_window_view(x, (MSSSIM_WINDOW, MSSSIM_WINDOW))
    yw = sliding_window_view(y, (MSSSIM_WINDOW, MSSSIM_WINDOW))
    mu_x = np.einsum("ijkl,kl->ij", xw, w)
    mu_y = np.einsum("ijkl,kl->ij", yw, w)
    ex2 = np.einsum("ijkl,kl->ij", xw * xw, w)
    ey2 = np.einsum("ijkl,kl->ij", yw * yw, w)
    exy = np.einsum("ijkl,kl->ij", xw * yw, w)
    sx, sy, sxy = ex2 - mu_x**2, ey2 - mu_y**2, exy - mu_x * mu_y
    lum = (2 * mu_x * mu_y + C1) / (mu_x**2 + mu_y**2 + C1)
    cs = (2 * sxy + C2) / (sx + sy + C2)
    return lum.mean(), cs.mean()


def oracle_downsample(img):
    h, w = img.shape
    h -= h % 2
    w -= w % 2
    out = np.empty((h // 2, w // 2))
    for i in range(h // 2):
        for j in range(w // 2):
            out[i, j] = img[2 * i: 2 * i + 2, 2 * j: 2 * j + 2].mean()
    return out


def oracle_ms_ssim(a: Image, b: Image) -> float:
    side = min(a.height, a.width)
    scales = 0
    while scales < 5 and side // (1 << scales) >= MSSSIM_WINDOW:
        scales += 1
    weights = np.array(MSSSIM_WEIGHTS[:scales])
    weights = weights / weights.sum()
    per_channel = []
    for c in range(a.channels):
        x = a.pixels[c].astype(np.float64)
        y = b.pixels[c].astype(np.float64)
        score = 1.0
        for level in range(scales):
            lum, cs = oracle_terms(x, y)
            if level < scales - 1:
                score *= max(cs, 0.0) ** weights[level]
                x, y = oracle_downsample(x), oracle_downsample(y)
            else:
                score *= max(lum * cs, 0.0) ** weights[level]
        per_channel.append(score)
    return float(np.mean(per_channel))


# ---------------------------------------------------------------------------
# PSNR

def test_psnr_identical_images_is_inf(photo_small):
    assert psnr(photo_small, photo_small) == PSNR_INF
    assert math.isinf(psnr(photo_small, photo_small))


def test_psnr_uniform_diff_16():
    a = Image(np.full((3, 64, 64), 100, dtype=np.uint8))
    b = Image(np.full((3, 64, 64), 116, dtype=np.uint8))
    assert psnr(a, b) == pytest.approx(10 * math.log10(255**2 / 256), abs=1e-9)
    assert psnr(a, b) == pytest.approx(24.05, abs=0.01)


def test_psnr_symmetry(photo_small):
    other = synthetic_image(64, 64, seed=33)
    assert psnr(photo_small, other) == psnr(other, photo_small)


def test_psnr_dimension_mismatch():
    a = Image(np.zeros((3, 64, 64), dtype=np.uint8))
    b = Image(np.zeros((3, 32, 32), dtype=np.uint8))
    with pytest.raises(Exception, match="shapes differ"):
        psnr(a, b)


# ---------------------------------------------------------------------------
# BER

def test_ber_basics():
    a = np.zeros(100, dtype=np.uint8)
    assert ber(a, a) == 0.0
    assert ber(a, 1 - a) == 1.0
    b = a.copy()
    b[[3, 50, 97]] = 1
    assert ber(a, b) == pytest.approx(0.03)


def test_ber_empty_defined_zero():
    assert ber(np.zeros(0, dtype=np.uint8), np.zeros(0, dtype=np.uint8)) == 0.0


def test_ber_length_mismatch():
    with pytest.raises(Exception, match="lengths differ"):
        ber(np.zeros(3, dtype=np.uint8), np.zeros(4, dtype=np.uint8))


@given(st.integers(0, 2**32 - 1), st.integers(1, 128))
def test_ber_triangle_inequality(seed, n):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.integers(0, 2, n, dtype=np.uint8) for _ in range(3))
    assert ber(a, c) <= ber(a, b) + ber(b, c) + 1e-12


# ---------------------------------------------------------------------------
# MS-SSIM

def test_ms_ssim_self_is_one(photo_small):
    assert ms_ssim(photo_small, photo_small) == pytest.approx(1.0, abs=1e-9)


def test_ms_ssim_symmetry(photo_small):
    noisy = Image(np.clip(photo_small.pixels.astype(int)
                          + np.random.default_rng(1).integers(-30, 30,
                                                              photo_small.pixels.shape),
                          0, 255).astype(np.uint8))
    assert abs(ms_ssim(photo_small, noisy) - ms_ssim(noisy, photo_small)) < 1e-12


def test_ms_ssim_dimension_mismatch():
    a = Image(np.zeros((3, 64, 64), dtype=np.uint8))
    b = Image(np.zeros((3, 32, 32), dtype=np.uint8))
    with pytest.raises(Exception, match="shapes differ"):
        ms_ssim(a, b)


def test_ms_ssim_too_small_rejected():
    a = Image(np.zeros((3, 8, 8), dtype=np.uint8))
    with pytest.raises(Exception, match="window"):
        ms_ssim(a, a)


def test_ms_ssim_matches_oracle_small_pairs():
    cases = []
    for seed in (40, 41, 42):
        a = synthetic_image(96, 96, seed=seed)
        b = synthetic_image(96, 96, seed=seed + 100)
        cases.append((a, b))
        noisy = Image(np.clip(a.pixels.astype(int)
                              + np.random.default_rng(seed).integers(
                                  -20, 20, a.pixels.shape), 0, 255).astype(np.uint8))
        cases.append((a, noisy))
    for a, b in cases:
        assert ms_ssim(a, b) == pytest.approx(oracle_ms_ssim(a, b), abs=1e-9)


def test_ms_ssim_matches_oracle_full_size(photo):
    shifted = Image(np.roll(photo.pixels, 5, axis=2))
    assert ms_ssim(photo, shifted) == pytest.approx(
        oracle_ms_ssim(photo, shifted), abs=1e-9)


def test_ms_ssim_inversion_below_half(photo):
    inverted = Image(255 - photo.pixels)
    production = ms_ssim(photo, inverted)
    assert production < 0.5
    # the independent oracle agrees on the value, not just the bound
    assert production == pytest.approx(oracle_ms_ssim(photo, inverted), abs=1e-9)


def test_ms_ssim_fewer_scales_below_176(photo_small):
    # 64px: only 3 of 5 scales fit an 11px window; must still score sanely
    other = synthetic_image(64, 64, seed=50)
    val = ms_ssim(photo_small, other)
    assert 0.0 <= val <= 1.0
    assert ms_ssim(photo_small, photo_small) == pytest.approx(1.0, abs=1e-9)


def test_ms_ssim_orders_degradations(photo_small):
    rng = np.random.default_rng(2)
    mild = Image(np.clip(photo_small.pixels.astype(int)
                         + rng.integers(-10, 10, photo_small.pixels.shape),
                         0, 255).astype(np.uint8))
    harsh = Image(np.clip(photo_small.pixels.astype(int)
                          + rng.integers(-120, 120, photo_small.pixels.shape),
                          0, 255).astype(np.uint8))
    assert ms_ssim(photo_small, mild) > ms_ssim(photo_small, harsh)

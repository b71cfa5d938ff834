"""Reconstruction and payload metrics: PSNR, MS-SSIM, BER.

MS-SSIM follows the standard multi-scale construction: a Gaussian window
of size 11 with sigma 1.5, the usual five scale weights
(0.0448, 0.2856, 0.3001, 0.2363, 0.1333), stability constants
C1 = (0.01*255)^2 and C2 = (0.03*255)^2, and 2x2 average-pool
downsampling between scales. Contrast-structure terms are taken at every
scale, the luminance term only at the coarsest. Images whose short side
is below 176 pixels cannot support all five scales (the window must fit
after four halvings); the scale count is then reduced to the largest k
with floor(side / 2^(k-1)) >= 11 and the weights are renormalized over
the scales actually used. Channels are scored independently and averaged.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import correlate1d

from .errors import MaskLinkError
from .imaging import Image

PSNR_INF = math.inf

MSSSIM_WINDOW = 11
MSSSIM_SIGMA = 1.5
MSSSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
_C1 = (0.01 * 255.0) ** 2
_C2 = (0.03 * 255.0) ** 2


def psnr(a: Image, b: Image) -> float:
    """Peak signal-to-noise ratio in dB over all pixels; inf if identical."""
    if a.pixels.shape != b.pixels.shape:
        raise MaskLinkError(
            f"image shapes differ: {a.pixels.shape} vs {b.pixels.shape}")
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_INF
    return 10.0 * math.log10(255.0 ** 2 / mse)


def ber(sent: np.ndarray, recv: np.ndarray) -> float:
    sent = np.asarray(sent, dtype=np.uint8)
    recv = np.asarray(recv, dtype=np.uint8)
    if sent.shape != recv.shape:
        raise MaskLinkError(f"bit lengths differ: {sent.size} vs {recv.size}")
    if sent.size == 0:
        return 0.0
    return float(np.count_nonzero(sent != recv)) / sent.size


def _gauss_kernel() -> np.ndarray:
    half = (MSSSIM_WINDOW - 1) / 2.0
    x = np.arange(MSSSIM_WINDOW) - half
    g = np.exp(-(x * x) / (2.0 * MSSSIM_SIGMA ** 2))
    return g / g.sum()


_KERNEL = _gauss_kernel()


def _filter_valid(img: np.ndarray) -> np.ndarray:
    # separable Gaussian, then crop the window radius to get 'valid' output
    r = MSSSIM_WINDOW // 2
    out = correlate1d(img, _KERNEL, axis=0, mode="constant")
    out = correlate1d(out, _KERNEL, axis=1, mode="constant")
    return out[r:-r, r:-r]


def _ssim_terms(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Mean luminance term and mean contrast-structure term at one scale."""
    mu_x = _filter_valid(x)
    mu_y = _filter_valid(y)
    sigma_x = _filter_valid(x * x) - mu_x * mu_x
    sigma_y = _filter_valid(y * y) - mu_y * mu_y
    sigma_xy = _filter_valid(x * y) - mu_x * mu_y
    lum = (2.0 * mu_x * mu_y + _C1) / (mu_x ** 2 + mu_y ** 2 + _C1)
    cs = (2.0 * sigma_xy + _C2) / (sigma_x + sigma_y + _C2)
    return float(lum.mean()), float(cs.mean())


def _downsample(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    img = img[: h - h % 2, : w - w % 2]
    return (img[0::2, 0::2] + img[1::2, 0::2]
            + img[0::2, 1::2] + img[1::2, 1::2]) / 4.0


def _num_scales(height: int, width: int) -> int:
    side = min(height, width)
    scales = 0
    while scales < len(MSSSIM_WEIGHTS) and side // (1 << scales) >= MSSSIM_WINDOW:
        scales += 1
    if scales == 0:
        raise MaskLinkError(
            f"image {height}x{width} is smaller than the {MSSSIM_WINDOW}px window")
    return scales


def _ms_ssim_channel(x: np.ndarray, y: np.ndarray) -> float:
    scales = _num_scales(*x.shape)
    weights = np.array(MSSSIM_WEIGHTS[:scales])
    weights = weights / weights.sum()
    score = 1.0
    for level in range(scales):
        lum, cs = _ssim_terms(x, y)
        if level < scales - 1:
            score *= max(cs, 0.0) ** weights[level]
            x = _downsample(x)
            y = _downsample(y)
        else:
            score *= max(lum * cs, 0.0) ** weights[level]
    return score


def ms_ssim(a: Image, b: Image) -> float:
    if a.pixels.shape != b.pixels.shape:
        raise MaskLinkError(
            f"image shapes differ: {a.pixels.shape} vs {b.pixels.shape}")
    xs = a.pixels.astype(np.float64)
    ys = b.pixels.astype(np.float64)
    vals = [_ms_ssim_channel(xs[c], ys[c]) for c in range(a.channels)]
    return float(np.mean(vals))

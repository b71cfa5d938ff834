"""Seeded synthetic photographs for dataset-free experiments.

Each image layers a smooth oriented gradient, a handful of soft color
blobs, band-limited noise texture, and a few hard-edged shapes. The mix
gives the codecs something photo-like to chew on (local smoothness,
occasional edges) while staying fully reproducible from a single seed.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .channel import derive_seed
from .imaging import Image


def synthetic_image(height: int = 224, width: int = 224, channels: int = 3,
                    seed: int = 0) -> Image:
    rng = np.random.default_rng(np.random.SeedSequence([seed, height, width]))
    yy, xx = np.meshgrid(np.linspace(0.0, 1.0, height),
                         np.linspace(0.0, 1.0, width), indexing="ij")
    out = np.empty((channels, height, width))

    # gradient base shared across channels, offset per channel
    theta = rng.uniform(0.0, 2.0 * np.pi)
    ramp = np.cos(theta) * xx + np.sin(theta) * yy
    ramp = (ramp - ramp.min()) / max(np.ptp(ramp), 1e-12)

    blobs = np.zeros((channels, height, width))
    for _ in range(rng.integers(3, 7)):
        cy, cx = rng.uniform(0.0, 1.0, size=2)
        sy, sx = rng.uniform(0.05, 0.35, size=2)
        bump = np.exp(-(((yy - cy) / sy) ** 2 + ((xx - cx) / sx) ** 2))
        color = rng.uniform(-0.5, 0.5, size=channels)
        blobs += color[:, None, None] * bump[None, :, :]

    texture = gaussian_filter(rng.normal(0.0, 1.0, (channels, height, width)),
                              sigma=(0.0, 1.5, 1.5))

    base_level = rng.uniform(0.25, 0.65, size=channels)
    grad_gain = rng.uniform(0.2, 0.5, size=channels)
    for c in range(channels):
        out[c] = base_level[c] + grad_gain[c] * ramp + blobs[c] + 0.04 * texture[c]

    # a few hard-edged rectangles so the scene has genuine discontinuities
    for _ in range(rng.integers(2, 5)):
        y0 = rng.integers(0, max(height - 8, 1))
        x0 = rng.integers(0, max(width - 8, 1))
        hh = int(rng.integers(height // 8, max(height // 3, height // 8 + 1)))
        ww = int(rng.integers(width // 8, max(width // 3, width // 8 + 1)))
        shade = rng.uniform(-0.3, 0.3, size=channels)
        out[:, y0:y0 + hh, x0:x0 + ww] += shade[:, None, None]

    pixels = np.clip(np.rint(out * 255.0), 0, 255).astype(np.uint8)
    return Image(pixels)


def synthetic_batch(count: int, height: int = 224, width: int = 224,
                    channels: int = 3, master_seed: int = 0) -> list[Image]:
    return [synthetic_image(height, width, channels,
                            seed=derive_seed(master_seed, 0x5A11, i))
            for i in range(count)]

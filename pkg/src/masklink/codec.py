"""Semantic codec contract and the deterministic reference implementation.

A codec turns the visible patches of a masked image into a latent block
(one feature row per visible patch, visible-first order, plus one global
summary row at index 0) and reconstructs a full image from that block and
the restore indices. The global row mirrors the class-token row of
transformer codecs so the wire format is identical for the non-neural
reference codec and a model-backed remote codec.

Reference codec, fully deterministic and weight-free:

  encode   flatten each visible patch channel-major, average fixed-size
           contiguous blocks down to `latent_dim` values per patch; the
           summary row is the mean over visible rows.
  decode   broadcast each block average back over its block (unpooling);
           masked patches are filled with per-channel constants obtained by
           50 Jacobi iterations of 4-neighbor patch-mean diffusion, seeded
           from the global summary row.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from .errors import CodecError
from .imaging import Image, MaskedImage, PatchGrid, join_patches, split_patches
from .sparsecode import RestoreIndices, build_restore_indices

DIFFUSION_ITERATIONS = 50


@dataclass(eq=False)
class LatentBlock:
    """Real-valued matrix, shape (len_keep + 1, dim); row 0 is the summary."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2 or vals.shape[0] < 1:
            raise CodecError(f"latent block must be 2-D with >= 1 row, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise CodecError("latent block contains non-finite values")
        self.values = vals

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class QuantSpec:
    """Uniform scalar quantizer: `bits` per value over the clip range."""

    bits: int = 8
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not 1 <= self.bits <= 16:
            raise CodecError(f"quantizer bits must be in [1, 16], got {self.bits}")
        if not self.lo < self.hi:
            raise CodecError("quantizer clip range must have lo < hi")


def quantize(latent: LatentBlock, spec: QuantSpec) -> tuple[LatentBlock, int]:
    """Quantize-dequantize the block; returns (block, total bit count).

    Round-half-up onto 2^bits - 1 steps across [lo, hi]; the dequantized
    value is within half a step of the clipped input.
    """
    levels = (1 << spec.bits) - 1
    span = spec.hi - spec.lo
    clipped = np.clip(latent.values, spec.lo, spec.hi)
    codes = np.floor((clipped - spec.lo) / span * levels + 0.5)
    deq = spec.lo + codes / levels * span
    total_bits = latent.rows * latent.dim * spec.bits
    return LatentBlock(deq), total_bits


class Codec(abc.ABC):
    """Encoder/decoder pair over a fixed image geometry."""

    patch_size: int
    height: int
    width: int
    channels: int
    latent_dim: int

    @abc.abstractmethod
    def encode(self, mimg: MaskedImage) -> tuple[LatentBlock, RestoreIndices]:
        """Consume only the visible patches."""

    @abc.abstractmethod
    def decode(self, latent: LatentBlock, restore: RestoreIndices) -> Image:
        """Reconstruct an image with the source dimensions."""


class ReferenceCodec(Codec):
    def __init__(self, height: int = 224, width: int = 224, channels: int = 3,
                 patch_size: int = 16, latent_dim: int = 64):
        per_patch = channels * patch_size * patch_size
        if height % patch_size or width % patch_size:
            raise CodecError("patch size must divide the image dimensions")
        if per_patch % latent_dim:
            raise CodecError(
                f"latent dim {latent_dim} must divide the patch value count {per_patch}"
            )
        self.patch_size = patch_size
        self.height = height
        self.width = width
        self.channels = channels
        self.latent_dim = latent_dim
        self._block = per_patch // latent_dim
        self._grid = PatchGrid(patch_size, height // patch_size, width // patch_size)

    def _check_geometry(self, img: Image) -> None:
        if (img.channels, img.height, img.width) != (self.channels, self.height, self.width):
            raise CodecError(
                f"image {img.channels}x{img.height}x{img.width} does not match codec "
                f"geometry {self.channels}x{self.height}x{self.width}"
            )

    def encode(self, mimg: MaskedImage) -> tuple[LatentBlock, RestoreIndices]:
        self._check_geometry(mimg.base)
        visible = mimg.visible_patches().astype(np.float64) / 255.0
        if visible.shape[0] == 0:
            raise CodecError("cannot encode an image with zero visible patches")
        flat = visible.reshape(visible.shape[0], self.latent_dim, self._block)
        rows = flat.mean(axis=2)
        summary = rows.mean(axis=0, keepdims=True)
        latent = LatentBlock(np.concatenate([summary, rows], axis=0))
        return latent, build_restore_indices(mimg.mask)

    def decode(self, latent: LatentBlock, restore: RestoreIndices) -> Image:
        if latent.rows != restore.len_keep + 1:
            raise CodecError(
                f"latent rows {latent.rows} != len_keep {restore.len_keep} + 1"
            )
        if latent.dim != self.latent_dim:
            raise CodecError(f"latent dim {latent.dim} != codec dim {self.latent_dim}")
        grid = self._grid
        if restore.num_patches != grid.num_patches:
            raise CodecError("restore indices do not match the codec grid")

        p, c = self.patch_size, self.channels
        unpool = np.repeat(latent.values, self._block, axis=1)  # rows x (C*P*P)
        patches = unpool.reshape(latent.rows, c, p, p)
        summary_patch, visible_patches = patches[0], patches[1:]

        mask_bits = restore.mask_bits()
        visible_cells = mask_bits.reshape(grid.rows, grid.cols) == 0

        # channel-mean diffusion over the patch grid for the masked cells
        means = np.empty((grid.rows, grid.cols, c))
        means[:] = summary_patch.mean(axis=(1, 2))
        shuffled_pos = restore.ids_restore.reshape(grid.rows, grid.cols)
        vis_rows, vis_cols = np.nonzero(visible_cells)
        for r, q in zip(vis_rows, vis_cols):
            means[r, q] = visible_patches[shuffled_pos[r, q]].mean(axis=(1, 2))
        means = _diffuse(means, visible_cells, DIFFUSION_ITERATIONS)

        out = np.empty((grid.num_patches, c, p, p))
        flat_visible = visible_cells.ravel()
        flat_means = means.reshape(-1, c)
        for i in range(grid.num_patches):
            if flat_visible[i]:
                out[i] = visible_patches[restore.ids_restore[i]]
            else:
                out[i] = flat_means[i][:, None, None]

        pixels = np.clip(np.rint(out * 255.0), 0, 255).astype(np.uint8)
        return join_patches(pixels, grid)


def _diffuse(values: np.ndarray, fixed: np.ndarray, iterations: int) -> np.ndarray:
    """Jacobi relaxation: each free cell becomes the mean of its 4 neighbors."""
    vals = values.copy()
    free = ~fixed
    if not free.any():
        return vals
    for _ in range(iterations):
        padded = np.pad(vals, ((1, 1), (1, 1), (0, 0)), mode="edge")
        neighbor_sum = (padded[:-2, 1:-1] + padded[2:, 1:-1]
                        + padded[1:-1, :-2] + padded[1:-1, 2:])
        counts = np.full(vals.shape[:2], 4.0)
        counts[0, :] -= 1
        counts[-1, :] -= 1
        counts[:, 0] -= 1
        counts[:, -1] -= 1
        # edge padding duplicates the border cell, so subtract it back out
        correction = np.zeros_like(vals)
        correction[0, :] += vals[0, :]
        correction[-1, :] += vals[-1, :]
        correction[:, 0] += vals[:, 0]
        correction[:, -1] += vals[:, -1]
        isolated = counts == 0  # 1x1 grid: no neighbors, keep the seed
        counts[isolated] = 1.0
        mean = (neighbor_sum - correction) / counts[..., None]
        mean[isolated] = vals[isolated]
        vals[free] = mean[free]
    return vals


def make_codec(name: str, *, height: int, width: int, channels: int = 3,
               patch_size: int = 16, latent_dim: int = 64,
               endpoint: str | None = None) -> Codec:
    """Codec registry: "reference" or "remote" (see remote.RemoteCodec)."""
    if name == "reference":
        return ReferenceCodec(height, width, channels, patch_size, latent_dim)
    if name == "remote":
        from .remote import RemoteCodec

        return RemoteCodec(endpoint, height=height, width=width, channels=channels,
                           patch_size=patch_size, latent_dim=latent_dim)
    raise CodecError(f"unknown codec {name!r} (expected 'reference' or 'remote')")

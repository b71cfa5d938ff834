"""Tiny masked autoencoder with a fixed pooling front end and a learned
residual decoder.

The latent block layout matches the codec contract: row 0 is a summary
(mean of the per-patch rows), rows 1..len_keep follow the visible patches
in raster order. Each per-patch row holds the 64 block means of the patch
vector, so rows live in [0, 1] and survive a [0, 1] scalar quantizer
unclipped.

Decoding is classical-baseline-plus-correction: a deterministic baseline
(piecewise-constant unpooling for visible patches, neighbor-diffused flat
fill for masked ones) is refined by a transformer that attends across all
rows and mask tokens. The correction head starts at zero, so an untrained
decoder already reproduces the baseline and training only moves quality
up from there.
"""

from __future__ import annotations

import dataclasses
import importlib.resources

import numpy as np
import torch
from torch import nn


@dataclasses.dataclass(frozen=True)
class ModelConfig:
    image_size: int = 224
    patch_size: int = 16
    channels: int = 3
    width: int = 192
    latent_dim: int = 64
    dec_depth: int = 4
    heads: int = 6
    mlp_ratio: float = 4.0

    @property
    def grid(self) -> int:
        return self.image_size // self.patch_size

    @property
    def num_patches(self) -> int:
        return self.grid * self.grid

    @property
    def patch_values(self) -> int:
        return self.channels * self.patch_size * self.patch_size


def restore_from_mask(mask: np.ndarray) -> np.ndarray:
    """Double stable argsort of the mask bits; visible patches sort first."""
    ids_shuffle = np.argsort(mask, kind="stable")
    return np.argsort(ids_shuffle, kind="stable").astype(np.int64)


def patchify(images: torch.Tensor, patch: int) -> torch.Tensor:
    """(B, C, H, W) -> (B, N, C*patch*patch), raster patch order."""
    b, c, h, w = images.shape
    gh, gw = h // patch, w // patch
    x = images.reshape(b, c, gh, patch, gw, patch)
    x = x.permute(0, 2, 4, 1, 3, 5)
    return x.reshape(b, gh * gw, c * patch * patch)


def unpatchify(patches: torch.Tensor, cfg: ModelConfig) -> torch.Tensor:
    b = patches.shape[0]
    g, p, c = cfg.grid, cfg.patch_size, cfg.channels
    x = patches.reshape(b, g, g, c, p, p)
    x = x.permute(0, 3, 1, 4, 2, 5)
    return x.reshape(b, c, g * p, g * p)


DIFFUSION_ITERATIONS = 50


def _diffuse_grid(vals: torch.Tensor, fixed: torch.Tensor) -> torch.Tensor:
    """Jacobi relaxation on a (B, g, g, C) grid: every non-fixed cell moves
    to the mean of its in-bounds 4-neighbors each iteration."""
    g = vals.shape[1]
    if g < 2 or bool(fixed.all()):
        return vals
    counts = torch.full((g, g), 4.0, dtype=vals.dtype, device=vals.device)
    counts[0, :] -= 1
    counts[-1, :] -= 1
    counts[:, 0] -= 1
    counts[:, -1] -= 1
    free = ~fixed
    for _ in range(DIFFUSION_ITERATIONS):
        padded = nn.functional.pad(
            vals.permute(0, 3, 1, 2), (1, 1, 1, 1), mode="replicate")
        padded = padded.permute(0, 2, 3, 1)
        nsum = (padded[:, :-2, 1:-1] + padded[:, 2:, 1:-1]
                + padded[:, 1:-1, :-2] + padded[:, 1:-1, 2:])
        # replicate padding counts each border cell as its own neighbor;
        # take that contribution back out before dividing
        corr = torch.zeros_like(vals)
        corr[:, 0, :] += vals[:, 0, :]
        corr[:, -1, :] += vals[:, -1, :]
        corr[:, :, 0] += vals[:, :, 0]
        corr[:, :, -1] += vals[:, :, -1]
        mean = (nsum - corr) / counts[..., None]
        vals = torch.where(free[..., None], mean, vals)
    return vals


class Block(nn.Module):
    def __init__(self, dim: int, heads: int, mlp_ratio: float):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.norm2 = nn.LayerNorm(dim)
        hidden = int(dim * mlp_ratio)
        self.mlp = nn.Sequential(nn.Linear(dim, hidden), nn.GELU(),
                                 nn.Linear(hidden, dim))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        y = self.norm1(x)
        x = x + self.attn(y, y, y, need_weights=False)[0]
        return x + self.mlp(self.norm2(x))


class TinyMAE(nn.Module):
    def __init__(self, cfg: ModelConfig = ModelConfig()):
        super().__init__()
        if cfg.patch_values % cfg.latent_dim:
            raise ValueError("latent_dim must divide channels*patch_size^2")
        self.cfg = cfg
        n, w = cfg.num_patches, cfg.width

        self.dec_embed = nn.Linear(cfg.latent_dim, w)
        self.summary_embed = nn.Linear(cfg.latent_dim, w)
        self.mask_token = nn.Parameter(torch.zeros(w))
        self.dec_pos = nn.Parameter(torch.zeros(n + 1, w))
        self.dec_blocks = nn.ModuleList(
            Block(w, cfg.heads, cfg.mlp_ratio) for _ in range(cfg.dec_depth))
        self.dec_norm = nn.LayerNorm(w)
        self.pixel_head = nn.Linear(w, cfg.patch_values)

        nn.init.normal_(self.dec_pos, std=0.02)
        nn.init.normal_(self.mask_token, std=0.02)
        # zero-init the correction head: the untrained decoder is exactly
        # the classical baseline, training can only improve on it
        nn.init.zeros_(self.pixel_head.weight)
        nn.init.zeros_(self.pixel_head.bias)

    # -- batched core (training and serving share these paths) -------------

    def encode_visible(self, patches: torch.Tensor) -> torch.Tensor:
        """(B, K, patch_values) in [0,1] -> (B, K+1, D) pooled rows."""
        b, k, _ = patches.shape
        rows = patches.reshape(b, k, self.cfg.latent_dim, -1).mean(dim=-1)
        summary = rows.mean(dim=1, keepdim=True)
        return torch.cat([summary, rows], dim=1)

    def decode_latent(self, latent: torch.Tensor,
                      restore: torch.Tensor) -> torch.Tensor:
        """(B, K+1, D) + (B, N) restore permutation -> (B, N, patch_values)."""
        b, n = restore.shape
        len_keep = latent.shape[1] - 1
        masked = restore >= len_keep
        if len_keep > 0:
            src = restore.clamp(max=len_keep - 1)
            rows = torch.gather(
                latent[:, 1:, :], 1,
                src.unsqueeze(-1).expand(-1, -1, latent.shape[-1]))
            tok = self.dec_embed(rows)
        else:
            rows = torch.zeros(b, n, latent.shape[-1], dtype=latent.dtype,
                               device=latent.device)
            tok = torch.zeros(b, n, self.cfg.width, dtype=latent.dtype,
                              device=latent.device)
        with torch.no_grad():  # parameter-free, keep it off the autograd tape
            baseline = self._baseline(latent, rows, masked)
        tok = torch.where(masked.unsqueeze(-1), self.mask_token.to(tok.dtype), tok)
        head = self.summary_embed(latent[:, :1, :])
        seq = torch.cat([head, tok], dim=1) + self.dec_pos
        for blk in self.dec_blocks:
            seq = blk(seq)
        return baseline + self.pixel_head(self.dec_norm(seq))[:, 1:, :]

    def _baseline(self, latent: torch.Tensor, rows: torch.Tensor,
                  masked: torch.Tensor) -> torch.Tensor:
        """Classical reconstruction: visible patches are the unpooled rows,
        masked patches are flat per-channel fills diffused across the grid."""
        cfg = self.cfg
        b, n = masked.shape
        block = cfg.patch_values // cfg.latent_dim
        unpooled = rows.repeat_interleave(block, dim=-1)        # (B, N, CPP)
        vis_means = unpooled.reshape(b, n, cfg.channels, -1).mean(dim=-1)
        summary = latent[:, 0, :].repeat_interleave(block, dim=-1)
        init = summary.reshape(b, 1, cfg.channels, -1).mean(dim=-1)
        means = torch.where(masked.unsqueeze(-1), init.expand(b, n, -1),
                            vis_means)
        g = cfg.grid
        filled = _diffuse_grid(means.reshape(b, g, g, cfg.channels),
                               (~masked).reshape(b, g, g))
        flat_fill = filled.reshape(b, n, cfg.channels).repeat_interleave(
            cfg.patch_size * cfg.patch_size, dim=-1)
        return torch.where(masked.unsqueeze(-1), flat_fill, unpooled)

    def run_masked(self, images: torch.Tensor, restore: torch.Tensor,
                   len_keep: int) -> torch.Tensor:
        """images (B,C,H,W) in [0,1]; restore (B,N); same len_keep batchwide."""
        patches = patchify(images, self.cfg.patch_size)
        visible = restore < len_keep                      # (B, N) bool
        vis_idx = torch.argsort((~visible).to(torch.uint8), dim=1,
                                stable=True)[:, :len_keep]
        vis_patches = torch.gather(
            patches, 1, vis_idx.unsqueeze(-1).expand(-1, -1, patches.shape[-1]))
        latent = self.encode_visible(vis_patches)
        return self.decode_latent(latent, restore)


def save_checkpoint(model: TinyMAE, path, model_id: str) -> None:
    torch.save({"config": dataclasses.asdict(model.cfg),
                "model_id": model_id,
                "state": model.state_dict()}, path)


def load_checkpoint(path=None) -> tuple[TinyMAE, str]:
    """Load a checkpoint; default is the packaged pre-trained model."""
    if path is None:
        path = importlib.resources.files("maeserver") / "weights" / "tinymae.pt"
    blob = torch.load(str(path), map_location="cpu", weights_only=True)
    model = TinyMAE(ModelConfig(**blob["config"]))
    model.load_state_dict(blob["state"])
    model.eval()
    return model, str(blob["model_id"])

#!/usr/bin/env python3
"""Pre-train the codec decoder on procedurally generated photos.

The corpus mixes smooth gradients, soft color blobs, low-pass noise
texture, and hard-edged rectangles: locally smooth scenes with occasional
discontinuities, which is the regime the codec is evaluated in. The
encoder is fixed pooling, so training only has to teach the decoder to
unpool visible rows and inpaint masked ones. Loss is full-image MSE with
the masked patches weighted up, over mask ratios from zero (pure
unpooling) to heavier than the advisory band.

Usage: python3 scripts/pretrain.py [--steps 2600] [--out src/maeserver/weights/tinymae.pt]
"""

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np
import torch

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from maeserver.model import (ModelConfig, TinyMAE, load_checkpoint, patchify,
                             save_checkpoint)


def make_image(rng: np.random.Generator, size: int = 224) -> np.ndarray:
    """One (3, size, size) float image in [0, 1]."""
    yy, xx = np.meshgrid(np.linspace(0, 1, size), np.linspace(0, 1, size),
                         indexing="ij")
    theta = rng.uniform(0, 2 * np.pi)
    ramp = np.cos(theta) * xx + np.sin(theta) * yy
    ramp = (ramp - ramp.min()) / max(ramp.max() - ramp.min(), 1e-12)

    img = np.empty((3, size, size))
    base = rng.uniform(0.2, 0.7, size=3)
    gain = rng.uniform(0.15, 0.55, size=3)
    for c in range(3):
        img[c] = base[c] + gain[c] * ramp

    for _ in range(rng.integers(2, 8)):
        cy, cx = rng.uniform(0, 1, size=2)
        sy, sx = rng.uniform(0.04, 0.4, size=2)
        bump = np.exp(-(((yy - cy) / sy) ** 2 + ((xx - cx) / sx) ** 2))
        img += rng.uniform(-0.5, 0.5, size=3)[:, None, None] * bump

    # band-limited texture: blur white noise with a separable box cascade
    noise = rng.normal(0.0, 1.0, (3, size, size))
    for _ in range(3):
        noise = (np.roll(noise, 1, axis=1) + noise + np.roll(noise, -1, axis=1)) / 3
        noise = (np.roll(noise, 1, axis=2) + noise + np.roll(noise, -1, axis=2)) / 3
    img += rng.uniform(0.0, 0.08) * noise

    for _ in range(rng.integers(1, 6)):
        y0, x0 = rng.integers(0, size - 8, size=2)
        hh, ww = rng.integers(size // 10, size // 3, size=2)
        img[:, y0:y0 + hh, x0:x0 + ww] += rng.uniform(-0.35, 0.35, size=3)[:, None, None]

    return np.clip(img, 0.0, 1.0)


def make_corpus(count: int, seed: int) -> torch.Tensor:
    rng = np.random.default_rng(seed)
    return torch.from_numpy(
        np.stack([make_image(rng) for _ in range(count)]).astype(np.float32))


def random_restore(batch: int, n: int, len_keep: int,
                   gen: torch.Generator) -> torch.Tensor:
    """Restore permutations for uniformly random masks of n - len_keep
    patches. Built with the same double stable argsort over mask bits the
    serving path uses, so visible rows stay in raster order; a plain
    argsort of noise would pair patches with permuted rows."""
    noise = torch.rand(batch, n, generator=gen)
    order = torch.argsort(torch.argsort(noise, dim=1), dim=1)
    bits = (order >= len_keep).to(torch.uint8)
    shuffle = torch.argsort(bits, dim=1, stable=True)
    return torch.argsort(shuffle, dim=1, stable=True)


def eval_psnr(model: TinyMAE, images: torch.Tensor, ratio: float,
              gen: torch.Generator) -> float:
    """Worst-case PSNR over the eval images at one mask ratio."""
    n = model.cfg.num_patches
    len_keep = n - round(n * ratio)
    worst = math.inf
    with torch.no_grad():
        for i in range(images.shape[0]):
            restore = random_restore(1, n, len_keep, gen)
            pred = model.run_masked(images[i:i + 1], restore, len_keep)
            target = patchify(images[i:i + 1], model.cfg.patch_size)
            a = np.rint(np.clip(pred.numpy(), 0, 1) * 255)
            b = np.rint(target.numpy() * 255)
            mse = float(np.mean((a - b) ** 2))
            worst = min(worst, 10 * math.log10(255.0 ** 2 / max(mse, 1e-12)))
    return worst


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=2600)
    parser.add_argument("--batch", type=int, default=16)
    parser.add_argument("--corpus", type=int, default=384)
    parser.add_argument("--lr", type=float, default=1.2e-3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--resume", default=None,
                        help="checkpoint to continue training from")
    parser.add_argument("--ratio-lo", type=float, default=0.0)
    parser.add_argument("--ratio-hi", type=float, default=0.85)
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent
                                             / "src/maeserver/weights/tinymae.pt"))
    args = parser.parse_args()

    torch.manual_seed(args.seed)
    gen = torch.Generator().manual_seed(args.seed + 1)

    print(f"building corpus of {args.corpus} images...", flush=True)
    images = make_corpus(args.corpus, seed=args.seed + 17)
    holdout = make_corpus(12, seed=args.seed + 4099)

    if args.resume:
        model, _ = load_checkpoint(args.resume)
        model.train()
        print(f"resumed from {args.resume}", flush=True)
    else:
        model = TinyMAE(ModelConfig())
    n = model.cfg.num_patches
    params = sum(p.numel() for p in model.parameters())
    print(f"model: {params / 1e6:.2f}M parameters", flush=True)

    opt = torch.optim.AdamW(model.parameters(), lr=args.lr, weight_decay=1e-4)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=args.steps)

    start = time.monotonic()
    for step in range(1, args.steps + 1):
        idx = torch.randint(0, images.shape[0], (args.batch,), generator=gen)
        batch = images[idx]
        ratio = float(torch.empty(1).uniform_(args.ratio_lo, args.ratio_hi,
                                              generator=gen))
        len_keep = n - round(n * ratio)
        restore = random_restore(args.batch, n, len_keep, gen)

        pred = model.run_masked(batch, restore, len_keep)
        target = patchify(batch, model.cfg.patch_size)
        per_patch = ((pred - target) ** 2).mean(dim=2)
        masked = (restore >= len_keep).float()
        # masked patches dominate the high-ratio evaluation; weight them up
        # but keep pressure on visible-row unpooling fidelity
        loss = (per_patch * (1.0 + 2.0 * masked)).mean()

        opt.zero_grad()
        loss.backward()
        opt.step()
        sched.step()

        if step % 100 == 0 or step == args.steps:
            elapsed = time.monotonic() - start
            print(f"step {step:5d}  loss {loss.item():.5f}  "
                  f"ratio {ratio:.2f}  {elapsed:.0f}s", flush=True)

    model.eval()
    for ratio in (0.0, 0.5, 0.75):
        score = eval_psnr(model, holdout, ratio, gen)
        print(f"holdout worst-case PSNR at {int(ratio * 100)}% mask: "
              f"{score:.2f} dB", flush=True)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, out, model_id="tinymae-pool-192x4")
    print(f"saved {out} ({out.stat().st_size / 1e6:.1f} MB)")
    return 0


if __name__ == "__main__":
    sys.exit(main())

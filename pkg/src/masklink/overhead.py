"""Transmission-overhead accounting.

Three bit counts are compared for sending one image plus a binary payload:

  proposed   visible-patch latents plus side information:
             ceil(num_patches * (1 - mask_ratio)) * bits_per_patch + sideinfo
  minimal    the same with the payload length substituted for the masked
             count (every payload bit masks exactly one patch):
             (num_patches - payload_len) * bits_per_patch + sideinfo
  direct     raw pixels plus the payload appended as plain bits:
             width * height * channels * pixel_bits + payload_len

bits_per_patch is the per-patch latent budget (latent_dim * quant bits
under the default quantizer). The sideinfo term absorbs every cost that
does not scale with the visible-patch count: the serialized sparse index
set, header protection, and the global summary row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

DEFAULT_PIXEL_BITS = 16

# float slack when snapping nearly-integer patch counts before the ceiling;
# keeps ratios like 100/196 from rounding a whole count up by one
_CEIL_EPS = 1e-9


def _ceil_snapped(x: float) -> int:
    nearest = round(x)
    if abs(x - nearest) <= _CEIL_EPS:
        return int(nearest)
    return int(math.ceil(x))


def overhead_proposed(num_patches: int, mask_ratio: float,
                      bits_per_patch: int, sideinfo_bits: int) -> int:
    if not 0.0 <= mask_ratio <= 1.0:
        raise ConfigError(f"mask ratio {mask_ratio} outside [0, 1]")
    visible = _ceil_snapped(num_patches * (1.0 - mask_ratio))
    return visible * bits_per_patch + sideinfo_bits


def overhead_minimal(num_patches: int, payload_len: int,
                     bits_per_patch: int, sideinfo_bits: int) -> int:
    if payload_len > num_patches:
        raise ConfigError(
            f"payload of {payload_len} bits cannot mask {num_patches} patches")
    return (num_patches - payload_len) * bits_per_patch + sideinfo_bits


def overhead_direct(width: int, height: int, channels: int,
                    pixel_bits: int = DEFAULT_PIXEL_BITS,
                    payload_len: int = 0) -> int:
    return width * height * channels * pixel_bits + payload_len


def check_cost(bits: int, epsilon: int | None) -> bool:
    """Budget check; an unset budget is unconstrained and always passes."""
    if epsilon is None:
        return True
    return bits <= epsilon


@dataclass(frozen=True)
class OverheadReport:
    bits_proposed: int
    bits_minimal: int
    bits_direct: int
    compression_ratio: float
    num_patches: int
    mask_ratio: float
    bits_per_patch: int
    sideinfo_bits: int
    payload_len: int
    width: int
    height: int
    channels: int
    pixel_bits: int

    @classmethod
    def build(cls, num_patches: int, mask_ratio: float, bits_per_patch: int,
              sideinfo_bits: int, payload_len: int, width: int, height: int,
              channels: int, pixel_bits: int = DEFAULT_PIXEL_BITS) -> "OverheadReport":
        proposed = overhead_proposed(num_patches, mask_ratio,
                                     bits_per_patch, sideinfo_bits)
        minimal = overhead_minimal(num_patches, payload_len,
                                   bits_per_patch, sideinfo_bits)
        direct = overhead_direct(width, height, channels, pixel_bits, payload_len)
        return cls(
            bits_proposed=proposed,
            bits_minimal=minimal,
            bits_direct=direct,
            compression_ratio=proposed / direct,
            num_patches=num_patches,
            mask_ratio=mask_ratio,
            bits_per_patch=bits_per_patch,
            sideinfo_bits=sideinfo_bits,
            payload_len=payload_len,
            width=width,
            height=height,
            channels=channels,
            pixel_bits=pixel_bits,
        )

    # CSV column schema is stable; append-only if it ever grows.
    CSV_COLUMNS = ("bits_proposed", "bits_minimal", "bits_direct",
                   "compression_ratio", "num_patches", "mask_ratio",
                   "bits_per_patch", "sideinfo_bits", "payload_len",
                   "width", "height", "channels", "pixel_bits")

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(cls.CSV_COLUMNS)

    def csv_row(self) -> str:
        vals = []
        for name in self.CSV_COLUMNS:
            v = getattr(self, name)
            if isinstance(v, float):
                vals.append(f"{v:.10g}")
            else:
                vals.append(str(v))
        return ",".join(vals)

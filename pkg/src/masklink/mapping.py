"""Bijection between a binary payload and a mask pattern on the patch grid.

The payload occupies the first len(payload) grid positions (bit i of the
payload masks patch i); the tail of the grid is padded with zeros. The
payload length itself travels in the protected frame header because the
receiver cannot infer it from the mask alone.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .bits import pack_bits, unpack_bits
from .errors import PayloadTooLongError

# Mask ratios where reconstruction fidelity is known to hold up.
RATIO_BAND_LOW = 0.10
RATIO_BAND_HIGH = 0.80


def _as_bit_array(bits) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.uint8).ravel()
    if arr.size and arr.max() > 1:
        raise ValueError("bit array may only contain 0 and 1")
    return arr


@dataclass(eq=False)
class BitPayload:
    """Ordered bit sequence carried as mask locations."""

    bits: np.ndarray

    def __post_init__(self):
        self.bits = _as_bit_array(self.bits)

    def __len__(self) -> int:
        return int(self.bits.size)

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())


@dataclass(eq=False)
class MaskPattern:
    """Length-N binary vector over the patch grid; 1 marks a masked patch."""

    bits: np.ndarray

    def __post_init__(self):
        self.bits = _as_bit_array(self.bits)

    def __len__(self) -> int:
        return int(self.bits.size)

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())

    @property
    def ratio(self) -> float:
        return self.popcount / self.bits.size if self.bits.size else 0.0


class RatioAdvisory(enum.Enum):
    WITHIN_BAND = "within-band"
    BELOW_BAND = "below-band"
    ABOVE_BAND = "above-band"


def payload_to_mask(payload: BitPayload, num_patches: int) -> MaskPattern:
    """Map payload bit i to mask bit i; zero-pad the tail.

    Payloads longer than the grid are rejected (no fragmentation across
    multiple carrier images).
    """
    if len(payload) > num_patches:
        raise PayloadTooLongError(
            f"payload of {len(payload)} bits exceeds grid capacity {num_patches}"
        )
    bits = np.zeros(num_patches, dtype=np.uint8)
    bits[: len(payload)] = payload.bits
    return MaskPattern(bits)


def mask_to_payload(mask: MaskPattern, payload_len: int) -> tuple[BitPayload, bool]:
    """Inverse of payload_to_mask.

    Returns (payload, tail_warning). tail_warning is True when any mask bit
    at position >= payload_len is set, which signals channel-induced
    corruption rather than a malformed call.
    """
    if payload_len > len(mask):
        raise ValueError(f"payload length {payload_len} exceeds mask length {len(mask)}")
    payload = BitPayload(mask.bits[:payload_len].copy())
    tail_warning = bool(mask.bits[payload_len:].any())
    return payload, tail_warning


def check_mask_ratio(mask: MaskPattern) -> RatioAdvisory:
    """Advisory only, never blocks transmission."""
    if mask.ratio < RATIO_BAND_LOW:
        return RatioAdvisory.BELOW_BAND
    if mask.ratio > RATIO_BAND_HIGH:
        return RatioAdvisory.ABOVE_BAND
    return RatioAdvisory.WITHIN_BAND


# ---------------------------------------------------------------------------
# payload file IO (raw binary, MSB of byte 0 first)

def payload_from_bytes(data: bytes, bit_count: int | None = None) -> BitPayload:
    total = len(data) * 8
    if bit_count is None:
        bit_count = total
    if bit_count > total:
        raise ValueError(f"requested {bit_count} bits from {total}-bit buffer")
    return BitPayload(unpack_bits(data, bit_count))


def payload_to_bytes(payload: BitPayload) -> bytes:
    return pack_bits(payload.bits)


def load_payload(path, bit_count: int | None = None) -> BitPayload:
    with open(path, "rb") as fh:
        return payload_from_bytes(fh.read(), bit_count)


def save_payload(payload: BitPayload, path) -> None:
    with open(path, "wb") as fh:
        fh.write(payload_to_bytes(payload))

"""Bit-level helpers shared by the serializers and payload file IO.

Convention everywhere: bit arrays are numpy uint8 vectors of 0/1, and byte
packing puts the first bit into the most significant bit of byte 0.
"""

from __future__ import annotations

import numpy as np


def int_to_bits(value: int, width: int) -> np.ndarray:
    """Big-endian bit expansion of a non-negative integer."""
    if value < 0:
        raise ValueError("value must be non-negative")
    if value >> width:
        raise ValueError(f"value {value} does not fit in {width} bits")
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_int(bits) -> int:
    out = 0
    for b in np.asarray(bits, dtype=np.uint8):
        out = (out << 1) | int(b)
    return out


def pack_bits(bits) -> bytes:
    """Pack 0/1 values into bytes, MSB of byte 0 first, zero-padded at the tail."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size == 0:
        return b""
    return np.packbits(bits).tobytes()


def unpack_bits(data: bytes, count: int) -> np.ndarray:
    """Inverse of pack_bits for the first `count` bits."""
    if count == 0:
        return np.zeros(0, dtype=np.uint8)
    raw = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    if count > raw.size:
        raise ValueError("byte buffer shorter than requested bit count")
    return raw[:count].copy()

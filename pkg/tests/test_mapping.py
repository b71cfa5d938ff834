import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from masklink import (BitPayload, MaskPattern, PayloadTooLongError,
                      RatioAdvisory, check_mask_ratio, load_payload,
                      mask_to_payload, payload_to_mask, save_payload)
from masklink.mapping import payload_from_bytes, payload_to_bytes


def bits(s: str) -> np.ndarray:
    return np.array([int(c) for c in s], dtype=np.uint8)


def test_exhaustive_round_trip_small_grids():
    # every payload up to 12 bits on a 12-patch grid survives the mapping
    for n in range(0, 13):
        for vals in itertools.product((0, 1), repeat=n):
            payload = BitPayload(np.array(vals, dtype=np.uint8))
            mask = payload_to_mask(payload, 12)
            back, warn = mask_to_payload(mask, n)
            assert back.bits.tolist() == list(vals)
            assert not warn


def test_payload_too_long_rejected():
    with pytest.raises(PayloadTooLongError):
        payload_to_mask(BitPayload(np.ones(13, dtype=np.uint8)), 12)


def test_tail_padding_is_zero():
    mask = payload_to_mask(BitPayload(bits("11")), 6)
    assert mask.bits.tolist() == [1, 1, 0, 0, 0, 0]


def test_tail_warning_on_corrupted_padding():
    mask = MaskPattern(bits("110100"))
    payload, warn = mask_to_payload(mask, 2)
    assert payload.bits.tolist() == [1, 1]
    assert warn           # the '1' at position 3 is outside the payload span


@given(st.integers(0, 2**32 - 1), st.integers(0, 196))
def test_round_trip_random(seed, length):
    rng = np.random.default_rng(seed)
    payload = BitPayload(rng.integers(0, 2, length, dtype=np.uint8))
    back, warn = mask_to_payload(payload_to_mask(payload, 196), length)
    assert np.array_equal(back.bits, payload.bits)
    assert not warn


def test_ratio_advisory_bands():
    n = 196
    low = payload_to_mask(BitPayload(np.ones(10, dtype=np.uint8)), n)
    mid = payload_to_mask(BitPayload(np.ones(98, dtype=np.uint8)), n)
    high = payload_to_mask(BitPayload(np.ones(190, dtype=np.uint8)), n)
    assert check_mask_ratio(low) is RatioAdvisory.BELOW_BAND     # 10/196 < 0.10
    assert check_mask_ratio(mid) is RatioAdvisory.WITHIN_BAND
    assert check_mask_ratio(high) is RatioAdvisory.ABOVE_BAND    # > 0.80


def test_band_edges_inclusive():
    # exactly 10% and exactly 80% sit inside the advisory band
    n = 100
    assert check_mask_ratio(MaskPattern(
        np.array([1] * 10 + [0] * 90, dtype=np.uint8))) is RatioAdvisory.WITHIN_BAND
    assert check_mask_ratio(MaskPattern(
        np.array([1] * 80 + [0] * 20, dtype=np.uint8))) is RatioAdvisory.WITHIN_BAND


@given(st.binary(max_size=64))
def test_payload_bytes_round_trip(data):
    payload = payload_from_bytes(data)
    assert payload_to_bytes(payload) == data
    assert len(payload) == 8 * len(data)


def test_payload_file_io(tmp_path):
    payload = BitPayload(bits("1011001110"))
    path = tmp_path / "p.bin"
    save_payload(payload, path)
    assert np.array_equal(load_payload(path, 10).bits, payload.bits)

import pytest
from hypothesis import given
from hypothesis import strategies as st

from masklink import (ConfigError, OverheadReport, check_cost,
                      overhead_direct, overhead_minimal, overhead_proposed)


# ---------------------------------------------------------------------------
# proposed

def test_proposed_known_case():
    assert overhead_proposed(196, 0.75, 1000, 500) == 49 * 1000 + 500


def test_proposed_boundaries():
    assert overhead_proposed(196, 0.0, 1000, 500) == 196 * 1000 + 500
    assert overhead_proposed(196, 1.0, 1000, 500) == 500


def test_proposed_ceiling_on_fractional_visible():
    # 10 patches, ratio 0.25 -> 7.5 visible -> ceil to 8
    assert overhead_proposed(10, 0.25, 10, 0) == 80


def test_proposed_snaps_float_noise():
    # 100/196 is not exact in binary; N*(1-r) must still count 96 patches
    r = 100 / 196
    assert overhead_proposed(196, r, 10, 0) == 960


def test_proposed_rejects_bad_ratio():
    with pytest.raises(ConfigError):
        overhead_proposed(196, 1.5, 10, 0)
    with pytest.raises(ConfigError):
        overhead_proposed(196, -0.1, 10, 0)


# ---------------------------------------------------------------------------
# minimal

def test_minimal_known_case():
    assert overhead_minimal(196, 100, 1000, 500) == 96_500


def test_minimal_boundary_full_payload():
    assert overhead_minimal(196, 196, 1000, 500) == 500


def test_minimal_strictly_decreasing_exhaustive():
    vals = [overhead_minimal(196, lb, 512, 929) for lb in range(197)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_minimal_rejects_oversized_payload():
    with pytest.raises(ConfigError):
        overhead_minimal(196, 197, 10, 0)


# ---------------------------------------------------------------------------
# direct

def test_direct_matches_published_value():
    bits = overhead_direct(224, 224, 3, 16, 150)
    assert bits == 2_408_598
    assert abs(bits - 24.0860e5) / 24.0860e5 < 1e-5  # within 0.001%


def test_direct_trivial_cases():
    assert overhead_direct(224, 224, 3, 16, 0) == 224 * 224 * 3 * 16
    assert overhead_direct(1, 1, 3, 8, 1) == 25


# ---------------------------------------------------------------------------
# formula consistency and published ratio arithmetic

def test_proposed_equals_minimal_at_matching_ratio():
    for lb in range(197):
        prop = overhead_proposed(196, lb / 196, 512, 929)
        mini = overhead_minimal(196, lb, 512, 929)
        assert prop == mini, lb


@given(st.integers(1, 400), st.integers(1, 1024), st.integers(0, 2000))
def test_proposed_equals_minimal_property(n, per_patch, sideinfo):
    for lb in (0, n // 3, n // 2, n):
        assert (overhead_proposed(n, lb / n, per_patch, sideinfo)
                == overhead_minimal(n, lb, per_patch, sideinfo))


def test_published_ratio_arithmetic():
    # ratios recomputed from the published row values, in units of 1e5 bits
    cases = [
        (1.5030, 24.0848, 6.24),
        (1.5063, 24.0848, 6.25),
        (2.0080, 24.0848, 8.34),
        (1.5068, 24.0860, 6.26),
    ]
    for proposed, direct, expected_pct in cases:
        assert round(100 * proposed / direct, 2) == expected_pct


# ---------------------------------------------------------------------------
# budget check and report

def test_check_cost_inclusive_boundary():
    assert check_cost(100, 100)
    assert not check_cost(101, 100)
    assert check_cost(10**12, None)  # unset budget is unconstrained


def test_report_fields_consistent():
    rep = OverheadReport.build(num_patches=196, mask_ratio=0.5,
                               bits_per_patch=512, sideinfo_bits=929,
                               payload_len=98, width=224, height=224,
                               channels=3, pixel_bits=16)
    assert rep.bits_proposed == 98 * 512 + 929
    assert rep.bits_minimal == rep.bits_proposed
    assert rep.bits_direct == 224 * 224 * 3 * 16 + 98
    assert rep.compression_ratio == pytest.approx(rep.bits_proposed / rep.bits_direct)


def test_report_csv_round_trip_schema():
    rep = OverheadReport.build(num_patches=196, mask_ratio=0.25,
                               bits_per_patch=512, sideinfo_bits=100,
                               payload_len=49, width=224, height=224,
                               channels=3)
    header = OverheadReport.csv_header()
    row = rep.csv_row()
    assert len(header.split(",")) == len(row.split(","))
    assert header.split(",")[0] == "bits_proposed"
    assert row.split(",")[0] == str(rep.bits_proposed)

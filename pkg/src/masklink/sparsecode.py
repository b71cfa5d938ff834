"""Sparse coding of the mask and receiver-side restore-index recovery.

The transmitter sends whichever index list is shorter, the masked or the
unmasked patch indices, plus a one-bit polarity flag naming the class. The
receiver rebuilds the full mask from that list and recovers the permutation
that maps the visible-first (shuffled) patch order back to raster order via
a double stable argsort:

    ids_shuffle = argsort(mask)            # visible patches first
    ids_restore = argsort(ids_shuffle)     # inverse permutation

Stability is mandatory: ties must preserve raster order, otherwise the
restore indices no longer match the visible-first packing convention.

Serialized layout (bit-exact, see WIREFORMAT.md):

    polarity (1 bit) || count (ceil(log2(N+1)) bits) || indices, each
    ceil(log2 N) bits, all fields big-endian.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .bits import bits_to_int, int_to_bits
from .errors import FormatError
from .mapping import MaskPattern


class Polarity(enum.Enum):
    MASKED = 1    # indices enumerate masked patches (mask bit 1)
    UNMASKED = 0  # indices enumerate unmasked patches (mask bit 0)


@dataclass(eq=False)
class RestoreIndices:
    """Permutation from visible-first shuffled order back to raster order.

    ids_restore[i] is the position of raster patch i in the shuffled order;
    positions below len_keep are visible patches.
    """

    ids_restore: np.ndarray
    len_keep: int

    def __post_init__(self):
        self.ids_restore = np.asarray(self.ids_restore, dtype=np.int64)

    @property
    def num_patches(self) -> int:
        return int(self.ids_restore.size)

    def mask_bits(self) -> np.ndarray:
        """Mask implied by the permutation: shuffled position >= len_keep."""
        return (self.ids_restore >= self.len_keep).astype(np.uint8)


@dataclass(eq=False)
class SparseIndexSet:
    """The shorter of the masked/unmasked index lists, plus its polarity."""

    indices: np.ndarray
    polarity: Polarity
    num_patches: int

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)

    def validate(self) -> None:
        idx = self.indices
        if idx.size and (idx.min() < 0 or idx.max() >= self.num_patches):
            raise FormatError("sparse index out of range")
        if idx.size != np.unique(idx).size:
            raise FormatError("duplicate sparse index")
        if idx.size > 1 and not np.all(np.diff(idx) > 0):
            raise FormatError("sparse indices must be strictly increasing")


def build_restore_indices(mask: MaskPattern) -> RestoreIndices:
    """Double stable argsort of the mask bits."""
    bits = mask.bits
    ids_shuffle = np.argsort(bits, kind="stable")
    ids_restore = np.argsort(ids_shuffle, kind="stable")
    len_keep = int(bits.size - bits.sum())
    return RestoreIndices(ids_restore, len_keep)


def sparse_encode(mask: MaskPattern) -> SparseIndexSet:
    """Emit the shorter index list; ties go to the unmasked list."""
    bits = mask.bits
    ones = np.flatnonzero(bits == 1)
    zeros = np.flatnonzero(bits == 0)
    if zeros.size > ones.size:
        return SparseIndexSet(ones, Polarity.MASKED, int(bits.size))
    return SparseIndexSet(zeros, Polarity.UNMASKED, int(bits.size))


def sparse_decode(sset: SparseIndexSet) -> tuple[MaskPattern, RestoreIndices]:
    """Rebuild the mask from the index list, then recover the permutation."""
    sset.validate()
    if sset.polarity is Polarity.MASKED:
        bits = np.zeros(sset.num_patches, dtype=np.uint8)
        bits[sset.indices] = 1
    else:
        bits = np.ones(sset.num_patches, dtype=np.uint8)
        bits[sset.indices] = 0
    mask = MaskPattern(bits)
    return mask, build_restore_indices(mask)


# ---------------------------------------------------------------------------
# bit-exact serialization

def index_field_bits(num_patches: int) -> int:
    """Width of one index field: ceil(log2 N)."""
    return (num_patches - 1).bit_length()


def count_field_bits(num_patches: int) -> int:
    """Width of the count field: ceil(log2(N+1)), so count may equal N."""
    return num_patches.bit_length()


def serialized_length(num_patches: int, index_count: int) -> int:
    return 1 + count_field_bits(num_patches) + index_count * index_field_bits(num_patches)


def serialize_sparse(sset: SparseIndexSet) -> np.ndarray:
    n = sset.num_patches
    parts = [np.array([sset.polarity.value], dtype=np.uint8),
             int_to_bits(int(sset.indices.size), count_field_bits(n))]
    w = index_field_bits(n)
    for idx in sset.indices:
        parts.append(int_to_bits(int(idx), w))
    return np.concatenate(parts)


def deserialize_sparse(bits, num_patches: int) -> tuple[SparseIndexSet, bool]:
    """Parse the serialized layout, repairing corrupted fields.

    Repair policy (deterministic, keeps corruption measurable as BER instead
    of frame loss): count larger than the remaining bit budget is clamped;
    out-of-range indices are remapped modulo N; duplicates keep the first
    occurrence. Returns (index set, repaired Flag).

    Raises FormatError when the buffer is shorter than the fixed header or
    the (possibly clamped) count still exceeds N, which cannot happen for
    frame-sized buffers.
    """
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    header = 1 + count_field_bits(num_patches)
    if bits.size < header:
        raise FormatError("sparse buffer shorter than its header")

    repaired = False
    polarity = Polarity.MASKED if bits[0] else Polarity.UNMASKED
    count = bits_to_int(bits[1:header])
    w = index_field_bits(num_patches)

    if w == 0:
        # single-patch grid: indices carry no bits, the count says it all
        if count > num_patches:
            count, repaired = num_patches, True
        idx = np.zeros(count, dtype=np.int64)
        return SparseIndexSet(idx, polarity, num_patches), repaired

    budget = (bits.size - header) // w
    if count > budget:
        count, repaired = budget, True
    if count > num_patches:
        raise FormatError(f"sparse count {count} exceeds patch count {num_patches}")

    raw = []
    for k in range(count):
        field = bits[header + k * w: header + (k + 1) * w]
        value = bits_to_int(field)
        if value >= num_patches:
            value %= num_patches
            repaired = True
        raw.append(value)

    unique_sorted = sorted(set(raw))
    if unique_sorted != raw:
        repaired = True  # duplicates dropped or ordering restored
    indices = np.array(unique_sorted, dtype=np.int64)
    return SparseIndexSet(indices, polarity, num_patches), repaired

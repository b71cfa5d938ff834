"""Frame assembly, the on-air pipeline, and the .scframe file format.

One frame carries three parts:

  header    N, len_keep, payload_len, latent_dim (16 bits each) plus the
            sparse polarity echo (1 bit), zero-padded to 72 bits. On air
            every header bit is repeated 3x and majority-voted at the
            receiver, because a corrupt header destroys the frame layout
            rather than degrading it.
  sideinfo  the serialized sparse index set, sent as BPSK bits.
  latent    the latent block, sent as power-normalized real-valued symbols
            (analog transport; quantization is applied only when the link
            config asks for it, and always drives the bit accounting).

Transmitter flow:  payload -> mask -> masked image -> codec encode ->
sparse encode -> serialize.  Receiver flow: majority-vote header ->
deserialize -> sparse decode -> codec decode -> mask -> payload.

The digital parts (header, sideinfo) and the analog latent are sent as
separate streams through the same channel instance with distinct derived
sub-seeds; conceptually they are one burst. The power-normalization scale
of the latent stream is treated as known at the receiver (ideal gain
control), as is usual for link-level studies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bits import bits_to_int, int_to_bits, pack_bits, unpack_bits
from .channel import (ChannelConfig, SymbolStream, demodulate_bpsk, equalize,
                      modulate_bpsk, normalize_power, transmit)
from .codec import Codec, LatentBlock, QuantSpec, make_codec, quantize
from .errors import FrameLostError, MaskLinkError
from .imaging import Image, apply_mask, patchify
from .mapping import BitPayload, MaskPattern, mask_to_payload, payload_to_mask
from .overhead import OverheadReport, overhead_proposed
from .sparsecode import (Polarity, SparseIndexSet, build_restore_indices,
                         deserialize_sparse, serialize_sparse, serialized_length,
                         sparse_decode, sparse_encode)

HEADER_FIELD_BITS = 16
HEADER_BITS = 72          # 4 x 16 + 1 polarity bit, zero-padded to a byte boundary
HEADER_REPEAT = 3
HEADER_AIR_BITS = HEADER_BITS * HEADER_REPEAT

# stream tags for the channel sub-seed derivation
TAG_DIGITAL = 0
TAG_LATENT = 1


@dataclass(frozen=True)
class FrameHeader:
    num_patches: int
    len_keep: int
    payload_len: int
    latent_dim: int
    polarity: Polarity

    def masked_count(self) -> int:
        return self.num_patches - self.len_keep

    def sparse_count(self) -> int:
        """Index count implied by the polarity echo."""
        if self.polarity is Polarity.MASKED:
            return self.masked_count()
        return self.len_keep


@dataclass(frozen=True)
class LinkConfig:
    """Static configuration shared by transmitter and receiver."""

    height: int = 224
    width: int = 224
    channels: int = 3
    patch_size: int = 16
    latent_dim: int = 64
    quant: QuantSpec = field(default_factory=QuantSpec)
    apply_quantization: bool = False
    codec_name: str = "reference"
    endpoint: str | None = None

    @property
    def num_patches(self) -> int:
        return (self.height // self.patch_size) * (self.width // self.patch_size)

    def build_codec(self) -> Codec:
        return make_codec(self.codec_name, height=self.height, width=self.width,
                          channels=self.channels, patch_size=self.patch_size,
                          latent_dim=self.latent_dim, endpoint=self.endpoint)


@dataclass(eq=False)
class Frame:
    header: FrameHeader
    sideinfo_bits: np.ndarray
    latent: LatentBlock

    def header_bits(self) -> np.ndarray:
        return pack_header(self.header)

    def digital_bits(self) -> np.ndarray:
        return np.concatenate([np.repeat(self.header_bits(), HEADER_REPEAT),
                               self.sideinfo_bits])

    def latent_bit_cost(self, quant_bits: int) -> int:
        return self.latent.rows * self.latent.dim * quant_bits

    def sideinfo_bit_cost(self) -> int:
        """Side-information bits: serialized sparse set, protected header,
        and the global summary row riding with the latent."""
        return int(self.sideinfo_bits.size) + HEADER_AIR_BITS

    def total_bit_cost(self, quant_bits: int) -> int:
        return self.latent_bit_cost(quant_bits) + self.sideinfo_bit_cost()

    def overhead_report(self, cfg: LinkConfig, payload_len: int | None = None,
                        pixel_bits: int = 16) -> OverheadReport:
        """Closed-form accounting for this frame; matches total_bit_cost."""
        q = cfg.quant.bits
        n = self.header.num_patches
        mask_ratio = self.header.masked_count() / n
        # per-patch latent bits; the summary row is folded into the
        # side-information constant together with the protected header
        sideinfo = int(self.sideinfo_bits.size) + HEADER_AIR_BITS + self.latent.dim * q
        return OverheadReport.build(
            num_patches=n,
            mask_ratio=mask_ratio,
            bits_per_patch=self.latent.dim * q,
            sideinfo_bits=sideinfo,
            payload_len=self.header.payload_len if payload_len is None else payload_len,
            width=cfg.width, height=cfg.height, channels=cfg.channels,
            pixel_bits=pixel_bits,
        )


@dataclass(eq=False)
class ReceivedFrame:
    """Channel outputs, before any interpretation."""

    digital_bits: np.ndarray
    latent_values: np.ndarray
    latent_erasures: int = 0
    digital_erasures: int = 0


@dataclass(eq=False)
class DecodeResult:
    image: Image
    payload: BitPayload
    mask: MaskPattern
    header: FrameHeader
    sideinfo_repaired: bool
    tail_warning: bool


def pack_header(h: FrameHeader) -> np.ndarray:
    for name, value in [("num_patches", h.num_patches), ("len_keep", h.len_keep),
                        ("payload_len", h.payload_len), ("latent_dim", h.latent_dim)]:
        if not 0 <= value < (1 << HEADER_FIELD_BITS):
            raise MaskLinkError(f"header field {name}={value} does not fit 16 bits")
    bits = np.concatenate([
        int_to_bits(h.num_patches, HEADER_FIELD_BITS),
        int_to_bits(h.len_keep, HEADER_FIELD_BITS),
        int_to_bits(h.payload_len, HEADER_FIELD_BITS),
        int_to_bits(h.latent_dim, HEADER_FIELD_BITS),
        np.array([h.polarity.value], dtype=np.uint8),
    ])
    return np.concatenate([bits, np.zeros(HEADER_BITS - bits.size, dtype=np.uint8)])


def unpack_header(bits: np.ndarray) -> FrameHeader:
    if bits.size != HEADER_BITS:
        raise FrameLostError(f"header must be {HEADER_BITS} bits, got {bits.size}")
    f = HEADER_FIELD_BITS
    return FrameHeader(
        num_patches=bits_to_int(bits[0:f]),
        len_keep=bits_to_int(bits[f:2 * f]),
        payload_len=bits_to_int(bits[2 * f:3 * f]),
        latent_dim=bits_to_int(bits[3 * f:4 * f]),
        polarity=Polarity.MASKED if bits[4 * f] else Polarity.UNMASKED,
    )


def majority_vote(bits: np.ndarray, repeat: int = HEADER_REPEAT) -> np.ndarray:
    if bits.size % repeat:
        raise FrameLostError("repetition block length mismatch")
    votes = bits.reshape(-1, repeat).sum(axis=1)
    return (votes * 2 > repeat).astype(np.uint8)


# ---------------------------------------------------------------------------
# transmitter

def sem_encode(img: Image, payload: BitPayload, cfg: LinkConfig,
               codec: Codec | None = None) -> Frame:
    """Compose payload -> mask -> codec -> sparse -> serialized frame."""
    grid = patchify(img, cfg.patch_size)
    if grid.num_patches != cfg.num_patches:
        raise MaskLinkError("image geometry does not match the link config")
    mask = payload_to_mask(payload, grid.num_patches)
    mimg = apply_mask(img, grid, mask)
    codec = codec or cfg.build_codec()
    latent, restore = codec.encode(mimg)
    if cfg.apply_quantization:
        latent, _ = quantize(latent, cfg.quant)
    sset = sparse_encode(mask)
    header = FrameHeader(grid.num_patches, restore.len_keep, len(payload),
                         cfg.latent_dim, sset.polarity)
    return Frame(header, serialize_sparse(sset), latent)


# ---------------------------------------------------------------------------
# channel crossing

def transmit_frame(frame: Frame, ch: ChannelConfig) -> ReceivedFrame:
    digital = frame.digital_bits()
    tx = modulate_bpsk(digital)  # BPSK symbols are already unit power
    rx, state = transmit(tx, ch, TAG_DIGITAL)
    eq, erasures = equalize(rx, state)
    bits = demodulate_bpsk(eq, erasures)

    flat = frame.latent.values.ravel()
    stream = SymbolStream(flat.astype(np.complex128))
    if stream.avg_power > 0.0:
        stream, scale = normalize_power(stream)
    else:
        scale = 1.0  # all-zero latent: nothing to normalize, send as-is
    rx_lat, state_lat = transmit(stream, ch, TAG_LATENT)
    eq_lat, erasures_lat = equalize(rx_lat, state_lat)
    values = eq_lat.symbols.real / scale
    values[erasures_lat] = 0.0
    return ReceivedFrame(bits, values,
                         latent_erasures=int(erasures_lat.sum()),
                         digital_erasures=int(erasures.sum()))


# ---------------------------------------------------------------------------
# receiver

def _validate_header(h: FrameHeader, cfg: LinkConfig, rx: ReceivedFrame) -> None:
    n = cfg.num_patches
    problems = []
    if h.num_patches != n:
        problems.append(f"patch count {h.num_patches} != {n}")
    if h.latent_dim != cfg.latent_dim:
        problems.append(f"latent dim {h.latent_dim} != {cfg.latent_dim}")
    if h.len_keep > n:
        problems.append("len_keep exceeds the patch count")
    if h.payload_len > n:
        problems.append("payload length exceeds the patch count")
    if not problems:
        expect_side = serialized_length(n, h.sparse_count())
        actual_side = rx.digital_bits.size - HEADER_AIR_BITS
        if actual_side != expect_side:
            problems.append(f"sideinfo length {actual_side} != expected {expect_side}")
        if rx.latent_values.size != (h.len_keep + 1) * h.latent_dim:
            problems.append("latent symbol count mismatch")
    if problems:
        raise FrameLostError("; ".join(problems))


def _reconcile(sset: SparseIndexSet, header: FrameHeader) -> tuple[SparseIndexSet, bool]:
    """Force the parsed index set to agree with the protected header.

    The header's polarity echo and len_keep are repetition-protected, so on
    disagreement the header wins: polarity is overridden, extra indices are
    trimmed, and missing ones are padded with the smallest unused indices.
    """
    repaired = False
    indices = list(int(i) for i in sset.indices)
    if sset.polarity is not header.polarity:
        repaired = True
    want = header.sparse_count()
    if len(indices) > want:
        indices = indices[:want]
        repaired = True
    elif len(indices) < want:
        have = set(indices)
        candidate = 0
        while len(indices) < want:
            if candidate not in have:
                indices.append(candidate)
                have.add(candidate)
            candidate += 1
        indices.sort()
        repaired = True
    out = SparseIndexSet(np.array(indices, dtype=np.int64), header.polarity,
                         header.num_patches)
    return out, repaired


def sem_decode(rx: ReceivedFrame, cfg: LinkConfig,
               codec: Codec | None = None) -> DecodeResult:
    """Parse, reconstruct, and recover (image, payload) from channel output.

    Raises FrameLostError when the majority-voted header is not a
    self-consistent frame layout; any other corruption degrades into
    payload BER and image distortion instead of failing.
    """
    if rx.digital_bits.size < HEADER_AIR_BITS:
        raise FrameLostError("received burst shorter than the protected header")
    header = unpack_header(majority_vote(rx.digital_bits[:HEADER_AIR_BITS]))
    _validate_header(header, cfg, rx)

    sideinfo = rx.digital_bits[HEADER_AIR_BITS:]
    sset, repaired = deserialize_sparse(sideinfo, header.num_patches)
    sset, reconciled = _reconcile(sset, header)
    mask, restore = sparse_decode(sset)

    latent = LatentBlock(rx.latent_values.reshape(header.len_keep + 1,
                                                  header.latent_dim))
    codec = codec or cfg.build_codec()
    image = codec.decode(latent, restore)
    payload, tail_warning = mask_to_payload(mask, header.payload_len)
    return DecodeResult(image, payload, mask, header,
                        sideinfo_repaired=repaired or reconciled,
                        tail_warning=tail_warning)


# ---------------------------------------------------------------------------
# .scframe file format: header bytes || sideinfo bits || latent f32 LE

def write_scframe(frame: Frame, path) -> None:
    header_bytes = pack_bits(pack_header(frame.header))
    side_bytes = pack_bits(frame.sideinfo_bits)
    latent_bytes = frame.latent.values.astype("<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header_bytes)
        fh.write(side_bytes)
        fh.write(latent_bytes)


def read_scframe(path) -> Frame:
    with open(path, "rb") as fh:
        data = fh.read()
    header_len = HEADER_BITS // 8
    if len(data) < header_len:
        raise MaskLinkError("scframe file shorter than its header")
    header = unpack_header(unpack_bits(data[:header_len], HEADER_BITS))

    side_bits_n = serialized_length(header.num_patches, header.sparse_count())
    side_len = (side_bits_n + 7) // 8
    rows = header.len_keep + 1
    latent_len = rows * header.latent_dim * 4
    if len(data) != header_len + side_len + latent_len:
        raise MaskLinkError(
            f"scframe length {len(data)} does not match the header "
            f"(expected {header_len + side_len + latent_len})"
        )
    sideinfo = unpack_bits(data[header_len:header_len + side_len], side_bits_n)
    latent = np.frombuffer(data[header_len + side_len:], dtype="<f4").astype(np.float64)
    return Frame(header, sideinfo, LatentBlock(latent.reshape(rows, header.latent_dim)))


def noiseless_received(frame: Frame) -> ReceivedFrame:
    """The frame as it would arrive over an ideal channel."""
    return ReceivedFrame(frame.digital_bits().copy(),
                         frame.latent.values.ravel().copy())

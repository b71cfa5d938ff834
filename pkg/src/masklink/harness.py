"""Experiment orchestration: seeded sweeps over SNR, payload length and
channel kind, with incremental CSV emission.

Every trial seed is derived from the master seed and the trial's grid
coordinates through the seed-splitting rule in channel.derive_seed, so a
sweep is reproducible bit-for-bit (the wallclock column aside) and any
single trial can be re-run in isolation.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelConfig, ChannelKind, derive_seed
from .codec import QuantSpec
from .errors import ConfigError, FrameLostError
from .frame import DecodeResult, LinkConfig, sem_decode, sem_encode, transmit_frame
from .imaging import Image, load_image
from .mapping import BitPayload
from .metrics import ber, ms_ssim, psnr
from .synth import synthetic_image

CSV_COLUMNS = ("image", "payload_len", "masked", "snr_db", "channel", "trial",
               "ber", "psnr_db", "ms_ssim", "bits_proposed", "frame_lost",
               "wallclock")

# sub-seed namespaces for the splitting rule
_NS_PAYLOAD = 1
_NS_CHANNEL = 2
_NS_IMAGE = 3


@dataclass
class ExperimentConfig:
    images: tuple[str, ...] = ()
    synthetic_count: int = 2
    payload_lens: tuple[int, ...] = (100,)
    snr_db: tuple[float, ...] = (10.0,)
    channel_kinds: tuple[str, ...] = ("awgn",)
    trials: int = 1
    codec: str = "reference"
    endpoint: str | None = None
    quant_bits: int = 8
    apply_quantization: bool = False
    master_seed: int = 0
    out_dir: str = "results"
    height: int = 224
    width: int = 224
    image_channels: int = 3
    patch_size: int = 16
    latent_dim: int = 64

    def link_config(self) -> LinkConfig:
        return LinkConfig(height=self.height, width=self.width,
                          channels=self.image_channels,
                          patch_size=self.patch_size,
                          latent_dim=self.latent_dim,
                          quant=QuantSpec(bits=self.quant_bits),
                          apply_quantization=self.apply_quantization,
                          codec_name=self.codec, endpoint=self.endpoint)

    def num_patches(self) -> int:
        return (self.height // self.patch_size) * (self.width // self.patch_size)

    def violations(self) -> list[str]:
        """Every config problem, not just the first."""
        out = []
        if self.trials < 1:
            out.append(f"trials must be >= 1, got {self.trials}")
        if not self.payload_lens:
            out.append("payload_lens grid is empty")
        if not self.snr_db:
            out.append("snr_db grid is empty")
        if not self.channel_kinds:
            out.append("channel_kinds grid is empty")
        n = self.num_patches()
        for pl in self.payload_lens:
            if pl < 0 or pl > n:
                out.append(f"payload length {pl} outside [0, {n}]")
        kinds = {k.value for k in ChannelKind}
        for k in self.channel_kinds:
            if k not in kinds:
                out.append(f"unknown channel kind {k!r} (expected one of {sorted(kinds)})")
        if self.codec not in ("reference", "remote"):
            out.append(f"unknown codec {self.codec!r}")
        if self.codec == "remote" and not (self.endpoint or os.environ.get("MASKLINK_ENDPOINT")):
            out.append("remote codec selected but no endpoint given")
        if not 1 <= self.quant_bits <= 16:
            out.append(f"quant_bits {self.quant_bits} outside [1, 16]")
        if not self.images and self.synthetic_count < 1:
            out.append("no image paths and synthetic_count < 1")
        for p in self.images:
            if not os.path.isfile(p):
                out.append(f"image file not found: {p}")
        if self.height % self.patch_size or self.width % self.patch_size:
            out.append(f"{self.height}x{self.width} not divisible by patch size "
                       f"{self.patch_size}")
        return out

    def validate(self) -> None:
        problems = self.violations()
        if problems:
            raise ConfigError("invalid experiment config:\n  " + "\n  ".join(problems))


_LIST_KEYS = {"images", "payload_lens", "snr_db", "channel_kinds"}
_INT_KEYS = {"synthetic_count", "trials", "quant_bits", "master_seed",
             "height", "width", "image_channels", "patch_size", "latent_dim"}
_BOOL_KEYS = {"apply_quantization"}


def parse_config(path) -> ExperimentConfig:
    """Flat key = value text; '#' starts a comment, blank lines ignored."""
    cfg = ExperimentConfig()
    overrides = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not hasattr(cfg, key):
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            overrides[key] = _parse_value(key, value, f"{path}:{lineno}")
    return replace(cfg, **overrides)


def _parse_value(key: str, value: str, where: str):
    try:
        if key in _LIST_KEYS:
            items = [v.strip() for v in value.split(",") if v.strip()]
            if key == "payload_lens":
                return tuple(int(v) for v in items)
            if key == "snr_db":
                return tuple(float(v) for v in items)
            return tuple(items)
        if key in _INT_KEYS:
            return int(value)
        if key in _BOOL_KEYS:
            if value.lower() in ("true", "1", "yes"):
                return True
            if value.lower() in ("false", "0", "no"):
                return False
            raise ValueError(value)
        return value
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {key} = {value!r}") from exc


@dataclass
class TrialRecord:
    image: str
    payload_len: int
    masked: int                # popcount of the sent payload
    snr_db: float
    channel: str
    trial: int
    ber: float | None          # None when the frame was lost
    psnr_db: float | None
    ms_ssim: float | None
    bits_proposed: int
    frame_lost: bool
    wallclock: float

    def csv_row(self) -> str:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, bool):
                return "1" if v else "0"
            if isinstance(v, float):
                return f"{v:.12g}"
            return str(v)
        return ",".join(fmt(getattr(self, name)) for name in CSV_COLUMNS)


def csv_header() -> str:
    return ",".join(CSV_COLUMNS)


def read_records(path) -> list[TrialRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != csv_header():
            raise ConfigError(f"unexpected CSV header in {path}")
        for raw in fh:
            raw = raw.strip()
            if not raw:
                continue
            parts = raw.split(",")
            if len(parts) != len(CSV_COLUMNS):
                raise ConfigError(f"malformed CSV row in {path}: {raw!r}")
            vals = dict(zip(CSV_COLUMNS, parts))
            records.append(TrialRecord(
                image=vals["image"],
                payload_len=int(vals["payload_len"]),
                masked=int(vals["masked"]),
                snr_db=float(vals["snr_db"]),
                channel=vals["channel"],
                trial=int(vals["trial"]),
                ber=float(vals["ber"]) if vals["ber"] else None,
                psnr_db=float(vals["psnr_db"]) if vals["psnr_db"] else None,
                ms_ssim=float(vals["ms_ssim"]) if vals["ms_ssim"] else None,
                bits_proposed=int(vals["bits_proposed"]),
                frame_lost=vals["frame_lost"] == "1",
                wallclock=float(vals["wallclock"]),
            ))
    return records


def _load_images(cfg: ExperimentConfig) -> list[tuple[str, Image]]:
    if cfg.images:
        return [(os.path.basename(p), load_image(p)) for p in cfg.images]
    return [(f"synth{i}",
             synthetic_image(cfg.height, cfg.width, cfg.image_channels,
                             seed=derive_seed(cfg.master_seed, _NS_IMAGE, i)))
            for i in range(cfg.synthetic_count)]


def run_trial(img: Image, image_id: str, payload_len: int, snr_db: float,
              kind: str, trial: int, cfg: ExperimentConfig, link: LinkConfig,
              codec) -> TrialRecord:
    # snr coordinate: sixteenths of a dB, offset to stay non-negative;
    # infinite snr gets its own slot past the finite range
    if math.isfinite(snr_db):
        snr_coord = int(round(snr_db * 16)) + (1 << 20)
    else:
        snr_coord = 1 << 24
    coords = (hash_name(image_id), payload_len, snr_coord,
              0 if kind == "awgn" else 1, trial)
    payload_rng = np.random.default_rng(
        np.random.SeedSequence([cfg.master_seed, _NS_PAYLOAD, *coords]))
    payload = BitPayload(payload_rng.integers(0, 2, size=payload_len, dtype=np.uint8))
    channel_seed = derive_seed(cfg.master_seed, _NS_CHANNEL, *coords)

    start = time.perf_counter()
    frame = sem_encode(img, payload, link, codec)
    bits_proposed = frame.overhead_report(link).bits_proposed
    rx = transmit_frame(frame, ChannelConfig(ChannelKind(kind), snr_db,
                                             seed=channel_seed))
    result: DecodeResult | None
    try:
        result = sem_decode(rx, link, codec)
    except FrameLostError:
        result = None
    elapsed = time.perf_counter() - start

    masked = int(payload.popcount)
    if result is None:
        return TrialRecord(image_id, payload_len, masked, snr_db, kind, trial,
                           ber=None, psnr_db=None, ms_ssim=None,
                           bits_proposed=bits_proposed, frame_lost=True,
                           wallclock=elapsed)
    lost = len(result.payload) != payload_len
    return TrialRecord(
        image_id, payload_len, masked, snr_db, kind, trial,
        ber=None if lost else ber(payload.bits, result.payload.bits),
        psnr_db=psnr(img, result.image),
        ms_ssim=ms_ssim(img, result.image),
        bits_proposed=bits_proposed,
        frame_lost=lost,
        wallclock=elapsed,
    )


def hash_name(name: str) -> int:
    """Stable non-negative hash for seed coordinates (str hash is salted)."""
    acc = 0
    for byte in name.encode("utf-8"):
        acc = (acc * 131 + byte) % (1 << 31)
    return acc


def run_sweep(cfg: ExperimentConfig, csv_path=None) -> list[TrialRecord]:
    cfg.validate()
    os.makedirs(cfg.out_dir, exist_ok=True)
    if csv_path is None:
        csv_path = os.path.join(cfg.out_dir, "records.csv")
    link = cfg.link_config()
    codec = link.build_codec()  # built once; remote codec fails fast here
    images = _load_images(cfg)

    records = []
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(csv_header() + "\n")
        fh.flush()
        for image_id, img in images:
            for payload_len in cfg.payload_lens:
                for snr_db in cfg.snr_db:
                    for kind in cfg.channel_kinds:
                        for trial in range(cfg.trials):
                            rec = run_trial(img, image_id, payload_len, snr_db,
                                            kind, trial, cfg, link, codec)
                            records.append(rec)
                            fh.write(rec.csv_row() + "\n")
                            fh.flush()
    return records

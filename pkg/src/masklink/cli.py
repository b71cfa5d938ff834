"""Command-line front end.

Subcommands:

  send      image + payload -> .scframe on disk
  recv      .scframe -> reconstructed image + recovered payload
  sweep     experiment config -> CSV of trial records + SVG plots
  overhead  closed-form bit accounting for a configuration

The remote codec endpoint comes from --endpoint or the MASKLINK_ENDPOINT
environment variable.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from .codec import QuantSpec
from .errors import MaskLinkError
from .frame import (LinkConfig, noiseless_received, read_scframe, sem_decode,
                    sem_encode, write_scframe)
from .harness import ExperimentConfig, parse_config, run_sweep, _parse_value
from .imaging import load_image, save_image
from .mapping import (BitPayload, check_mask_ratio, load_payload,
                      payload_to_mask, save_payload, RatioAdvisory)
from .overhead import OverheadReport, check_cost
from .plots import PLOT_KINDS, emit_plots
from .remote import ENDPOINT_ENV


def _add_link_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--height", type=int, default=224)
    p.add_argument("--width", type=int, default=224)
    p.add_argument("--channels", type=int, default=3, dest="image_channels")
    p.add_argument("--patch-size", type=int, default=16)
    p.add_argument("--latent-dim", type=int, default=64)
    p.add_argument("--quant-bits", type=int, default=8)
    p.add_argument("--apply-quantization", action="store_true")
    p.add_argument("--codec", choices=("reference", "remote"), default="reference")
    p.add_argument("--endpoint", default=None,
                   help=f"remote codec host:port (default: ${ENDPOINT_ENV})")


def _link_config(args) -> LinkConfig:
    endpoint = args.endpoint or os.environ.get(ENDPOINT_ENV)
    return LinkConfig(height=args.height, width=args.width,
                      channels=args.image_channels, patch_size=args.patch_size,
                      latent_dim=args.latent_dim,
                      quant=QuantSpec(bits=args.quant_bits),
                      apply_quantization=args.apply_quantization,
                      codec_name=args.codec, endpoint=endpoint)


def _read_payload(args, capacity: int) -> BitPayload:
    if args.payload_bits is not None:
        if set(args.payload_bits) - {"0", "1"}:
            raise MaskLinkError("--payload-bits must be a string of 0s and 1s")
        return BitPayload(np.array([int(c) for c in args.payload_bits],
                                   dtype=np.uint8))
    if args.payload is not None:
        return load_payload(args.payload, args.payload_len)
    raise MaskLinkError("provide --payload FILE or --payload-bits BITS")


def _cmd_send(args) -> int:
    cfg = _link_config(args)
    img = load_image(args.image)
    payload = _read_payload(args, cfg.num_patches)
    advisory = check_mask_ratio(payload_to_mask(payload, cfg.num_patches))
    if advisory is not RatioAdvisory.WITHIN_BAND:
        print(f"note: mask ratio is {advisory.value} of the advisory range",
              file=sys.stderr)
    frame = sem_encode(img, payload, cfg)
    write_scframe(frame, args.output)
    bits = frame.total_bit_cost(cfg.quant.bits)
    print(f"wrote {args.output}: {len(payload)} payload bits, "
          f"{frame.header.len_keep} visible patches, {bits} bits on air")
    return 0


def _cmd_recv(args) -> int:
    cfg = _link_config(args)
    frame = read_scframe(args.input)
    result = sem_decode(noiseless_received(frame), cfg)
    save_image(result.image, args.output)
    if args.payload_out:
        save_payload(result.payload, args.payload_out)
    if result.tail_warning:
        print("warning: mask bits set beyond the payload length "
              "(possible corruption)", file=sys.stderr)
    print(f"wrote {args.output}: {len(result.payload)} payload bits recovered"
          + (f", payload at {args.payload_out}" if args.payload_out else ""))
    return 0


def _cmd_sweep(args) -> int:
    if args.config:
        cfg = parse_config(args.config)
    else:
        cfg = ExperimentConfig()
    overrides = {}
    for field in dataclasses.fields(ExperimentConfig):
        value = getattr(args, field.name, None)
        if value is not None:
            overrides[field.name] = _parse_value(field.name, value, "--" + field.name)
    if "endpoint" not in overrides and os.environ.get(ENDPOINT_ENV):
        overrides["endpoint"] = os.environ[ENDPOINT_ENV]
    cfg = dataclasses.replace(cfg, **overrides)
    records = run_sweep(cfg)
    csv_path = os.path.join(cfg.out_dir, "records.csv")
    kinds = [k.strip() for k in args.plots.split(",") if k.strip()]
    paths = emit_plots(records, kinds, cfg.out_dir) if kinds else []
    lost = sum(1 for r in records if r.frame_lost)
    print(f"{len(records)} trials -> {csv_path} ({lost} lost frames)")
    for p in paths:
        print(f"plot: {p}")
    return 0


def _cmd_overhead(args) -> int:
    report = OverheadReport.build(
        num_patches=args.num_patches, mask_ratio=args.mask_ratio,
        bits_per_patch=args.bits_per_patch, sideinfo_bits=args.sideinfo_bits,
        payload_len=args.payload_len, width=args.width, height=args.height,
        channels=args.image_channels, pixel_bits=args.pixel_bits)
    print(OverheadReport.csv_header())
    print(report.csv_row())
    print(f"proposed {report.bits_proposed} bits, minimal {report.bits_minimal} "
          f"bits, direct {report.bits_direct} bits "
          f"(ratio {100 * report.compression_ratio:.2f}%)")
    if args.epsilon is not None:
        ok = check_cost(report.bits_proposed, args.epsilon)
        print(f"budget {args.epsilon}: {'pass' if ok else 'FAIL'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="masklink",
                                     description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("send", help="encode image + payload into a .scframe")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--payload", help="binary payload file")
    p.add_argument("--payload-len", type=int, default=None,
                   help="bit count to take from the payload file")
    p.add_argument("--payload-bits", help="inline payload, e.g. 010110")
    _add_link_flags(p)
    p.set_defaults(func=_cmd_send)

    p = sub.add_parser("recv", help="decode a .scframe back to image + payload")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="image output path")
    p.add_argument("--payload-out", default=None)
    _add_link_flags(p)
    p.set_defaults(func=_cmd_recv)

    p = sub.add_parser("sweep", help="run a seeded experiment sweep")
    p.add_argument("--config", default=None, help="flat key = value file")
    for field in dataclasses.fields(ExperimentConfig):
        p.add_argument("--" + field.name.replace("_", "-"), dest=field.name,
                       default=None, help=f"override {field.name}")
    p.add_argument("--plots", default=",".join(PLOT_KINDS),
                   help="comma list of plot kinds; empty to skip")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("overhead", help="print the overhead report for a config")
    p.add_argument("--num-patches", type=int, default=196)
    p.add_argument("--mask-ratio", type=float, required=True)
    p.add_argument("--bits-per-patch", type=int, default=512)
    p.add_argument("--sideinfo-bits", type=int, default=0)
    p.add_argument("--payload-len", type=int, default=0)
    p.add_argument("--width", type=int, default=224)
    p.add_argument("--height", type=int, default=224)
    p.add_argument("--channels", type=int, default=3, dest="image_channels")
    p.add_argument("--pixel-bits", type=int, default=16)
    p.add_argument("--epsilon", type=int, default=None, help="bit budget")
    p.set_defaults(func=_cmd_overhead)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MaskLinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Print the transmission-cost table across payload lengths.

Columns: payload bits, masked-patch count interpretation, proposed cost,
minimal cost, direct-image baseline, and the compression ratio. Defaults
match the 224x224 / 16px-patch / 64-dim / 8-bit operating point.
"""

import argparse

from masklink.overhead import OverheadReport
from masklink.sparsecode import serialized_length


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--num-patches", type=int, default=196)
    parser.add_argument("--latent-dim", type=int, default=64)
    parser.add_argument("--quant-bits", type=int, default=8)
    parser.add_argument("--pixel-bits", type=int, default=16)
    parser.add_argument("--payload-lens", default="0,25,50,75,100,125,150")
    parser.add_argument("--csv", action="store_true", help="machine format")
    args = parser.parse_args()

    n = args.num_patches
    per_patch = args.latent_dim * args.quant_bits
    if args.csv:
        print(OverheadReport.csv_header())

    for token in args.payload_lens.split(","):
        lb = int(token)
        # cost at the L <-> mask-ratio correspondence point: every payload
        # bit set, so popcount = L and the index list is min(L, N - L) long
        side = serialized_length(n, min(lb, n - lb))
        report = OverheadReport.build(
            num_patches=n, mask_ratio=lb / n, bits_per_patch=per_patch,
            sideinfo_bits=side, payload_len=lb,
            width=224, height=224, channels=3, pixel_bits=args.pixel_bits)
        if args.csv:
            print(report.csv_row())
        else:
            print(f"L={lb:4d}  proposed {report.bits_proposed:8d}  "
                  f"minimal {report.bits_minimal:8d}  "
                  f"direct {report.bits_direct:8d}  "
                  f"ratio {100 * report.compression_ratio:6.2f}%")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

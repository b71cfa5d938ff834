#!/usr/bin/env python3
"""Seeded BER/quality sweep over both channels, with SVG plots.

Thin wrapper over the harness so the standard experiment is one command:

    python3 scripts/ber_sweep.py --out-dir results/sweep1 --trials 25
"""

import argparse

from masklink.harness import ExperimentConfig, run_sweep
from masklink.plots import PLOT_KINDS, emit_plots


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out-dir", default="results/ber_sweep")
    parser.add_argument("--trials", type=int, default=25)
    parser.add_argument("--payload-lens", default="50,100,150")
    parser.add_argument("--snrs", default="0,5,10,15,20")
    parser.add_argument("--channels", default="awgn,rayleigh")
    parser.add_argument("--images", type=int, default=2,
                        help="number of synthetic carrier images")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    cfg = ExperimentConfig(
        synthetic_count=args.images,
        payload_lens=tuple(int(x) for x in args.payload_lens.split(",")),
        snr_db=tuple(float(x) for x in args.snrs.split(",")),
        channel_kinds=tuple(args.channels.split(",")),
        trials=args.trials,
        master_seed=args.seed,
        out_dir=args.out_dir,
    )
    records = run_sweep(cfg)
    lost = sum(1 for r in records if r.frame_lost)
    print(f"{len(records)} trials recorded, {lost} lost frames")
    for path in emit_plots(records, PLOT_KINDS, args.out_dir):
        print(f"plot: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

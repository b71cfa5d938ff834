"""Sweep plots as self-contained SVG files.

The CSV is the primary artifact; these plots are a convenience view, so
they are generated directly as SVG markup with no plotting dependency.
Each plot shows per-grid-point means with +- one standard error bars,
one series per channel kind.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .harness import TrialRecord

PLOT_KINDS = ("ber_vs_snr", "psnr_vs_snr", "msssim_vs_snr", "ber_vs_masked")

_AXES = {
    "ber_vs_snr": ("snr_db", "ber", "SNR (dB)", "payload BER"),
    "psnr_vs_snr": ("snr_db", "psnr_db", "SNR (dB)", "PSNR (dB)"),
    "msssim_vs_snr": ("snr_db", "ms_ssim", "SNR (dB)", "MS-SSIM"),
    "ber_vs_masked": ("masked", "ber", "masked patches", "payload BER"),
}

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 40, 55  # plot margins


@dataclass(frozen=True)
class SeriesPoint:
    x: float
    mean: float
    stderr: float
    n: int


def aggregate_series(records: list[TrialRecord], x_field: str, y_field: str,
                     ) -> dict[str, list[SeriesPoint]]:
    """Group by (channel kind, x), average y. Lost frames (y is None) and
    non-finite values (e.g. PSNR inf on perfect trials) are skipped."""
    buckets: dict[tuple[str, float], list[float]] = {}
    for rec in records:
        y = getattr(rec, y_field)
        x = float(getattr(rec, x_field))
        if y is None or not math.isfinite(y) or not math.isfinite(x):
            continue
        buckets.setdefault((rec.channel, x), []).append(float(y))
    series: dict[str, list[SeriesPoint]] = {}
    for (kind, x), ys in sorted(buckets.items()):
        arr = np.asarray(ys)
        err = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
        series.setdefault(kind, []).append(
            SeriesPoint(x, float(arr.mean()), err, arr.size))
    return series


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / (count - 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if mag * mult >= raw:
            step = mag * mult
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + step * 1e-9:
        ticks.append(round(t, 12))
        t += step
    return ticks or [lo]


def _render_svg(series: dict[str, list[SeriesPoint]], title: str,
                xlabel: str, ylabel: str) -> str:
    xs = [p.x for pts in series.values() for p in pts]
    ylo_vals = [p.mean - p.stderr for pts in series.values() for p in pts]
    yhi_vals = [p.mean + p.stderr for pts in series.values() for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ylo_vals), max(yhi_vals)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    xpad = 0.05 * (x1 - x0)
    ypad = 0.05 * (y1 - y0)
    x0, x1 = x0 - xpad, x1 + xpad
    y0, y1 = y0 - ypad, y1 + ypad

    def px(x):
        return _ML + (x - x0) / (x1 - x0) * (_W - _ML - _MR)

    def py(y):
        return _H - _MB - (y - y0) / (y1 - y0) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="22" text-anchor="middle" font-size="15">{title}</text>',
    ]
    # frame
    parts.append(f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
                 f'height="{_H - _MT - _MB}" fill="none" stroke="#333"/>')
    for t in _ticks(x0, x1):
        if not x0 <= t <= x1:
            continue
        parts.append(f'<line x1="{px(t):.1f}" y1="{_H - _MB}" x2="{px(t):.1f}" '
                     f'y2="{_H - _MB + 5}" stroke="#333"/>')
        parts.append(f'<text x="{px(t):.1f}" y="{_H - _MB + 18}" '
                     f'text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        if not y0 <= t <= y1:
            continue
        parts.append(f'<line x1="{_ML - 5}" y1="{py(t):.1f}" x2="{_ML}" '
                     f'y2="{py(t):.1f}" stroke="#333"/>')
        parts.append(f'<text x="{_ML - 8}" y="{py(t):.1f}" text-anchor="end" '
                     f'dominant-baseline="middle">{t:g}</text>')
    parts.append(f'<text x="{_W / 2}" y="{_H - 12}" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="18" y="{_H / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 18 {_H / 2})">{ylabel}</text>')

    for idx, (name, pts) in enumerate(sorted(series.items())):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = sorted(pts, key=lambda p: p.x)
        path = " ".join(f"{px(p.x):.1f},{py(p.mean):.1f}" for p in pts)
        parts.append(f'<polyline points="{path}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        for p in pts:
            cx, cy = px(p.x), py(p.mean)
            if p.stderr > 0:
                lo, hi = py(p.mean - p.stderr), py(p.mean + p.stderr)
                parts.append(f'<line x1="{cx:.1f}" y1="{lo:.1f}" x2="{cx:.1f}" '
                             f'y2="{hi:.1f}" stroke="{color}"/>')
                for yy in (lo, hi):
                    parts.append(f'<line x1="{cx - 3:.1f}" y1="{yy:.1f}" '
                                 f'x2="{cx + 3:.1f}" y2="{yy:.1f}" stroke="{color}"/>')
            parts.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="3" fill="{color}"/>')
        ly = _MT + 16 + idx * 16
        parts.append(f'<line x1="{_W - _MR - 110}" y1="{ly}" x2="{_W - _MR - 90}" '
                     f'y2="{ly}" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{_W - _MR - 84}" y="{ly + 4}">{name}</text>')

    parts.append("</svg>")
    return "\n".join(parts)


def emit_plots(records: list[TrialRecord], kinds, out_dir) -> list[str]:
    if not records:
        raise ConfigError("no records to plot")
    if not kinds:
        raise ConfigError("no plot kinds requested")
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for kind in kinds:
        if kind not in _AXES:
            raise ConfigError(f"unknown plot kind {kind!r} "
                              f"(expected one of {PLOT_KINDS})")
        x_field, y_field, xlabel, ylabel = _AXES[kind]
        series = aggregate_series(records, x_field, y_field)
        if not any(series.values()):
            raise ConfigError(f"no plottable values for {kind}")
        svg = _render_svg(series, kind.replace("_", " "), xlabel, ylabel)
        path = os.path.join(out_dir, f"{kind}.svg")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(svg)
        paths.append(path)
    return paths

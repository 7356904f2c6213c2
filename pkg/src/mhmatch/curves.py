"""CSV and SVG exports of learned transfer curves."""

from __future__ import annotations

import csv
from pathlib import Path
from xml.sax.saxutils import escape

from .histogram import CHANNELS

CHANNEL_COLORS = {"cyan": "#00a0c8", "magenta": "#c8008c", "yellow": "#d2b400"}
ESTIMATE_COLOR = "#b4b4b4"


def write_curve_csvs(ts, out_dir, prefix="curve"):
    """One ``<prefix>_<channel>.csv`` with ``x,y`` rows per channel."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for t in ts.channels:
        path = out_dir / f"{prefix}_{t.channel}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y"])
            for x, y in zip(t.x, t.y):
                writer.writerow([repr(float(x)), repr(float(y))])
        paths.append(path)
    return paths


def read_curve_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [float(r["x"]) for r in rows], [float(r["y"]) for r in rows]


def _polyline(t, x0, y0, size, color, width, opacity=1.0):
    pts = " ".join(
        f"{x0 + x * size:.2f},{y0 + (1.0 - y) * size:.2f}" for x, y in zip(t.x, t.y)
    )
    return (f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="{width}" stroke-opacity="{opacity}"/>')


def render_svg(median, estimates=(), size=240, margin=30):
    """Three side-by-side panels: per-pair curves in grey under the median."""
    width = 3 * (size + margin) + margin
    height = size + 2 * margin
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for i, name in enumerate(CHANNELS):
        x0 = margin + i * (size + margin)
        y0 = margin
        parts.append(f'<g id="{name}">')
        parts.append(f'<rect x="{x0}" y="{y0}" width="{size}" height="{size}" '
                     'fill="none" stroke="#444" stroke-width="1"/>')
        parts.append(f'<line x1="{x0}" y1="{y0 + size}" x2="{x0 + size}" y2="{y0}" '
                     'stroke="#444" stroke-dasharray="3,3" stroke-width="0.5"/>')
        for est in estimates:
            parts.append(_polyline(est[name], x0, y0, size, ESTIMATE_COLOR, 1, 0.8))
        parts.append(_polyline(median[name], x0, y0, size, CHANNEL_COLORS[name], 2.5))
        parts.append(f'<text x="{x0 + size / 2}" y="{y0 - 8}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="13">{escape(name)}</text>')
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(path, median, estimates=()):
    Path(path).write_text(render_svg(median, estimates), encoding="utf-8")

"""Dependency-light SVG output: lattice heatmaps and simple line plots.

Heatmaps follow the dual-frequency convention: circle fill encodes the
per-particle metric at the first frequency, stroke width the metric at the
second.  Only primitive elements are emitted (circle, rect, line, polyline,
text); one circle per particle, nothing else circular.
"""
from __future__ import annotations

import math

import numpy as np

_VIRIDIS = [
    (0.267, 0.005, 0.329),
    (0.283, 0.141, 0.458),
    (0.254, 0.265, 0.530),
    (0.207, 0.372, 0.553),
    (0.164, 0.471, 0.558),
    (0.128, 0.567, 0.551),
    (0.135, 0.659, 0.518),
    (0.267, 0.749, 0.441),
    (0.478, 0.821, 0.318),
    (0.741, 0.873, 0.150),
    (0.993, 0.906, 0.144),
]


def _color(value: float) -> str:
    """Map a value in [0, 1] onto the viridis-like ramp as a hex color."""
    v = min(max(value, 0.0), 1.0)
    x = v * (len(_VIRIDIS) - 1)
    i = min(int(x), len(_VIRIDIS) - 2)
    t = x - i
    rgb = [(1 - t) * _VIRIDIS[i][c] + t * _VIRIDIS[i + 1][c] for c in range(3)]
    return "#%02x%02x%02x" % tuple(int(round(255 * c)) for c in rgb)


def _normalize(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    finite = np.isfinite(v)
    if not finite.any():
        return np.zeros_like(v)
    lo = v[finite].min()
    hi = v[finite].max()
    span = hi - lo if hi > lo else 1.0
    out = (v - lo) / span
    out[~finite & (v > 0)] = 1.0     # +inf pegs to the top of the scale
    out[~np.isfinite(out)] = 0.0
    return np.clip(out, 0.0, 1.0)


def lattice_heatmap_svg(packing, fill_values, stroke_values=None, roles=None,
                        title: str = "") -> str:
    """SVG of the packing: one circle per particle.

    ``fill_values`` color the disks; optional ``stroke_values`` set the
    perimeter thickness; optional ``roles`` annotate port particles.
    """
    width_px = 640
    scale = width_px / packing.box[0]
    height_px = int(math.ceil(packing.box[1] * scale)) + 40
    r_px = 0.5 * packing.diameter * scale
    fill_n = _normalize(fill_values)
    stroke_n = _normalize(stroke_values) if stroke_values is not None else None
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width_px}" '
        f'height="{height_px}" viewBox="0 0 {width_px} {height_px}">',
        f'<rect width="{width_px}" height="{height_px}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="10" y="20" font-size="14">{title}</text>')
    for i in range(packing.n_particles):
        cx = packing.positions[i, 0] * scale
        cy = height_px - 10 - packing.positions[i, 1] * scale
        stroke_w = 0.5 + 5.0 * stroke_n[i] if stroke_n is not None else 0.5
        parts.append(
            f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r_px:.2f}" '
            f'fill="{_color(fill_n[i])}" stroke="black" '
            f'stroke-width="{stroke_w:.2f}"/>'
        )
        if roles is not None and roles[i] != "free":
            parts.append(
                f'<text x="{cx:.2f}" y="{cy + 4:.2f}" font-size="10" '
                f'text-anchor="middle" fill="red">{roles[i][:1].upper()}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts)


def line_plot_svg(x, series: dict, title: str = "", x_label: str = "",
                  y_label: str = "", log_y: bool = False) -> str:
    """Minimal polyline plot of one or more named series against x."""
    width, height, margin = 640, 420, 50
    x = np.asarray(x, dtype=np.float64)
    all_y = np.concatenate([np.asarray(v, dtype=np.float64) for v in series.values()])
    finite = np.isfinite(all_y)
    if log_y:
        finite &= all_y > 0
    y_lo = all_y[finite].min() if finite.any() else 0.0
    y_hi = all_y[finite].max() if finite.any() else 1.0
    if log_y:
        y_lo, y_hi = math.log10(y_lo), math.log10(y_hi)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    x_lo, x_hi = float(x.min()), float(x.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0

    def px(xv):
        return margin + (xv - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

    def py(yv):
        if log_y:
            yv = math.log10(yv) if yv > 0 else y_lo
        return height - margin - (yv - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<text x="{width // 2}" y="24" font-size="14" text-anchor="middle">{title}</text>',
        f'<text x="{width // 2}" y="{height - 12}" font-size="12" '
        f'text-anchor="middle">{x_label}</text>',
        f'<text x="16" y="{height // 2}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 16 {height // 2})">{y_label}</text>',
    ]
    for idx, (name, ys) in enumerate(series.items()):
        ys = np.asarray(ys, dtype=np.float64)
        pts = []
        for xv, yv in zip(x, ys):
            if not np.isfinite(yv) or (log_y and yv <= 0):
                continue
            pts.append(f"{px(xv):.2f},{py(yv):.2f}")
        color = colors[idx % len(colors)]
        if pts:
            parts.append(f'<polyline points="{" ".join(pts)}" fill="none" '
                         f'stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{width - margin + 4}" '
                     f'y="{margin + 16 * idx}" font-size="11" '
                     f'fill="{color}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts)

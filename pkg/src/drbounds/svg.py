"""Minimal log-log scatter plot written directly as SVG."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT, PAD = 640, 440, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def loglog_svg(series: Sequence[tuple[str, Sequence[float], Sequence[float], tuple[float, float] | None]],
               title: str = "", xlabel: str = "n", ylabel: str = "quantile risk", comment: str = "") -> str:
    """``series`` holds ``(label, xs, ys, (slope, intercept) or None)``; axes are log2/log10."""
    xs = [math.log2(x) for _, X, _, _ in series for x in X]
    ys = [math.log10(y) for _, _, Y, _ in series for y in Y if y > 0]
    if not xs or not ys:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = math.floor(min(xs)), math.ceil(max(xs))
    y0, y1 = math.floor(min(ys)), math.ceil(max(ys))
    x1, y1 = max(x1, x0 + 1), max(y1, y0 + 1)

    def px(lx):
        return PAD + (lx - x0) / (x1 - x0) * (WIDTH - 2 * PAD)

    def py(ly):
        return HEIGHT - PAD - (ly - y0) / (y1 - y0) * (HEIGHT - 2 * PAD)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">']
    if comment:
        out.append(f"<!-- {escape(comment)} -->")
    out.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    out.append(f'<line x1="{PAD}" y1="{HEIGHT - PAD}" x2="{WIDTH - PAD}" y2="{HEIGHT - PAD}" stroke="black"/>')
    out.append(f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{HEIGHT - PAD}" stroke="black"/>')
    for k in range(x0, x1 + 1):
        out.append(f'<text x="{px(k):.1f}" y="{HEIGHT - PAD + 18}" text-anchor="middle">2^{k}</text>')
    for k in range(y0, y1 + 1):
        out.append(f'<text x="{PAD - 8}" y="{py(k) + 4:.1f}" text-anchor="end">1e{k}</text>')
        out.append(f'<line x1="{PAD}" y1="{py(k):.1f}" x2="{WIDTH - PAD}" y2="{py(k):.1f}" '
                   f'stroke="#ddd"/>')
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="15" y="{HEIGHT / 2}" text-anchor="middle" '
               f'transform="rotate(-90 15 {HEIGHT / 2})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="25" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for i, (label, X, Y, fit) in enumerate(series):
        col = COLORS[i % len(COLORS)]
        for x, y in zip(X, Y):
            if y > 0:
                out.append(f'<circle cx="{px(math.log2(x)):.1f}" cy="{py(math.log10(y)):.1f}" r="3.5" fill="{col}"/>')
        if fit is not None and len(X) > 1:
            slope, icpt = fit  # natural-log fit: log y = icpt + slope log x
            a, b = min(X), max(X)
            ya, yb = (icpt + slope * math.log(v) for v in (a, b))
            out.append(f'<line x1="{px(math.log2(a)):.1f}" y1="{py(ya / math.log(10)):.1f}" '
                       f'x2="{px(math.log2(b)):.1f}" y2="{py(yb / math.log(10)):.1f}" stroke="{col}" '
                       f'stroke-dasharray="4 3"/>')
        out.append(f'<text x="{WIDTH - PAD - 5}" y="{PAD + 16 * i}" text-anchor="end" fill="{col}">'
                   f'{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

"""Minimal deterministic SVG line charts.

Hand-rolled instead of a plotting library so that re-rendering the same
report yields byte-identical documents (no embedded timestamps, library
versions, or font metrics).
"""

from __future__ import annotations

from typing import Optional, Sequence
from xml.sax.saxutils import escape

WIDTH = 640
HEIGHT = 400
MARGIN_LEFT = 64
MARGIN_RIGHT = 16
MARGIN_TOP = 36
MARGIN_BOTTOM = 48


def _fmt(value: float) -> str:
    text = f"{value:.6g}"
    return "0" if text == "-0" else text


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if lo == hi:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def line_chart(
    points: Sequence[tuple[float, Optional[float]]],
    title: str,
    x_label: str,
    y_label: str,
    y_zero_line: bool = False,
) -> str:
    """Render (x, y) points as an SVG 1.1 polyline chart.

    Points with a ``None`` y are skipped (gaps in the line).  Raises on an
    empty series; a non-empty series whose values are all gaps renders a
    placeholder document.
    """
    if not points:
        raise ValueError("cannot render a chart from an empty series")
    defined = [(float(x), float(y)) for x, y in points if y is not None]
    if not defined:
        return (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">\n'
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
            f'<text x="{WIDTH / 2:g}" y="{HEIGHT / 2:g}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">'
            f"{escape(title)}: no defined data points</text>\n"
            "</svg>\n"
        )

    xs = [p[0] for p in defined]
    ys = [p[1] for p in defined]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if y_zero_line:
        y_lo = min(y_lo, 0.0)
        y_hi = max(y_hi, 0.0)
    if x_lo == x_hi:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    if y_lo == y_hi:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    # Pad the y range slightly so the polyline does not hug the frame.
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(x: float) -> float:
        return MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:g}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{escape(title)}</text>',
    ]

    frame = (
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="black" stroke-width="1"/>'
    )
    parts.append(frame)

    for tick in _ticks(x_lo, x_hi):
        px = sx(tick)
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{MARGIN_TOP + plot_h}" '
            f'x2="{_fmt(px)}" y2="{MARGIN_TOP + plot_h + 5}" stroke="black"/>')
        parts.append(
            f'<text x="{_fmt(px)}" y="{MARGIN_TOP + plot_h + 20}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="11">'
            f"{escape(_fmt(tick))}</text>")
    for tick in _ticks(y_lo, y_hi):
        py = sy(tick)
        parts.append(
            f'<line x1="{MARGIN_LEFT - 5}" y1="{_fmt(py)}" '
            f'x2="{MARGIN_LEFT}" y2="{_fmt(py)}" stroke="black"/>')
        parts.append(
            f'<text x="{MARGIN_LEFT - 8}" y="{_fmt(py + 4)}" '
            f'text-anchor="end" font-family="sans-serif" font-size="11">'
            f"{escape(_fmt(tick))}</text>")

    parts.append(
        f'<text x="{MARGIN_LEFT + plot_w / 2:g}" y="{HEIGHT - 8}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="12">'
        f"{escape(x_label)}</text>")
    parts.append(
        f'<text x="16" y="{MARGIN_TOP + plot_h / 2:g}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {MARGIN_TOP + plot_h / 2:g})">'
        f"{escape(y_label)}</text>")

    if y_zero_line and y_lo < 0.0 < y_hi:
        py = sy(0.0)
        parts.append(
            f'<line x1="{MARGIN_LEFT}" y1="{_fmt(py)}" '
            f'x2="{MARGIN_LEFT + plot_w}" y2="{_fmt(py)}" '
            f'stroke="grey" stroke-dasharray="4 3"/>')

    coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in defined)
    parts.append(
        f'<polyline points="{coords}" fill="none" stroke="steelblue" '
        f'stroke-width="1.5"/>')
    for x, y in defined:
        parts.append(
            f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="2.5" '
            f'fill="steelblue"/>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"

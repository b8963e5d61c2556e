"""Dependency-free SVG line charts. CSV tables stay the authoritative output."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


class EmptyInput(ValueError):
    pass


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]


@dataclass
class Panel:
    title: str
    series: list[Series] = field(default_factory=list)
    xlabel: str = ""
    ylabel: str = ""


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def _panel_svg(panel: Panel, x0: float, width: float, height: float) -> list[str]:
    pts = [(float(a), float(b)) for s in panel.series for a, b in zip(s.x, s.y)]
    if not pts:
        raise EmptyInput(f"panel {panel.title!r} has no data")
    xs, ys = zip(*pts)
    xmin, xmax, ymin, ymax = min(xs), max(xs), min(ys), max(ys)
    if xmax == xmin:
        xmax = xmin + 1.0
    if ymax == ymin:
        ymax = ymin + 1.0
    left, right, top, bottom = x0 + 60, x0 + width - 15, 30, height - 45

    def sx(v):
        return left + (v - xmin) / (xmax - xmin) * (right - left)

    def sy(v):
        return bottom - (v - ymin) / (ymax - ymin) * (bottom - top)

    out = [
        f'<text x="{(left + right) / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(panel.title)}</text>',
        f'<line class="axis" x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line class="axis" x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
    ]
    for t in _ticks(xmin, xmax):
        out.append(
            f'<text x="{sx(t):.1f}" y="{bottom + 15}" text-anchor="middle" font-size="10">{t:.3g}</text>'
        )
    for t in _ticks(ymin, ymax):
        out.append(
            f'<text x="{left - 5}" y="{sy(t) + 3:.1f}" text-anchor="end" font-size="10">{t:.3g}</text>'
        )
    out.append(
        f'<text x="{(left + right) / 2:.1f}" y="{height - 8}" text-anchor="middle" font-size="11">{escape(panel.xlabel)}</text>'
    )
    out.append(
        f'<text x="{x0 + 14}" y="{(top + bottom) / 2:.1f}" font-size="11" '
        f'transform="rotate(-90 {x0 + 14} {(top + bottom) / 2:.1f})" text-anchor="middle">{escape(panel.ylabel)}</text>'
    )
    for i, s in enumerate(panel.series):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(float(a)):.2f},{sy(float(b)):.2f}" for a, b in zip(s.x, s.y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = top + 4 + 14 * i
        out.append(f'<line x1="{right - 110}" y1="{ly}" x2="{right - 92}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{right - 88}" y="{ly + 4}" font-size="10">{escape(s.label)}</text>')
    return out


def render(panels: list[Panel], panel_width: int = 420, height: int = 300) -> str:
    if not panels:
        raise EmptyInput("nothing to plot")
    width = panel_width * len(panels)
    body = []
    for k, panel in enumerate(panels):
        body.extend(_panel_svg(panel, k * panel_width, panel_width, height))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n<rect width="100%" height="100%" fill="white"/>\n'
        + "\n".join(body)
        + "\n</svg>\n"
    )


def line_chart(series: list[Series], title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    return render([Panel(title, series, xlabel, ylabel)])

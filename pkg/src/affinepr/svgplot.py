"""Minimal self-contained SVG line plots.

Output files embed no scripts, fonts, or external references — just axes,
ticks, and a single polyline — so they render anywhere and byte-compare
across runs.
"""

from __future__ import annotations

import math

WIDTH = 640
HEIGHT = 420
MARGIN_L = 70
MARGIN_R = 20
MARGIN_T = 40
MARGIN_B = 50

_STYLE = (
    'font-family="Helvetica,Arial,sans-serif" font-size="12" fill="#222"'
)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    a = abs(v)
    if 0.001 <= a < 10000:
        return f"{v:.4g}"
    return f"{v:.1e}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def polyline_plot(
    xs,
    ys,
    path: str,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    ylog: bool = False,
    markers: bool = False,
) -> None:
    """Write one polyline through (xs, ys) as a standalone SVG file.

    With ``ylog`` the y axis is log10 (non-positive values are dropped).
    Empty data produces a labeled frame with a "no data" annotation instead
    of a polyline.
    """
    pairs = [
        (float(x), float(y))
        for x, y in zip(xs, ys)
        if math.isfinite(float(x)) and math.isfinite(float(y)) and (not ylog or y > 0)
    ]
    if ylog:
        pairs = [(x, math.log10(y)) for x, y in pairs]

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">'
    )
    out.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
    out.append(
        f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
        'fill="none" stroke="#888" stroke-width="1"/>'
    )
    if title:
        out.append(
            f'<text x="{WIDTH / 2:.0f}" y="24" text-anchor="middle" {_STYLE}>{title}</text>'
        )
    if xlabel:
        out.append(
            f'<text x="{(x0 + x1) / 2:.0f}" y="{HEIGHT - 12}" text-anchor="middle" '
            f"{_STYLE}>{xlabel}</text>"
        )
    if ylabel:
        out.append(
            f'<text x="16" y="{(y0 + y1) / 2:.0f}" text-anchor="middle" {_STYLE} '
            f'transform="rotate(-90 16 {(y0 + y1) / 2:.0f})">{ylabel}</text>'
        )

    if not pairs:
        out.append(
            f'<text x="{(x0 + x1) / 2:.0f}" y="{(y0 + y1) / 2:.0f}" '
            f'text-anchor="middle" {_STYLE}>no data</text>'
        )
        out.append("</svg>")
        _write(path, out)
        return

    xlo = min(p[0] for p in pairs)
    xhi = max(p[0] for p in pairs)
    ylo = min(p[1] for p in pairs)
    yhi = max(p[1] for p in pairs)
    if xhi == xlo:
        xlo, xhi = xlo - 0.5, xhi + 0.5
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5

    def px(x: float) -> float:
        return x0 + (x - xlo) / (xhi - xlo) * (x1 - x0)

    def py(y: float) -> float:
        return y0 - (y - ylo) / (yhi - ylo) * (y0 - y1)

    for tx in _ticks(xlo, xhi):
        out.append(
            f'<line x1="{_fmt(px(tx))}" y1="{y0}" x2="{_fmt(px(tx))}" y2="{y0 + 5}" '
            'stroke="#888" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(px(tx))}" y="{y0 + 18}" text-anchor="middle" {_STYLE}>'
            f"{_tick_label(tx)}</text>"
        )
    for ty in _ticks(ylo, yhi):
        label = _tick_label(10**ty) if ylog else _tick_label(ty)
        out.append(
            f'<line x1="{x0 - 5}" y1="{_fmt(py(ty))}" x2="{x0}" y2="{_fmt(py(ty))}" '
            'stroke="#888" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{x0 - 8}" y="{_fmt(py(ty) + 4)}" text-anchor="end" {_STYLE}>'
            f"{label}</text>"
        )

    points = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in pairs)
    out.append(
        f'<polyline points="{points}" fill="none" stroke="#1f6fb2" stroke-width="1.5"/>'
    )
    if markers:
        for x, y in pairs:
            out.append(
                f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="2.5" fill="#1f6fb2"/>'
            )
    out.append("</svg>")
    _write(path, out)


def _write(path: str, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")

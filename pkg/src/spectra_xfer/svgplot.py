"""Dependency-free SVG line charts and heatmaps.

Reports keep CSV as the authoritative artifact; these plots are diff-able
companions, so everything is emitted with fixed float formatting and no
timestamps or random ids.
"""

from __future__ import annotations

import math

MARGIN_LEFT = 64.0
MARGIN_RIGHT = 16.0
MARGIN_TOP = 28.0
MARGIN_BOTTOM = 46.0

PALETTE = ("#000000", "#c62828", "#1565c0", "#2e7d32", "#ef6c00", "#6a1b9a")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _nice_ticks(lo: float, hi: float, target: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-12 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks


def line_chart(series, title: str = "", x_label: str = "", y_label: str = "",
               width: int = 560, height: int = 360, y_min=None, y_max=None) -> str:
    """Render labelled (xs, ys) series; series = [(label, xs, ys), ...]."""
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    if not xs_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo = min(ys_all) if y_min is None else y_min
    y_hi = max(ys_all) if y_max is None else y_max
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.06 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = width - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = height - MARGIN_TOP - MARGIN_BOTTOM

    def px(x):
        return MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return MARGIN_TOP + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<rect x="{_fmt(MARGIN_LEFT)}" y="{_fmt(MARGIN_TOP)}" width="{_fmt(plot_w)}" '
        f'height="{_fmt(plot_h)}" fill="none" stroke="#888888"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_fmt(width / 2)}" y="16" text-anchor="middle" '
            f'font-size="13">{title}</text>'
        )
    for tick in _nice_ticks(x_lo, x_hi):
        if tick < x_lo or tick > x_hi:
            continue
        x = px(tick)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(MARGIN_TOP + plot_h)}" x2="{_fmt(x)}" '
            f'y2="{_fmt(MARGIN_TOP + plot_h + 4)}" stroke="#888888"/>'
        )
        parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(MARGIN_TOP + plot_h + 16)}" '
            f'text-anchor="middle">{_fmt(tick)}</text>'
        )
    for tick in _nice_ticks(y_lo, y_hi):
        if tick < y_lo or tick > y_hi:
            continue
        y = py(tick)
        parts.append(
            f'<line x1="{_fmt(MARGIN_LEFT - 4)}" y1="{_fmt(y)}" x2="{_fmt(MARGIN_LEFT)}" '
            f'y2="{_fmt(y)}" stroke="#888888"/>'
        )
        parts.append(
            f'<text x="{_fmt(MARGIN_LEFT - 7)}" y="{_fmt(y + 3.5)}" '
            f'text-anchor="end">{_fmt(tick)}</text>'
        )
    if x_label:
        parts.append(
            f'<text x="{_fmt(MARGIN_LEFT + plot_w / 2)}" y="{_fmt(height - 10)}" '
            f'text-anchor="middle">{x_label}</text>'
        )
    if y_label:
        cx, cy = 14.0, MARGIN_TOP + plot_h / 2
        parts.append(
            f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" text-anchor="middle" '
            f'transform="rotate(-90 {_fmt(cx)} {_fmt(cy)})">{y_label}</text>'
        )
    for k, (label, xs, ys) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        points = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>'
        )
        if label:
            ly = MARGIN_TOP + 14 + 14 * k
            lx = MARGIN_LEFT + plot_w - 130
            parts.append(
                f'<line x1="{_fmt(lx)}" y1="{_fmt(ly - 3)}" x2="{_fmt(lx + 18)}" '
                f'y2="{_fmt(ly - 3)}" stroke="{color}" stroke-width="1.5"/>'
            )
            parts.append(f'<text x="{_fmt(lx + 23)}" y="{_fmt(ly)}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _heat_color(frac: float) -> str:
    """Blue (low) through white to red (high)."""
    frac = min(max(frac, 0.0), 1.0)
    if frac < 0.5:
        t = frac / 0.5
        r, g, b = int(60 + t * 195), int(110 + t * 145), 255
    else:
        t = (frac - 0.5) / 0.5
        r, g, b = 255, int(255 - t * 175), int(255 - t * 195)
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(values, row_labels, col_labels, title: str = "",
            cell_text=None, width: int = 560, height: int = 420) -> str:
    """Render a matrix; None cells are drawn hatched gray (not applicable)."""
    n_rows = len(values)
    n_cols = len(values[0]) if n_rows else 0
    present = [v for row in values for v in row if v is not None]
    lo = min(present) if present else 0.0
    hi = max(present) if present else 1.0
    if hi == lo:
        hi = lo + 1.0
    plot_w = width - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = height - MARGIN_TOP - MARGIN_BOTTOM
    cell_w = plot_w / max(n_cols, 1)
    cell_h = plot_h / max(n_rows, 1)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_fmt(width / 2)}" y="16" text-anchor="middle" '
            f'font-size="13">{title}</text>'
        )
    for i in range(n_rows):
        y = MARGIN_TOP + i * cell_h
        parts.append(
            f'<text x="{_fmt(MARGIN_LEFT - 7)}" y="{_fmt(y + cell_h / 2 + 3.5)}" '
            f'text-anchor="end">{row_labels[i]}</text>'
        )
        for jcol in range(n_cols):
            x = MARGIN_LEFT + jcol * cell_w
            value = values[i][jcol]
            if value is None:
                fill = "#e8e8e8"
            else:
                fill = _heat_color((value - lo) / (hi - lo))
            parts.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(cell_w)}" '
                f'height="{_fmt(cell_h)}" fill="{fill}" stroke="#ffffff"/>'
            )
            if value is not None:
                text = cell_text[i][jcol] if cell_text else _fmt(value)
                parts.append(
                    f'<text x="{_fmt(x + cell_w / 2)}" y="{_fmt(y + cell_h / 2 + 3.5)}" '
                    f'text-anchor="middle">{text}</text>'
                )
    for jcol in range(n_cols):
        x = MARGIN_LEFT + jcol * cell_w
        parts.append(
            f'<text x="{_fmt(x + cell_w / 2)}" y="{_fmt(MARGIN_TOP + n_rows * cell_h + 16)}" '
            f'text-anchor="middle">{col_labels[jcol]}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

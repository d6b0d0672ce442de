"""Self-contained SVG line plots (no plotting library needed)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from ..errors import UnknownColumn

WIDTH, HEIGHT = 800, 600
MARGIN = {"left": 90, "right": 30, "top": 50, "bottom": 70}


@dataclass
class Series:
    """Named numeric columns; empty CSV cells become NaN."""

    columns: dict

    @classmethod
    def from_csv(cls, path) -> "Series":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        cols = {}
        for j, name in enumerate(header):
            cols[name] = np.array([float(r[j]) if r[j] != "" else math.nan for r in rows])
        return cls(cols)

    def __getitem__(self, name):
        if name not in self.columns:
            raise UnknownColumn(f"unknown column {name!r}; available: {', '.join(self.columns)}")
        return self.columns[name]


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(lo), math.ceil(hi)
        step = max(1, (b - a) // 8)
        return [float(v) for v in range(a, b + 1, step)]
    span = hi - lo
    raw = span / 6
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def _label(v, log):
    return f"1e{int(v)}" if log else f"{v:.4g}"


def emit_plot(series, columns, path, log_x: bool = False, log_y: bool = False, title: str = "") -> str:
    """Write an SVG line plot of ``columns = (x, y)`` from ``series``.

    ``series`` is a :class:`Series`, a dict of arrays or a CSV path.  Rows
    with non-finite values (or nonpositive values on a log axis) are dropped.
    """
    if isinstance(series, dict):
        series = Series(series)
    elif not isinstance(series, Series):
        series = Series.from_csv(series)
    xname, yname = columns
    x = np.asarray(series[xname], dtype=float)
    y = np.asarray(series[yname], dtype=float)
    keep = np.isfinite(x) & np.isfinite(y)
    if log_x:
        keep &= x > 0
    if log_y:
        keep &= y > 0
    x, y = x[keep], y[keep]
    if log_x:
        x = np.log10(x)
    if log_y:
        y = np.log10(y)

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="28" text-anchor="middle" font-family="sans-serif" font-size="18">'
        f"{escape(title or f'{yname} vs {xname}')}</text>",
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if len(x):
        x0, x1 = float(x.min()), float(x.max())
        y0, y1 = float(y.min()), float(y.max())
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5

        def sx(v):
            return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

        def sy(v):
            return MARGIN["top"] + ph - (v - y0) / (y1 - y0) * ph

        for v in _ticks(x0, x1, log_x):
            if x0 <= v <= x1:
                px = sx(v)
                parts.append(f'<line x1="{px:.2f}" y1="{MARGIN["top"] + ph}" x2="{px:.2f}" '
                             f'y2="{MARGIN["top"] + ph + 6}" stroke="black"/>')
                parts.append(f'<text x="{px:.2f}" y="{MARGIN["top"] + ph + 22}" text-anchor="middle" '
                             f'font-family="sans-serif" font-size="12">{_label(v, log_x)}</text>')
        for v in _ticks(y0, y1, log_y):
            if y0 <= v <= y1:
                py = sy(v)
                parts.append(f'<line x1="{MARGIN["left"] - 6}" y1="{py:.2f}" x2="{MARGIN["left"]}" '
                             f'y2="{py:.2f}" stroke="black"/>')
                parts.append(f'<text x="{MARGIN["left"] - 10}" y="{py + 4:.2f}" text-anchor="end" '
                             f'font-family="sans-serif" font-size="12">{_label(v, log_y)}</text>')
        # thin very long series to keep the file small; endpoints are kept
        step = max(1, len(x) // 4000)
        idx = np.unique(np.concatenate([np.arange(0, len(x), step), [len(x) - 1]]))
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[idx], y[idx]))
        parts.append(f'<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{pts}"/>')
    parts.append(f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 20}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="14">{escape(xname)}{" (log10)" if log_x else ""}</text>')
    parts.append(f'<text x="22" y="{MARGIN["top"] + ph / 2}" text-anchor="middle" font-family="sans-serif" '
                 f'font-size="14" transform="rotate(-90 22 {MARGIN["top"] + ph / 2})">'
                 f'{escape(yname)}{" (log10)" if log_y else ""}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
    return str(path)

"""Small, dependency-free SVG charts.

Every number is written with fixed precision so identical inputs always give
byte-identical documents.
"""

from __future__ import annotations

from html import escape
from typing import Sequence

import numpy as np

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _f(x: float) -> str:
    return f"{x:.2f}"


def _label(x: float) -> str:
    return f"{x:.3g}"


class Canvas:
    def __init__(self, width: int, height: int, title: str = "") -> None:
        self.width, self.height = width, height
        self.parts: list[str] = []
        if title:
            self.text(width / 2, 16, title, anchor="middle", size=13)

    def rect(self, x, y, w, h, fill, stroke="none") -> None:
        self.parts.append(
            f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(max(w, 0))}" height="{_f(max(h, 0))}" '
            f'fill="{fill}" stroke="{stroke}"/>'
        )

    def line(self, x1, y1, x2, y2, stroke="#333", dash: str | None = None) -> None:
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" stroke="{stroke}"{extra}/>'
        )

    def polyline(self, xs, ys, stroke) -> None:
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in zip(xs, ys))
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="2"/>')

    def circle(self, x, y, r, fill) -> None:
        self.parts.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{_f(r)}" fill="{fill}" fill-opacity="0.6"/>')

    def text(self, x, y, s, anchor="start", size=11, rotate: float | None = None, fill="#000") -> None:
        tr = f' transform="rotate({_f(rotate)} {_f(x)} {_f(y)})"' if rotate is not None else ""
        self.parts.append(
            f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}" font-family="sans-serif" '
            f'font-size="{size}" fill="{fill}"{tr}>{escape(str(s))}</text>'
        )

    def render(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">'
        )
        body = "\n".join(self.parts)
        return f'{head}\n<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n'


class _Axes:
    """Maps data coordinates into a plotting rectangle and draws ticks."""

    def __init__(self, canvas: Canvas, box, xlim, ylim) -> None:
        self.c = canvas
        self.x0, self.y0, self.x1, self.y1 = box
        self.xlim, self.ylim = _pad(xlim), _pad(ylim)

    def X(self, v):
        lo, hi = self.xlim
        return self.x0 + (v - lo) / (hi - lo) * (self.x1 - self.x0)

    def Y(self, v):
        lo, hi = self.ylim
        return self.y1 - (v - lo) / (hi - lo) * (self.y1 - self.y0)

    def frame(self, xlabel="", ylabel="", xticks=True) -> None:
        c = self.c
        c.line(self.x0, self.y1, self.x1, self.y1)
        c.line(self.x0, self.y0, self.x0, self.y1)
        for v in np.linspace(*self.ylim, 5):
            c.line(self.x0 - 4, self.Y(v), self.x0, self.Y(v))
            c.text(self.x0 - 6, self.Y(v) + 4, _label(v), anchor="end")
        if xticks:
            for v in np.linspace(*self.xlim, 5):
                c.line(self.X(v), self.y1, self.X(v), self.y1 + 4)
                c.text(self.X(v), self.y1 + 16, _label(v), anchor="middle")
        if xlabel:
            c.text((self.x0 + self.x1) / 2, self.y1 + 32, xlabel, anchor="middle")
        if ylabel:
            ym = (self.y0 + self.y1) / 2
            c.text(14, ym, ylabel, anchor="middle", rotate=-90)


def _pad(lim):
    lo, hi = float(lim[0]), float(lim[1])
    if not np.isfinite(lo) or not np.isfinite(hi):
        return 0.0, 1.0
    if hi <= lo:
        return lo - 0.5, hi + 0.5
    return lo, hi


def bar_chart(labels: Sequence[str], values: Sequence[float], title: str = "", xlabel: str = "") -> str:
    """Horizontal bars, one per label, drawn top to bottom in input order."""
    n = max(len(labels), 1)
    height = 50 + 22 * n + 40
    c = Canvas(560, height, title)
    vals = np.asarray(values, dtype=float) if len(values) else np.zeros(1)
    lo, hi = min(0.0, float(vals.min())), max(0.0, float(vals.max()))
    ax = _Axes(c, (170, 30, 540, 30 + 22 * n), (lo, hi), (0, 1))
    for i, (lab, v) in enumerate(zip(labels, values)):
        y = 30 + 22 * i + 3
        x_a, x_b = ax.X(0.0), ax.X(float(v))
        c.rect(min(x_a, x_b), y, abs(x_b - x_a), 16, PALETTE[0])
        c.text(164, y + 12, lab, anchor="end")
    c.line(ax.X(0.0), ax.y0, ax.X(0.0), ax.y1)
    for v in np.linspace(*ax.xlim, 5):
        c.text(ax.X(v), ax.y1 + 16, _label(v), anchor="middle")
    if xlabel:
        c.text(355, ax.y1 + 32, xlabel, anchor="middle")
    return c.render()


def grouped_bar_chart(
    groups: Sequence[str], series: dict[str, Sequence[float | None]], title: str = "", ylabel: str = ""
) -> str:
    """Vertical bars: one cluster per group, one coloured bar per series.
    ``None`` values are left blank."""
    names = list(series)
    width = max(420, 90 + 70 * len(groups) * max(1, len(names)) // 2)
    c = Canvas(width, 390, title)
    flat = [v for s in series.values() for v in s if v is not None]
    lo = min([0.0] + flat)
    hi = max([1e-12] + flat)
    ax = _Axes(c, (60, 30, width - 20, 250), (0, 1), (lo, hi))
    ax.frame(ylabel=ylabel, xticks=False)
    slot = (ax.x1 - ax.x0) / max(len(groups), 1)
    bar = slot * 0.8 / max(len(names), 1)
    for g, group in enumerate(groups):
        left = ax.x0 + g * slot + slot * 0.1
        for s, name in enumerate(names):
            v = series[name][g]
            if v is None:
                continue
            y_a, y_b = ax.Y(0.0), ax.Y(float(v))
            c.rect(left + s * bar, min(y_a, y_b), bar * 0.9, abs(y_b - y_a), PALETTE[s % len(PALETTE)])
        c.text(left + slot * 0.4, ax.y1 + 14, group, anchor="end", rotate=-30, size=10)
    for s, name in enumerate(names):
        x = ax.x0 + 110 * s
        c.rect(x, 368, 10, 10, PALETTE[s % len(PALETTE)])
        c.text(x + 14, 377, name)
    return c.render()


def line_chart(
    x: Sequence[float],
    ys: dict[str, Sequence[float]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    diagonal: bool = False,
    xlim=None,
    ylim=None,
) -> str:
    c = Canvas(480, 360, title)
    x = np.asarray(x, dtype=float)
    all_y = np.concatenate([np.asarray(v, dtype=float) for v in ys.values()]) if ys else np.zeros(1)
    ax = _Axes(
        c,
        (60, 30, 460, 300),
        xlim or (float(x.min()), float(x.max())) if len(x) else (0, 1),
        ylim or (float(all_y.min()), float(all_y.max())),
    )
    ax.frame(xlabel, ylabel)
    if diagonal:
        lo, hi = ax.xlim
        c.line(ax.X(lo), ax.Y(lo), ax.X(hi), ax.Y(hi), stroke="#999", dash="4 3")
    for i, (name, y) in enumerate(ys.items()):
        colour = PALETTE[i % len(PALETTE)]
        c.polyline([ax.X(v) for v in x], [ax.Y(v) for v in np.asarray(y, dtype=float)], colour)
        if len(ys) > 1:
            c.rect(70 + 110 * i, 342, 10, 10, colour)
            c.text(84 + 110 * i, 351, name)
    return c.render()


def step_or_line(x_labels: Sequence[str], ys: dict[str, Sequence[float]], title: str = "", ylabel: str = "") -> str:
    """Categorical x axis: points joined by lines, labels under each point."""
    n = len(x_labels)
    c = Canvas(max(480, 40 * n + 100), 360, title)
    all_y = np.concatenate([np.asarray(v, dtype=float) for v in ys.values()])
    ax = _Axes(c, (60, 30, c.width - 20, 280), (0, max(n - 1, 1)), (float(all_y.min()), float(all_y.max())))
    ax.frame(ylabel=ylabel, xticks=False)
    for i, lab in enumerate(x_labels):
        c.text(ax.X(i), ax.y1 + 14, lab, anchor="end", rotate=-30, size=10)
    for s, (name, y) in enumerate(ys.items()):
        colour = PALETTE[s % len(PALETTE)]
        c.polyline([ax.X(i) for i in range(n)], [ax.Y(v) for v in y], colour)
        for i, v in enumerate(y):
            c.circle(ax.X(i), ax.Y(v), 3, colour)
    return c.render()


def scatter_chart(x: Sequence[float], y: Sequence[float], title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """Scatter with a dashed identity line (predicted vs true)."""
    c = Canvas(480, 360, title)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lo = float(min(x.min(), y.min())) if len(x) else 0.0
    hi = float(max(x.max(), y.max())) if len(x) else 1.0
    ax = _Axes(c, (60, 30, 460, 300), (lo, hi), (lo, hi))
    ax.frame(xlabel, ylabel)
    c.line(ax.X(lo), ax.Y(lo), ax.X(hi), ax.Y(hi), stroke="#999", dash="4 3")
    for a, b in zip(x, y):
        c.circle(ax.X(a), ax.Y(b), 2.5, PALETTE[0])
    return c.render()


def heatmap(matrix: np.ndarray, labels: Sequence[str], title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """Count matrix with one cell per (row, column), shaded by count."""
    m = np.asarray(matrix)
    k = len(labels)
    cell = max(28, min(60, 360 // max(k, 1)))
    size = 110 + cell * k
    c = Canvas(size + 20, size + 30, title)
    top = max(m.max(), 1)
    for i in range(k):
        c.text(96, 50 + cell * i + cell / 2 + 4, labels[i], anchor="end")
        c.text(100 + cell * i + cell / 2, 44, labels[i], anchor="middle")
        for j in range(k):
            shade = int(round(235 - 185 * m[i, j] / top))
            colour = f"#{shade:02x}{shade:02x}ff"
            c.rect(100 + cell * j, 50 + cell * i, cell, cell, colour, stroke="#fff")
            ink = "#fff" if shade < 140 else "#000"
            c.text(100 + cell * j + cell / 2, 50 + cell * i + cell / 2 + 4, int(m[i, j]), anchor="middle", fill=ink)
    if xlabel:
        c.text(100 + cell * k / 2, 50 + cell * k + 18, xlabel, anchor="middle")
    if ylabel:
        c.text(14, 50 + cell * k / 2, ylabel, anchor="middle", rotate=-90)
    return c.render()

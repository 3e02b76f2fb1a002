"""Minimal static SVG charts: line plots, scatter plots and confusion heatmaps.

Only plain ``<svg>``, ``<rect>``, ``<circle>``, ``<polyline>``, ``<line>`` and
``<text>`` elements are emitted so the files stay easy to inspect and test.
"""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = 60
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, title: str, width: int = WIDTH, height: int = HEIGHT):
        self.width, self.height = width, height
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
            self.text(width / 2, 24, title, size=15, anchor="middle"),
        ]

    @staticmethod
    def text(x, y, s, size=11, anchor="start", rotate=None):
        extra = f' transform="rotate({rotate} {_fmt(x)} {_fmt(y)})"' if rotate is not None else ""
        return (f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" font-family="sans-serif" '
                f'text-anchor="{anchor}"{extra}>{escape(str(s))}</text>')

    def add(self, element: str):
        self.parts.append(element)

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


class _Axes:
    """Linear data-to-pixel mapping with a framed plot area and tick labels."""

    def __init__(self, canvas, xlim, ylim, xlabel="", ylabel=""):
        self.canvas = canvas
        self.x0, self.x1 = MARGIN, canvas.width - 20
        self.y0, self.y1 = canvas.height - MARGIN + 10, 40
        self.xlim = self._pad(*xlim)
        self.ylim = self._pad(*ylim)
        c = canvas
        c.add(f'<rect x="{self.x0}" y="{self.y1}" width="{self.x1 - self.x0}" '
              f'height="{self.y0 - self.y1}" fill="none" stroke="black"/>')
        for v in np.linspace(*self.xlim, 5):
            c.add(c.text(self.x(v), self.y0 + 16, f"{v:.3g}", size=10, anchor="middle"))
        for v in np.linspace(*self.ylim, 5):
            c.add(c.text(self.x0 - 6, self.y(v) + 4, f"{v:.3g}", size=10, anchor="end"))
        if xlabel:
            c.add(c.text((self.x0 + self.x1) / 2, canvas.height - 12, xlabel, anchor="middle"))
        if ylabel:
            c.add(c.text(16, (self.y0 + self.y1) / 2, ylabel, anchor="middle", rotate=-90))

    @staticmethod
    def _pad(lo, hi):
        lo, hi = float(lo), float(hi)
        if not np.isfinite(lo) or not np.isfinite(hi):
            return 0.0, 1.0
        if hi == lo:
            return lo - 0.5, hi + 0.5
        return lo, hi

    def x(self, v):
        lo, hi = self.xlim
        return self.x0 + (v - lo) / (hi - lo) * (self.x1 - self.x0)

    def y(self, v):
        lo, hi = self.ylim
        return self.y0 - (v - lo) / (hi - lo) * (self.y0 - self.y1)


def line_plot(series, title: str, xlabel: str = "", ylabel: str = "", markers: bool = False) -> str:
    """``series`` is a list of (x, y, name) triples."""
    canvas = _Canvas(title)
    xs = np.concatenate([np.asarray(s[0], float) for s in series])
    ys = np.concatenate([np.asarray(s[1], float) for s in series])
    ax = _Axes(canvas, (xs.min(), xs.max()), (ys.min(), ys.max()), xlabel, ylabel)
    for i, (x, y, name) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        points = " ".join(f"{_fmt(ax.x(a))},{_fmt(ax.y(b))}" for a, b in zip(x, y))
        canvas.add(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.2"/>')
        if markers:
            for a, b in zip(x, y):
                canvas.add(f'<circle cx="{_fmt(ax.x(a))}" cy="{_fmt(ax.y(b))}" r="3" fill="{color}"/>')
        if name and len(series) > 1:
            canvas.add(canvas.text(ax.x1 - 8, ax.y1 + 14 + 14 * i, name, anchor="end"))
    return canvas.render()


def scatter_plot(x, y, groups, title: str, xlabel: str = "", ylabel: str = "",
                 group_names=None) -> str:
    """One circle per point, coloured by integer group."""
    x, y, groups = np.asarray(x, float), np.asarray(y, float), np.asarray(groups)
    canvas = _Canvas(title)
    ax = _Axes(canvas, (x.min(), x.max()), (y.min(), y.max()), xlabel, ylabel)
    for a, b, g in zip(x, y, groups):
        color = PALETTE[int(g) % len(PALETTE)]
        canvas.add(f'<circle cx="{_fmt(ax.x(a))}" cy="{_fmt(ax.y(b))}" r="3.5" '
                   f'class="point" fill="{color}" fill-opacity="0.75"/>')
    for i, g in enumerate(np.unique(groups)):
        name = group_names.get(int(g), str(g)) if group_names else f"cluster {g}"
        canvas.add(canvas.text(ax.x1 - 8, ax.y1 + 14 + 14 * i, name, anchor="end"))
    return canvas.render()


def heatmap(counts, row_names, col_names, title: str, xlabel: str = "predicted",
            ylabel: str = "true") -> str:
    """Confusion-matrix heatmap: one rect and one count label per cell."""
    counts = np.asarray(counts)
    rows, cols = counts.shape
    cell = min(80, (WIDTH - 2 * MARGIN) // max(cols, 1), (HEIGHT - 2 * MARGIN) // max(rows, 1))
    width = 2 * MARGIN + 40 + cols * cell
    height = 2 * MARGIN + rows * cell + 20
    canvas = _Canvas(title, width, height)
    left, top = MARGIN + 40, MARGIN
    row_tot = counts.sum(axis=1, keepdims=True)
    frac = np.divide(counts, row_tot, out=np.zeros(counts.shape), where=row_tot > 0)
    for i in range(rows):
        canvas.add(canvas.text(left - 6, top + i * cell + cell / 2 + 4, row_names[i], anchor="end"))
        for j in range(cols):
            shade = int(round(255 * (1 - 0.85 * frac[i, j])))
            canvas.add(f'<rect x="{left + j * cell}" y="{top + i * cell}" width="{cell}" '
                       f'height="{cell}" class="cell" fill="rgb({shade},{shade},255)" stroke="black"/>')
            canvas.add(canvas.text(left + j * cell + cell / 2, top + i * cell + cell / 2 + 4,
                                   int(counts[i, j]), size=13, anchor="middle"))
    for j in range(cols):
        canvas.add(canvas.text(left + j * cell + cell / 2, top + rows * cell + 16, col_names[j],
                               anchor="middle"))
    canvas.add(canvas.text(left + cols * cell / 2, height - 10, xlabel, anchor="middle"))
    canvas.add(canvas.text(16, top + rows * cell / 2, ylabel, anchor="middle", rotate=-90))
    return canvas.render()


def downsample(y, max_points: int = 1500) -> np.ndarray:
    """Block-average ``y`` down to at most ``max_points`` values."""
    y = np.asarray(y, float)
    if y.size <= max_points:
        return y
    block = int(np.ceil(y.size / max_points))
    usable = (y.size // block) * block
    return y[:usable].reshape(-1, block).mean(axis=1)

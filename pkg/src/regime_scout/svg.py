"""Self-contained SVG figures rendered from a run directory."""
from __future__ import annotations

import json
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from . import outputs

FIGURES = ("regimes", "uncertainty", "surface", "pca")
WIDTH, HEIGHT = 640, 520
LEFT, RIGHT, TOP, BOTTOM = 70, 30, 40, 60
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
NOISE_COLOUR = "#7f7f7f"
FAILED_COLOUR = "#000000"


def _colour(label: str) -> str:
    if label == "NOISE":
        return NOISE_COLOUR
    if label == "FAILED":
        return FAILED_COLOUR
    return PALETTE[int(label) % len(PALETTE)]


def _num(v: float) -> str:
    return format(v, ".2f")


class _Frame:
    def __init__(self, xlim, ylim, title, xlabel, ylabel):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 == self.x0:
            self.x0, self.x1 = self.x0 - 1, self.x1 + 1
        if self.y1 == self.y0:
            self.y0, self.y1 = self.y0 - 1, self.y1 + 1
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
            f'<text x="{WIDTH / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>',
            f'<text x="18" y="{HEIGHT / 2}" text-anchor="middle" '
            f'transform="rotate(-90 18 {HEIGHT / 2})">{escape(ylabel)}</text>',
        ]

    def px(self, x):
        return LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)

    def py(self, y):
        return HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)

    def axes(self):
        w, h = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
        self.parts.append(f'<rect x="{LEFT}" y="{TOP}" width="{w}" height="{h}" fill="none" stroke="black"/>')
        for k in range(5):
            xv = self.x0 + k * (self.x1 - self.x0) / 4
            yv = self.y0 + k * (self.y1 - self.y0) / 4
            self.parts.append(f'<text x="{_num(self.px(xv))}" y="{HEIGHT - BOTTOM + 16}" '
                              f'text-anchor="middle">{xv:.3g}</text>')
            self.parts.append(f'<text x="{LEFT - 6}" y="{_num(self.py(yv) + 4)}" '
                              f'text-anchor="end">{yv:.3g}</text>')

    def marker(self, x, y, colour, label):
        self.parts.append(f'<circle class="marker" cx="{_num(self.px(x))}" cy="{_num(self.py(y))}" r="3" '
                          f'fill="{colour}" stroke="black" stroke-width="0.4"><title>{escape(label)}</title></circle>')

    def polyline(self, pts, colour="black", width=2.0):
        coords = " ".join(f"{_num(self.px(a))},{_num(self.py(b))}" for a, b in pts)
        self.parts.append(f'<polyline points="{coords}" fill="none" stroke="{colour}" stroke-width="{width}"/>')

    def heatmap(self, axes, field, lo, hi):
        xs, ys = axes
        # cell edges halfway between nodes
        xe = np.concatenate([[xs[0]], (xs[:-1] + xs[1:]) / 2, [xs[-1]]])
        ye = np.concatenate([[ys[0]], (ys[:-1] + ys[1:]) / 2, [ys[-1]]])
        span = hi - lo if hi > lo else 1.0
        for j in range(len(ys)):
            for i in range(len(xs)):
                x, y = self.px(xe[i]), self.py(ye[j + 1])
                w, h = self.px(xe[i + 1]) - x, self.py(ye[j]) - y
                self.parts.append(f'<rect x="{_num(x)}" y="{_num(y)}" width="{_num(w + 0.3)}" '
                                  f'height="{_num(h + 0.3)}" fill="{_ramp((field[j, i] - lo) / span)}"/>')

    def legend(self, entries):
        for k, (text, colour) in enumerate(entries):
            y = TOP + 14 + 16 * k
            self.parts.append(f'<circle cx="{WIDTH - RIGHT - 90}" cy="{y - 4}" r="4" fill="{colour}"/>')
            self.parts.append(f'<text x="{WIDTH - RIGHT - 80}" y="{y}">{escape(text)}</text>')

    def text(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _ramp(u: float) -> str:
    """Blue-white-red ramp for u in [0, 1]."""
    u = min(max(float(u), 0.0), 1.0)
    if u < 0.5:
        s = u / 0.5
        r, g, b = 59 + s * (247 - 59), 76 + s * (247 - 76), 192 + s * (247 - 192)
    else:
        s = (u - 0.5) / 0.5
        r, g, b = 247 + s * (180 - 247), 247 + s * (4 - 247), 247 + s * (38 - 247)
    return f"#{int(round(r)):02x}{int(round(g)):02x}{int(round(b)):02x}"


def _contours(run: Path):
    header, rows = outputs.read_table(run / outputs.CONTOURS)
    lines: dict = {}
    for level, pid, _, a, b in rows:
        lines.setdefault((float(level), int(pid)), []).append((float(a), float(b)))
    return lines


def _box(report):
    axes = report["config"]["system"]["free_axes"]
    return axes, (axes[0]["min"], axes[0]["max"]), (axes[1]["min"], axes[1]["max"]) if len(axes) > 1 else (0, 1)


def _legend_for(labels):
    ordered = sorted(set(labels), key=lambda s: (not s.lstrip("-").isdigit(), int(s) if s.lstrip("-").isdigit() else 0, s))
    return [(f"regime {s}" if s.isdigit() else s.lower(), _colour(s)) for s in ordered]


def regimes(run: Path, report: dict) -> str:
    axes, xlim, ylim = _box(report)
    header, rows = outputs.read_table(run / outputs.SAMPLES)
    n = len(axes)
    frame = _Frame(xlim, ylim, "Sampled points and learned boundaries", axes[0]["name"],
                   axes[1]["name"] if n > 1 else "")
    frame.axes()
    for (level, _), pts in sorted(_contours(run).items()):
        frame.polyline(pts)
    labels = []
    for row in rows:
        lab = row[1 + n]
        labels.append(lab)
        frame.marker(float(row[1]), float(row[2]) if n > 1 else 0.0, _colour(lab), f"label {lab}")
    frame.legend(_legend_for(labels))
    return frame.text()


def _grid_figure(run: Path, report: dict, which: str) -> str:
    axes, xlim, ylim = _box(report)
    grid_axes, mean, std = outputs.read_grid(run / outputs.GRID)
    if which == "uncertainty":
        field, title = std, f"Posterior standard deviation (max {std.max():.3g})"
        lo, hi = 0.0, float(std.max())
    else:
        field, title = mean, "Posterior mean with half-integer boundaries"
        lo, hi = float(mean.min()), float(mean.max())
    frame = _Frame(xlim, ylim, title, axes[0]["name"], axes[1]["name"])
    frame.heatmap(grid_axes, field, lo, hi)
    frame.axes()
    if which == "surface":
        for (level, _), pts in sorted(_contours(run).items()):
            frame.polyline(pts)
    return frame.text()


def pca(run: Path, report: dict) -> str:
    header, rows = outputs.read_table(run / outputs.PCA)
    pts = np.array([[float(r[1]), float(r[2])] for r in rows]) if rows else np.zeros((0, 2))
    pad = lambda lo, hi: (lo - 0.05 * (hi - lo), hi + 0.05 * (hi - lo))  # noqa: E731
    xlim = pad(pts[:, 0].min(), pts[:, 0].max()) if len(pts) else (0, 1)
    ylim = pad(pts[:, 1].min(), pts[:, 1].max()) if len(pts) else (0, 1)
    frame = _Frame(xlim, ylim, "Embedding projected on two principal components", "PC 1", "PC 2")
    frame.axes()
    for (a, b), row in zip(pts, rows):
        frame.marker(a, b, _colour(row[3]), f"sample {row[0]}, label {row[3]}")
    frame.legend(_legend_for([r[3] for r in rows]))
    return frame.text()


def render(run_dir, figure: str) -> str:
    """SVG text for ``figure`` drawn from the files in ``run_dir``."""
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    run = Path(run_dir)
    report = json.loads((run / outputs.REPORT).read_text())
    if figure in ("uncertainty", "surface") and len(report["config"]["system"]["free_axes"]) != 2:
        raise ValueError("grid figures need a two-dimensional parameter space")
    if figure == "regimes":
        return regimes(run, report)
    if figure == "pca":
        return pca(run, report)
    return _grid_figure(run, report, figure)

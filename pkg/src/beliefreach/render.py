"""Static SVG renders of exported prediction sets and simulation logs.

Rendering works purely from exported artifacts (CSV + JSON); nothing is
recomputed here. Zero-level contours come from marching squares
(skimage.measure.find_contours). Colors follow the set legend used
throughout: naive grey, thresholded reachability magenta, stochastic teal.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np
from skimage import measure

from .errors import RejectedInputError
from .grids import Grid
from .predictors import KIND_BA_FRS, KIND_BAYES, KIND_NAIVE, load_tube_sets

KIND_COLORS = {
    KIND_NAIVE: "#9e9e9e",
    KIND_BA_FRS: "#c2339b",
    KIND_BAYES: "#2aa198",
}


def zero_contours(grid: Grid, values: np.ndarray) -> list[np.ndarray]:
    """Zero-level polylines in world coordinates, one (n, 2) array each."""
    out = []
    for seg in measure.find_contours(values, 0.0):
        xy = np.empty_like(seg)
        xy[:, 0] = grid.mins[0] + seg[:, 0] * grid.spacing[0]
        xy[:, 1] = grid.mins[1] + seg[:, 1] * grid.spacing[1]
        out.append(xy)
    return out


class _SvgCanvas:
    def __init__(self, mins, maxs, size=480):
        self.mins = mins
        self.maxs = maxs
        span_x = maxs[0] - mins[0]
        span_y = maxs[1] - mins[1]
        self.scale = size / max(span_x, span_y)
        self.w = span_x * self.scale
        self.h = span_y * self.scale
        self.parts: list[str] = []

    def _pt(self, x, y):
        return (
            (x - self.mins[0]) * self.scale,
            self.h - (y - self.mins[1]) * self.scale,
        )

    def polyline(self, xy: np.ndarray, color: str, width=1.5, fill="none", opacity=1.0):
        pts = " ".join(
            "%.2f,%.2f" % self._pt(x, y) for x, y in xy
        )
        self.parts.append(
            f'<polyline points="{pts}" fill="{fill}" stroke="{color}" '
            f'stroke-width="{width}" opacity="{opacity:.2f}" />'
        )

    def circle(self, x, y, r_px, color, fill="none"):
        cx, cy = self._pt(x, y)
        self.parts.append(
            f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r_px:.2f}" '
            f'stroke="{color}" fill="{fill}" />'
        )

    def text(self, x_px, y_px, s, color="#333", size=12):
        self.parts.append(
            f'<text x="{x_px:.1f}" y="{y_px:.1f}" font-size="{size}" '
            f'fill="{color}" font-family="sans-serif">{s}</text>'
        )

    def tostring(self) -> str:
        body = "\n".join(self.parts)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w:.0f}" '
            f'height="{self.h:.0f}" viewBox="0 0 {self.w:.2f} {self.h:.2f}">\n'
            f'<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n'
        )


def render_prediction_dir(in_dir, out_dir) -> list[Path]:
    """One SVG per snapshot overlaying every exported tube found in in_dir."""
    in_dir = Path(in_dir)
    tube_dirs = sorted(d for d in in_dir.iterdir() if (d / "meta.json").exists())
    if not tube_dirs:
        raise RejectedInputError(f"no exported tubes under {in_dir}")
    tubes = [load_tube_sets(d) for d in tube_dirs]
    n_slices = min(len(t.slices) for _, t in tubes)
    grid = tubes[0][1].grid
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i in range(n_slices):
        canvas = _SvgCanvas(grid.mins, grid.maxs)
        y = 16
        for meta, tube in tubes:
            color = KIND_COLORS.get(meta["kind"], "#333333")
            for seg in zero_contours(tube.grid, tube.slices[i].values):
                canvas.polyline(seg, color)
            label = meta["kind"]
            if "delta" in meta:
                label += f' (delta={meta["delta"]:g})'
            canvas.text(8, y, label, color=color)
            y += 14
        canvas.text(8, canvas.h - 8, f"t = {tube.slices[i].time:.2f} s")
        path = out / f"snapshot_{i:04d}.svg"
        path.write_text(canvas.tostring())
        written.append(path)
    return written


def render_sim_dir(in_dir, out_dir) -> Path:
    """Trajectory plot for an exported closed-loop log."""
    in_dir = Path(in_dir)
    log_path = in_dir / "log.csv"
    if not log_path.exists():
        raise RejectedInputError(f"no log.csv under {in_dir}")
    metrics = json.loads((in_dir / "metrics.json").read_text())
    with open(log_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    hx = np.array([float(r["h_x"]) for r in rows])
    hy = np.array([float(r["h_y"]) for r in rows])
    sx = np.array([float(r["s_x"]) for r in rows])
    sy = np.array([float(r["s_y"]) for r in rows])
    pad = 0.5
    mins = (min(hx.min(), sx.min()) - pad, min(hy.min(), sy.min()) - pad)
    maxs = (max(hx.max(), sx.max()) + pad, max(hy.max(), sy.max()) + pad)
    canvas = _SvgCanvas(mins, maxs)
    canvas.polyline(np.column_stack([hx, hy]), "#222222", width=2)
    canvas.polyline(np.column_stack([sx, sy]), "#1f77b4", width=2)
    canvas.circle(hx[0], hy[0], 4, "#222222", fill="#222222")
    canvas.circle(sx[0], sy[0], 4, "#1f77b4", fill="#1f77b4")
    status = "collision" if metrics.get("collision") else "safe"
    canvas.text(8, 16, f"human (black) / robot (blue): {status}, "
                       f"min distance {metrics['min_distance']:.3f} m")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "trajectories.svg"
    path.write_text(canvas.tostring())
    return path

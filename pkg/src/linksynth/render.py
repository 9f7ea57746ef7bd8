"""SVG rendering of repertoire maps and single linkages.

Heatmap mode colors grid cells by elite fitness; path mode draws each
display cell's foot path scaled to fit, with the magnification factor
annotated in the cell's bottom-right corner.
"""
from __future__ import annotations

from typing import Union

import numpy as np

from .archive import DownsampledMap, downsample
from .evolve import Repertoire
from .fitness import scalar_score
from .kinematics import (NODE_CRANK_TIP, NODE_MOTOR, STATIC_NODE_IDS,
                         Linkage, PathTrace)

CELL_PX = 64.0
MARGIN_PX = 24.0

COLOR_MOTOR = "#f4c20d"
COLOR_STATIC = "#2ab5b5"
COLOR_MOVING = "#8e44ad"
COLOR_PATH = "#2e9e46"
COLOR_BEAM = "#6b7280"
COLOR_EMPTY = "#f3f4f6"

# dark-blue -> teal -> yellow fitness ramp
_RAMP = ((68, 1, 84), (33, 144, 140), (253, 231, 37))


def _ramp_color(t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    if t < 0.5:
        a, b, u = _RAMP[0], _RAMP[1], t * 2.0
    else:
        a, b, u = _RAMP[1], _RAMP[2], t * 2.0 - 1.0
    rgb = [round(x + (y - x) * u) for x, y in zip(a, b)]
    return f"#{rgb[0]:02x}{rgb[1]:02x}{rgb[2]:02x}"


def _fitness_colors(fitness_id: str, values: list) -> list:
    scores = np.array([scalar_score(fitness_id, v) for v in values])
    lo, hi = scores.min(), scores.max()
    span = hi - lo
    if span <= 0:
        return [_ramp_color(1.0) for _ in values]
    return [_ramp_color(float((s - lo) / span)) for s in scores]


def _svg_document(width: float, height: float, body: list) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
            f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">')
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _polyline(points: np.ndarray, color: str, stroke: float,
              closed: bool = True) -> str:
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    tag = "polygon" if closed else "polyline"
    return (f'<{tag} points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="{stroke:.2f}"/>')


def _projected_best(repertoire: Repertoire, dims: tuple) -> dict:
    """Best fitness per (dims[0], dims[1]) bin pair, other dims aggregated."""
    best = {}
    for cell, e in repertoire.cells.items():
        key = (cell[dims[0]], cell[dims[1]])
        score = scalar_score(repertoire.fitness_id, e.fitness)
        if key not in best or score > best[key][0]:
            best[key] = (score, e.fitness)
    return {k: v[1] for k, v in best.items()}


def render_map(source: Union[Repertoire, DownsampledMap], mode: str = "heatmap",
               dims: tuple = (0, 1), rows: int = 5, cols: int = 5) -> str:
    """Render a repertoire (full grid resolution) or a downsampled map as SVG.
    Path mode needs per-cell foot paths, so a repertoire is downsampled first."""
    if mode not in ("heatmap", "paths"):
        raise ValueError(f"unknown render mode {mode!r}")
    if isinstance(source, Repertoire):
        if mode == "paths":
            return render_map(downsample(source, rows, cols, dims), mode)
        return _render_grid_heatmap(source, dims)
    if mode == "heatmap":
        return _render_downsampled_heatmap(source)
    return _render_downsampled_paths(source)


def _render_grid_heatmap(repertoire: Repertoire, dims: tuple) -> str:
    nx = repertoire.grid.bins[dims[0]]
    ny = repertoire.grid.bins[dims[1]]
    px = max(600.0 / max(nx, ny), 1.0)
    best = _projected_best(repertoire, dims)
    body = [f'<rect width="{nx * px:.0f}" height="{ny * px:.0f}" fill="{COLOR_EMPTY}"/>']
    if best:
        colors = _fitness_colors(repertoire.fitness_id, list(best.values()))
        for (i, j), color in zip(best.keys(), colors):
            # y axis points up: bin 0 at the bottom row of the image
            body.append(f'<rect x="{i * px:.2f}" y="{(ny - 1 - j) * px:.2f}" '
                        f'width="{px:.2f}" height="{px:.2f}" fill="{color}"/>')
    return _svg_document(nx * px, ny * px, body)


def _cell_origin(row: int, col: int, rows: int) -> tuple:
    x = MARGIN_PX + col * CELL_PX
    y = MARGIN_PX + (rows - 1 - row) * CELL_PX
    return x, y


def _render_downsampled_heatmap(dmap: DownsampledMap) -> str:
    width = 2 * MARGIN_PX + dmap.cols * CELL_PX
    height = 2 * MARGIN_PX + dmap.rows * CELL_PX
    body = []
    cells = sorted(dmap.cells.items())
    colors = {}
    if cells:
        ramp = _fitness_colors(dmap.fitness_id, [c.fitness for _, c in cells])
        colors = {key: color for (key, _), color in zip(cells, ramp)}
    for r in range(dmap.rows):
        for c in range(dmap.cols):
            x, y = _cell_origin(r, c, dmap.rows)
            fill = colors.get((r, c), COLOR_EMPTY)
            body.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{CELL_PX:.2f}" '
                        f'height="{CELL_PX:.2f}" fill="{fill}" stroke="#ffffff"/>')
    return _svg_document(width, height, body)


def _render_downsampled_paths(dmap: DownsampledMap) -> str:
    width = 2 * MARGIN_PX + dmap.cols * CELL_PX
    height = 2 * MARGIN_PX + dmap.rows * CELL_PX
    body = []
    cells = sorted(dmap.cells.items())
    colors = {}
    if cells:
        ramp = _fitness_colors(dmap.fitness_id, [c.fitness for _, c in cells])
        colors = {key: color for (key, _), color in zip(cells, ramp)}
    pad = 6.0
    for r in range(dmap.rows):
        for c in range(dmap.cols):
            x, y = _cell_origin(r, c, dmap.rows)
            body.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{CELL_PX:.2f}" '
                        f'height="{CELL_PX:.2f}" fill="none" stroke="#d1d5db"/>')
            cell = dmap.cells.get((r, c))
            if cell is None or len(cell.foot_path) == 0:
                continue
            path = cell.foot_path
            extent = max(cell.width, cell.height)
            scale = (CELL_PX - 2 * pad) / extent if extent > 0 else 1.0
            cx = (path[:, 0].min() + path[:, 0].max()) / 2.0
            cy = (path[:, 1].min() + path[:, 1].max()) / 2.0
            px = x + CELL_PX / 2.0 + (path[:, 0] - cx) * scale
            # svg y grows downward; path y grows upward
            py = y + CELL_PX / 2.0 - (path[:, 1] - cy) * scale
            body.append(_polyline(np.column_stack([px, py]), colors[(r, c)], 1.5,
                                  closed=cell.error_count == 0))
            body.append(f'<text x="{x + CELL_PX - 3:.2f}" y="{y + CELL_PX - 3:.2f}" '
                        f'font-size="8" text-anchor="end" fill="#374151">'
                        f'{cell.scale:.2f}</text>')
    return _svg_document(width, height, body)


def render_linkage(linkage: Linkage, trace: PathTrace) -> str:
    """One linkage pose (first feasible step) with its foot path."""
    feasible_steps = np.flatnonzero(trace.feasible)
    pose_step = int(feasible_steps[0]) if len(feasible_steps) else 0
    pose = trace.node_positions[:, pose_step, :]
    finite = trace.node_positions[np.isfinite(trace.node_positions)]
    lo = float(finite.min()) if len(finite) else -100.0
    hi = float(finite.max()) if len(finite) else 100.0
    span = max(hi - lo, 1.0)
    size = 480.0
    pad = 32.0
    scale = (size - 2 * pad) / span

    def sx(v):
        return pad + (v - lo) * scale

    def sy(v):
        return size - pad - (v - lo) * scale

    body = [f'<rect width="{size:.0f}" height="{size:.0f}" fill="#ffffff"/>']
    if len(trace.foot_path):
        pts = np.column_stack([[sx(x) for x in trace.foot_path[:, 0]],
                               [sy(y) for y in trace.foot_path[:, 1]]])
        body.append(_polyline(pts, COLOR_PATH, 1.5, closed=trace.error_count == 0))
    for beam in linkage.beams:
        a, b = pose[beam.node_a], pose[beam.node_b]
        if np.isnan(a).any() or np.isnan(b).any():
            continue
        body.append(f'<line x1="{sx(a[0]):.2f}" y1="{sy(a[1]):.2f}" '
                    f'x2="{sx(b[0]):.2f}" y2="{sy(b[1]):.2f}" '
                    f'stroke="{COLOR_BEAM}" stroke-width="2.5"/>')
    for nid in range(linkage.n_nodes):
        p = pose[nid]
        if np.isnan(p).any():
            continue
        if nid == NODE_MOTOR:
            color = COLOR_MOTOR
        elif nid in STATIC_NODE_IDS:
            color = COLOR_STATIC
        else:
            color = COLOR_MOVING
        body.append(f'<circle cx="{sx(p[0]):.2f}" cy="{sy(p[1]):.2f}" r="4" '
                    f'fill="{color}"/>')
        if trace.foot_index is not None and nid == trace.foot_index:
            body.append(f'<circle cx="{sx(p[0]):.2f}" cy="{sy(p[1]):.2f}" r="7" '
                        f'fill="none" stroke="{COLOR_PATH}" stroke-width="1.5"/>')
    return _svg_document(size, size, body)

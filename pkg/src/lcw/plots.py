"""Dependency-free plot writers: SVG 1.1 scatters/paths and PGM P5 grids."""

from __future__ import annotations

import numpy as np

__all__ = ["svg_scatter", "pgm_grid"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
_SIZE = 520
_MARGIN = 20


def _bounds(groups):
    pts = np.vstack([g for g in groups if len(g)])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    pad = 0.05 * span
    return lo - pad, span + 2 * pad


def _to_px(p, lo, span):
    x = _MARGIN + (p[:, 0] - lo[0]) / span[0] * (_SIZE - 2 * _MARGIN)
    y = _SIZE - _MARGIN - (p[:, 1] - lo[1]) / span[1] * (_SIZE - 2 * _MARGIN)
    return x, y


def svg_scatter(path, groups, labels=None, lines=None, title: str = "") -> None:
    """Write 2D point groups (and optional polylines) as an SVG scatter.

    groups: list of n x 2 arrays; lines: list of k x 2 arrays drawn as
    polylines on top.
    """
    groups = [np.asarray(g, dtype=np.float64).reshape(-1, 2) for g in groups]
    lines = [np.asarray(l, dtype=np.float64).reshape(-1, 2) for l in (lines or [])]
    lo, span = _bounds(groups + lines)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_SIZE}" height="{_SIZE}" viewBox="0 0 {_SIZE} {_SIZE}">',
        f'<rect width="{_SIZE}" height="{_SIZE}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{_MARGIN}" y="15" font-size="12">{title}</text>')
    for gi, g in enumerate(groups):
        color = _COLORS[gi % len(_COLORS)]
        xs, ys = _to_px(g, lo, span)
        label = labels[gi] if labels else None
        if label:
            parts.append(f'<g id="{label}">')
        for x, y in zip(xs, ys):
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2" fill="{color}" '
                         f'fill-opacity="0.6"/>')
        if label:
            parts.append("</g>")
    for li, l in enumerate(lines):
        color = _COLORS[(li + 1) % len(_COLORS)]
        xs, ys = _to_px(l, lo, span)
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
    parts.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(parts))


def pgm_grid(path, images01: np.ndarray, side: int, per_row: int = 10) -> None:
    """Write flattened [0,1] images as one binary PGM (P5) grid, 10 per row."""
    images01 = np.asarray(images01, dtype=np.float64)
    n = images01.shape[0]
    if images01.shape[1] != side * side:
        raise ValueError("image width does not match side^2")
    rows = (n + per_row - 1) // per_row
    canvas = np.zeros((rows * side, per_row * side))
    for i in range(n):
        r, c = divmod(i, per_row)
        canvas[r * side:(r + 1) * side, c * side:(c + 1) * side] = \
            images01[i].reshape(side, side)
    pixels = np.clip(np.rint(canvas * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n255\n".encode())
        f.write(pixels.tobytes())

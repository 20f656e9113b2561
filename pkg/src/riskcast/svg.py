"""Deterministic SVG renderings: risk-grid choropleths and fit scatters.

Hand-rolled SVG so identical inputs always produce identical bytes
(plotting libraries embed timestamps and session ids).
"""
from __future__ import annotations

import numpy as np

from .forecast import _as_matrix

# diverging ramp anchors: rr=0 blue, rr=1 white, rr=3 red (display clip)
_LOW_COLOR = (33, 102, 172)
_MID_COLOR = (247, 247, 247)
_HIGH_COLOR = (178, 24, 43)
_CLIP_RR = 3.0


def _lerp(a, b, t):
    return tuple(round(x + (y - x) * t) for x, y in zip(a, b))


def rr_color(rr: float) -> str:
    """Linear diverging color for a relative-risk value clipped to [0, 3]."""
    rr = min(max(rr, 0.0), _CLIP_RR)
    if rr <= 1.0:
        rgb = _lerp(_LOW_COLOR, _MID_COLOR, rr)
    else:
        rgb = _lerp(_MID_COLOR, _HIGH_COLOR, (rr - 1.0) / (_CLIP_RR - 1.0))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def choropleth_svg(grid, title: str = "", cell_px: int = 12) -> str:
    """Grid of colored rects, row 0 at the top."""
    values = _as_matrix(grid)
    rows, cols = values.shape
    title_h = 18 if title else 0
    width = cols * cell_px
    height = rows * cell_px + title_h
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
    ]
    if title:
        parts.append(
            f'<text x="4" y="13" font-family="sans-serif" font-size="12">{title}</text>'
        )
    for r in range(rows):
        for c in range(cols):
            parts.append(
                f'<rect x="{c * cell_px}" y="{r * cell_px + title_h}" '
                f'width="{cell_px}" height="{cell_px}" fill="{rr_color(values[r, c])}"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def scatter_svg(predicted, observed, r_squared: float | None, size: int = 320) -> str:
    """Predicted-vs-observed cell scatter with the identity line."""
    pred = _as_matrix(predicted).ravel()
    obs = _as_matrix(observed).ravel()
    lo = float(min(pred.min(), obs.min()))
    hi = float(max(pred.max(), obs.max()))
    span = hi - lo if hi > lo else 1.0
    pad, plot = 24, size - 48

    def sx(v):
        return pad + (v - lo) / span * plot

    def sy(v):
        return size - pad - (v - lo) / span * plot

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect x="{pad}" y="{pad}" width="{plot}" height="{plot}" '
        f'fill="none" stroke="#888888"/>',
        f'<line x1="{sx(lo):.2f}" y1="{sy(lo):.2f}" x2="{sx(hi):.2f}" y2="{sy(hi):.2f}" '
        f'stroke="#bbbbbb"/>',
    ]
    for o, p in zip(obs, pred):
        parts.append(f'<circle cx="{sx(o):.2f}" cy="{sy(p):.2f}" r="2" '
                     f'fill="#2166ac" fill-opacity="0.6"/>')
    label = f"R^2 = {r_squared:.5f}" if r_squared is not None else "R^2 undefined"
    parts.append(
        f'<text x="{pad + 6}" y="{pad + 16}" font-family="sans-serif" '
        f'font-size="12">{label}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

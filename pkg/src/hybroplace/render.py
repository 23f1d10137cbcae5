"""Deterministic SVG 1.1 rendering: density heat under cells on the canvas.

Output is a pure function of (netlist, placement, canvas), so identical
inputs give identical bytes.  Coordinates are emitted in model units
inside the viewBox (rounded to 2 decimals via shortest round-trip
formatting); the y axis is flipped so the canvas origin sits bottom-left
as in placement convention.
"""

from __future__ import annotations

import numpy as np

from .density import build_density
from .model import Canvas, Netlist, Placement
from .textfmt import dec

_HEAT_LOW = (255, 255, 255)
_HEAT_HIGH = (178, 34, 34)


def _fmt(v: float) -> str:
    return dec(round(float(v), 2))


def _heat_color(v: float) -> str:
    r = round(_HEAT_LOW[0] + (_HEAT_HIGH[0] - _HEAT_LOW[0]) * v)
    g = round(_HEAT_LOW[1] + (_HEAT_HIGH[1] - _HEAT_LOW[1]) * v)
    b = round(_HEAT_LOW[2] + (_HEAT_HIGH[2] - _HEAT_LOW[2]) * v)
    return f"rgb({r},{g},{b})"


def render_svg(netlist: Netlist, placement: Placement, canvas: Canvas,
               width_px: int = 900) -> str:
    """Render the placement as an SVG document string."""
    pad = 0.02 * max(canvas.width, canvas.height)
    vw = canvas.width + 2 * pad
    vh = canvas.height + 2 * pad
    height_px = max(1, round(width_px * vh / vw))

    def rect(x: float, y: float, w: float, h: float, extra: str = "",
             indent: str = "    ") -> str:
        sx = x - canvas.xl + pad
        sy = (canvas.yh - (y + h)) + pad
        attrs = f'x="{_fmt(sx)}" y="{_fmt(sy)}" width="{_fmt(w)}" height="{_fmt(h)}"'
        return f"{indent}<rect {attrs}{extra}/>"

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width_px}" height="{height_px}" '
        f'viewBox="0 0 {_fmt(vw)} {_fmt(vh)}">',
    ]

    grid = build_density(netlist, placement, canvas)
    heat = []
    for gx in range(canvas.grid_nx):
        for gy in range(canvas.grid_ny):
            usage = grid.usage[gx, gy]
            if usage <= 0.0:
                continue
            cap = grid.capacity[gx, gy]
            ratio = usage / cap if cap > 0 else 2.0
            v = min(ratio, 1.5) / 1.5
            heat.append(rect(canvas.xl + gx * canvas.bin_w,
                             canvas.yl + gy * canvas.bin_h,
                             canvas.bin_w, canvas.bin_h,
                             f' fill="{_heat_color(v)}"'))
    if heat:
        lines.append('  <g stroke="none">')
        lines.extend(heat)
        lines.append("  </g>")

    groups = (
        ("std", np.flatnonzero(netlist.movable_mask & ~netlist.macro_mask),
         ' fill="#4878cf" fill-opacity="0.45" stroke="none"'),
        ("fixed", np.flatnonzero(~netlist.movable_mask),
         ' fill="#3a3a3a" fill-opacity="0.85" stroke="none"'),
        ("macro", np.flatnonzero(netlist.movable_mask & netlist.macro_mask),
         f' fill="#e8a33d" fill-opacity="0.35" stroke="#7a4b00"'
         f' stroke-width="{_fmt(0.003 * max(vw, vh))}"'),
    )
    for name, ids, style in groups:
        if ids.size == 0:
            continue
        lines.append(f'  <g id="{name}">')
        for c in ids:
            lines.append(rect(placement.xy[c, 0], placement.xy[c, 1],
                              netlist.widths[c], netlist.heights[c], style))
        lines.append("  </g>")

    lines.append(rect(canvas.xl, canvas.yl, canvas.width, canvas.height,
                      f' fill="none" stroke="#222222"'
                      f' stroke-width="{_fmt(0.004 * max(vw, vh))}"',
                      indent="  "))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"

"""Independent reference implementations the tests compare the package against.

Everything here favors clarity over speed: plain Python loops, no shared
code with the package kernels beyond the data model.
"""

from __future__ import annotations

import math

import numpy as np

from hybroplace.model import Canvas, Netlist, Placement


def naive_hpwl(netlist: Netlist, placement: Placement) -> float:
    """Total HPWL by walking every net and pin explicitly."""
    total = 0.0
    for net in netlist.nets:
        xs = [placement.xy[p.cell, 0] + p.dx for p in net.pins]
        ys = [placement.xy[p.cell, 1] + p.dy for p in net.pins]
        total += (max(xs) - min(xs)) + (max(ys) - min(ys))
    return total


def naive_wa_extent(coords, gamma: float) -> float:
    """Smoothed extent of one axis of one net, scalar arithmetic only."""
    xs = [float(c) for c in coords]
    hi = max(xs)
    lo = min(xs)
    ep = [math.exp((x - hi) / gamma) for x in xs]
    em = [math.exp((lo - x) / gamma) for x in xs]
    upper = sum(x * e for x, e in zip(xs, ep)) / sum(ep)
    lower = sum(x * e for x, e in zip(xs, em)) / sum(em)
    return upper - lower


def naive_wa_total(netlist: Netlist, placement: Placement, gamma: float) -> float:
    total = 0.0
    for net in netlist.nets:
        xs = [placement.xy[p.cell, 0] + p.dx for p in net.pins]
        ys = [placement.xy[p.cell, 1] + p.dy for p in net.pins]
        total += naive_wa_extent(xs, gamma) + naive_wa_extent(ys, gamma)
    return total


def central_diff(f, placement: Placement, cell: int, axis: int, h: float) -> float:
    """Central finite difference of a placement functional in one coordinate."""
    plus = placement.copy()
    plus.xy[cell, axis] += h
    minus = placement.copy()
    minus.xy[cell, axis] -= h
    return (f(plus) - f(minus)) / (2.0 * h)


def naive_usage(netlist: Netlist, placement: Placement, canvas: Canvas,
                movable: np.ndarray | None = None) -> np.ndarray:
    """Per-bin deposited area with the same footprint smoothing, via loops."""
    if movable is None:
        movable = netlist.movable_mask
    bw, bh = canvas.bin_w, canvas.bin_h
    usage = np.zeros((canvas.grid_nx, canvas.grid_ny))
    for i in np.flatnonzero(movable):
        w = netlist.widths[i]
        h = netlist.heights[i]
        wx = w if w >= bw else math.sqrt(bw * w)
        hy = h if h >= bh else math.sqrt(bh * h)
        scale = (w / wx) * (h / hy)
        ax = placement.xy[i, 0] + w / 2.0 - wx / 2.0
        ay = placement.xy[i, 1] + h / 2.0 - hy / 2.0
        ax = min(max(ax, canvas.xl), canvas.xh - wx)
        ay = min(max(ay, canvas.yl), canvas.yh - hy)
        for gx in range(canvas.grid_nx):
            lo_x = canvas.xl + gx * bw
            ov_x = min(ax + wx, lo_x + bw) - max(ax, lo_x)
            if ov_x <= 0:
                continue
            for gy in range(canvas.grid_ny):
                lo_y = canvas.yl + gy * bh
                ov_y = min(ay + hy, lo_y + bh) - max(ay, lo_y)
                if ov_y > 0:
                    usage[gx, gy] += scale * ov_x * ov_y
    return usage


def naive_penalty(usage: np.ndarray, capacity: np.ndarray, target: float) -> float:
    """Quadratic overfill penalty computed bin by bin."""
    total = 0.0
    for gx in range(usage.shape[0]):
        for gy in range(usage.shape[1]):
            if capacity[gx, gy] > 0:
                excess = usage[gx, gy] / capacity[gx, gy] - target
                if excess > 0:
                    total += excess * excess
    return total


def naive_wiremask(netlist: Netlist, placement: Placement, canvas: Canvas,
                   macro: int) -> np.ndarray:
    """HPWL-increment mask by literally re-placing the macro at every grid cell."""
    w = netlist.widths[macro]
    h = netlist.heights[macro]
    nets = netlist.nets_of_cell(macro)
    mask = np.zeros((canvas.grid_nx, canvas.grid_ny))
    for gx in range(canvas.grid_nx):
        x = min(max(canvas.xl + gx * canvas.bin_w, canvas.xl), canvas.xh - w)
        for gy in range(canvas.grid_ny):
            y = min(max(canvas.yl + gy * canvas.bin_h, canvas.yl), canvas.yh - h)
            trial = placement.copy()
            trial.xy[macro] = (x, y)
            total = 0.0
            for e in nets:
                net = netlist.nets[int(e)]
                xs = [trial.xy[p.cell, 0] + p.dx for p in net.pins]
                ys = [trial.xy[p.cell, 1] + p.dy for p in net.pins]
                total += (max(xs) - min(xs)) + (max(ys) - min(ys))
                ox = [placement.xy[p.cell, 0] + p.dx for p in net.pins if p.cell != macro]
                oy = [placement.xy[p.cell, 1] + p.dy for p in net.pins if p.cell != macro]
                if ox:
                    total -= (max(ox) - min(ox)) + (max(oy) - min(oy))
            mask[gx, gy] = total
    return mask


def random_instance(rng: np.random.Generator, n_cells: int, n_nets: int,
                    n_fixed: int = 0, with_offsets: bool = True,
                    coord_scale: float = 100.0):
    """A random netlist/placement pair for property tests."""
    from hybroplace.model import Cell, CellKind, Net, Pin

    cells = []
    for i in range(n_cells):
        fixed = i >= n_cells - n_fixed
        cells.append(Cell(i, f"c{i}",
                          float(rng.uniform(1.0, 8.0)),
                          float(rng.uniform(1.0, 8.0)),
                          CellKind.FIXED if fixed else CellKind.MOVABLE))
    nets = []
    for j in range(n_nets):
        deg = int(rng.integers(2, 6))
        members = rng.integers(0, n_cells, size=deg)
        pins = []
        for c in members:
            if with_offsets:
                pins.append(Pin(int(c), float(rng.uniform(0, cells[c].width)),
                                float(rng.uniform(0, cells[c].height))))
            else:
                pins.append(Pin(int(c), cells[c].width / 2.0, cells[c].height / 2.0))
        nets.append(Net(j, tuple(pins)))
    netlist = Netlist(cells, nets)
    placement = Placement(rng.uniform(0.0, coord_scale, size=(n_cells, 2)))
    return netlist, placement

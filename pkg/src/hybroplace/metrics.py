"""Exact placement metrics: per-net HPWL, totals, and macro-only HPWL.

Totals use math.fsum over the per-net values in ascending net order, so
results are reproducible and immune to cancellation even when net lengths
span many orders of magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .model import Net, Netlist, Placement, pin_coords

MacroHpwlMode = Literal["macro_pins", "full_nets"]


@dataclass(frozen=True)
class HpwlReport:
    total: float
    per_net: np.ndarray
    macro_total: float


def net_extents(netlist: Netlist, placement: Placement) -> tuple[np.ndarray, np.ndarray]:
    """Per-net bounding-box width and height over pin positions."""
    px, py = pin_coords(netlist, placement)
    starts = netlist.net_start[:-1]
    ext_x = np.maximum.reduceat(px, starts) - np.minimum.reduceat(px, starts)
    ext_y = np.maximum.reduceat(py, starts) - np.minimum.reduceat(py, starts)
    return ext_x, ext_y


def hpwl_net(netlist: Netlist, placement: Placement, net: Net | int) -> float:
    """Half-perimeter wirelength of one net: bbox width plus bbox height."""
    if isinstance(net, Net):
        net = net.id
    lo, hi = netlist.net_start[net], netlist.net_start[net + 1]
    cells = netlist.pin_cell[lo:hi]
    px = placement.x[cells] + netlist.pin_dx[lo:hi]
    py = placement.y[cells] + netlist.pin_dy[lo:hi]
    return float((px.max() - px.min()) + (py.max() - py.min()))


def hpwl_total(netlist: Netlist, placement: Placement,
               macro_mode: MacroHpwlMode = "macro_pins") -> HpwlReport:
    """Every net's HPWL plus the compensated total and macro-only total."""
    if netlist.n_nets == 0:
        return HpwlReport(0.0, np.zeros(0), 0.0)
    ext_x, ext_y = net_extents(netlist, placement)
    per_net = ext_x + ext_y
    total = math.fsum(per_net)
    return HpwlReport(total, per_net, macro_hpwl(netlist, placement, macro_mode))


def macro_hpwl(netlist: Netlist, placement: Placement,
               mode: MacroHpwlMode = "macro_pins") -> float:
    """HPWL of the macro-induced sub-netlist.

    "macro_pins" (default) restricts each net to its pins on macro or fixed
    cells and drops nets left with fewer than two pins.  "full_nets" keeps
    every pin of any net that touches a macro.  Returns 0 when the design
    has no macros.
    """
    if not bool(netlist.macro_mask.any()) or netlist.n_nets == 0:
        return 0.0
    px, py = pin_coords(netlist, placement)
    starts = netlist.net_start[:-1]
    if mode == "macro_pins":
        keep = netlist.macro_mask[netlist.pin_cell] | ~netlist.movable_mask[netlist.pin_cell]
        kept_per_net = np.add.reduceat(keep.astype(np.int64), starts)
        live = kept_per_net >= 2
        if not live.any():
            return 0.0
        big = np.where(keep, px, -np.inf)
        small = np.where(keep, px, np.inf)
        ext_x = np.maximum.reduceat(big, starts) - np.minimum.reduceat(small, starts)
        big = np.where(keep, py, -np.inf)
        small = np.where(keep, py, np.inf)
        ext_y = np.maximum.reduceat(big, starts) - np.minimum.reduceat(small, starts)
        per_net = np.where(live, ext_x + ext_y, 0.0)
    elif mode == "full_nets":
        on_macro = netlist.macro_mask[netlist.pin_cell]
        live = np.add.reduceat(on_macro.astype(np.int64), starts) >= 1
        if not live.any():
            return 0.0
        ext_x = np.maximum.reduceat(px, starts) - np.minimum.reduceat(px, starts)
        ext_y = np.maximum.reduceat(py, starts) - np.minimum.reduceat(py, starts)
        per_net = np.where(live, ext_x + ext_y, 0.0)
    else:
        raise ValueError(f"unknown macro HPWL mode {mode!r}")
    return math.fsum(per_net)

"""Weighted-average smoothed wirelength and its analytic gradient.

Per net and axis the smoothed extent is

    sum(x_i * exp(x_i / gamma)) / sum(exp(x_i / gamma))
  - sum(x_i * exp(-x_i / gamma)) / sum(exp(-x_i / gamma))

which approaches the exact bbox extent from below as gamma shrinks.  Both
softmax-style ratios are evaluated after shifting the exponents by the
per-net max (or min), which leaves the ratios unchanged and keeps exp()
finite at chip-scale coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Netlist, Placement, pin_coords


class NonPositiveGamma(ValueError):
    """The smoothing coefficient must be strictly positive."""


@dataclass(frozen=True)
class WaParams:
    gamma: float

    def __post_init__(self):
        if not (self.gamma > 0.0):
            raise NonPositiveGamma(f"gamma must be > 0, got {self.gamma}")


@dataclass
class Gradient:
    """Objective slope per cell; fixed-cell entries are zero."""

    d_x: np.ndarray
    d_y: np.ndarray


@dataclass
class WaEval:
    """One forward/backward pass: smoothed total, gradient, exact HPWL for free."""

    wa: float
    grad: Gradient | None
    hpwl: float


def wa_net(coords: np.ndarray, gamma: float) -> float:
    """Smoothed extent of one net along one axis."""
    if not (gamma > 0.0):
        raise NonPositiveGamma(f"gamma must be > 0, got {gamma}")
    xs = np.asarray(coords, dtype=np.float64)
    ep = np.exp((xs - xs.max()) / gamma)
    em = np.exp((xs.min() - xs) / gamma)
    return float(np.sum(xs * ep) / np.sum(ep) - np.sum(xs * em) / np.sum(em))


def _axis(vals: np.ndarray, netlist: Netlist, gamma: float, want_grad: bool):
    """Per-net smoothed extents, per-pin gradient, and exact extents for one axis."""
    starts = netlist.net_start[:-1]
    pn = netlist.pin_net
    mx = np.maximum.reduceat(vals, starts)
    mn = np.minimum.reduceat(vals, starts)
    ep = np.exp((vals - mx[pn]) / gamma)
    em = np.exp((mn[pn] - vals) / gamma)
    sp = np.add.reduceat(ep, starts)
    sm = np.add.reduceat(em, starts)
    wp = np.add.reduceat(vals * ep, starts)
    wm = np.add.reduceat(vals * em, starts)
    wa_hi = wp / sp
    wa_lo = wm / sm
    per_net = wa_hi - wa_lo
    exact = mx - mn
    if not want_grad:
        return per_net, None, exact
    pin_grad = (ep / sp[pn]) * (1.0 + (vals - wa_hi[pn]) / gamma) \
        - (em / sm[pn]) * (1.0 - (vals - wa_lo[pn]) / gamma)
    return per_net, pin_grad, exact


def wa_eval(netlist: Netlist, placement: Placement, params: WaParams,
            want_grad: bool = True) -> WaEval:
    """Smoothed total wirelength with gradient, plus exact HPWL from the same pass."""
    if netlist.n_nets == 0:
        grad = None
        if want_grad:
            grad = Gradient(np.zeros(netlist.n_cells), np.zeros(netlist.n_cells))
        return WaEval(0.0, grad, 0.0)
    px, py = pin_coords(netlist, placement)
    wx, gx, ex = _axis(px, netlist, params.gamma, want_grad)
    wy, gy, ey = _axis(py, netlist, params.gamma, want_grad)
    wa = math.fsum(wx + wy)
    hpwl = math.fsum(ex + ey)
    grad = None
    if want_grad:
        n = netlist.n_cells
        d_x = np.bincount(netlist.pin_cell, weights=gx, minlength=n)
        d_y = np.bincount(netlist.pin_cell, weights=gy, minlength=n)
        d_x[~netlist.movable_mask] = 0.0
        d_y[~netlist.movable_mask] = 0.0
        grad = Gradient(d_x, d_y)
    return WaEval(wa, grad, hpwl)


def wa_total(netlist: Netlist, placement: Placement, params: WaParams) -> float:
    """Smoothed wirelength summed over nets and both axes, fixed net order."""
    return wa_eval(netlist, placement, params, want_grad=False).wa


def wa_gradient(netlist: Netlist, placement: Placement, params: WaParams) -> Gradient:
    """Analytic d(total smoothed wirelength)/d(cell position)."""
    return wa_eval(netlist, placement, params, want_grad=True).grad

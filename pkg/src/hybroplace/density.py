"""Bin-overflow density penalty with analytic gradient, plus the hard overflow metric.

The canvas is tiled by a uniform grid.  Movable-cell area is deposited
into bins by exact rectangle overlap of a smoothed footprint: a cell
narrower than a bin along an axis is widened to sqrt(bin * cell) on that
axis and its contribution rescaled so total area is preserved.  The
widened footprint is slid back inside the canvas when it would overhang,
which keeps deposited area equal to movable area for any legal placement.

The penalty is sum over bins of max(0, usage/capacity - target)^2, where
capacity is bin area minus fixed-cell overlap; it is piecewise smooth in
the cell coordinates with kinks only on the measure-zero set of positions
where a footprint edge meets a bin boundary.  Capacity is floored at a
small fraction of the bin area so that fully blocked bins stay visible
to the penalty: a movable cell stranded on top of a blockage sees an
enormous excess there and is driven toward free space, instead of
sitting in a bin the penalty ignores.

Cells are bucketed by footprint span so the scatter cost tracks each
bucket's own span: cells touching at most 2 (then 4) bins per axis go
through vectorised per-bin-pair loops, while wider cells (macros on fine
grids) are handled one at a time with dense sub-grid blocks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Canvas, Netlist, Placement
from .wirelength import Gradient

_PAIR_SPANS = (2, 4)  # span buckets served by the per-bin-pair loops
_CAP_FLOOR = 0.01     # minimum capacity as a fraction of bin area


@dataclass
class DensityGrid:
    canvas: Canvas
    bin_w: float
    bin_h: float
    usage: np.ndarray      # (nx, ny) deposited movable area
    capacity: np.ndarray   # (nx, ny) free area per bin
    movable_area: float


def _profiles(a: np.ndarray, ext: np.ndarray, origin: float, bsize: float,
              nbins: int, want_grad: bool):
    """Per-interval overlap with every touched bin.

    Returns (k, ov, dov, valid) arrays of shape (n, K): bin index, overlap
    length, d(overlap)/d(a), and validity mask.  K covers the widest
    interval in the batch.
    """
    if a.size == 0:
        z = np.zeros((0, 1))
        return z.astype(np.int64), z, (z if want_grad else None), z.astype(bool)
    K = int(np.ceil(ext.max() / bsize)) + 1
    k0 = np.floor((a - origin) / bsize).astype(np.int64)
    k = k0[:, None] + np.arange(K, dtype=np.int64)[None, :]
    lo = origin + k * bsize
    hi = lo + bsize
    left = np.maximum(a[:, None], lo)
    right = np.minimum((a + ext)[:, None], hi)
    ov = np.clip(right - left, 0.0, None)
    valid = (k >= 0) & (k < nbins) & (ov > 0.0)
    dov = None
    if want_grad:
        dov = np.where(ov > 0.0,
                       ((a + ext)[:, None] < hi).astype(np.float64)
                       - (a[:, None] > lo).astype(np.float64),
                       0.0)
    return k, ov, dov, valid


def _profile_1d(a: float, ext: float, origin: float, bsize: float,
                nbins: int, want_grad: bool):
    """Overlap profile of a single interval: (first bin, ov, dov) over its span."""
    k_lo = max(0, int(np.floor((a - origin) / bsize)))
    k_hi = min(nbins - 1, int(np.floor((a + ext - origin) / bsize)))
    kk = np.arange(k_lo, k_hi + 1)
    lo = origin + kk * bsize
    hi = lo + bsize
    ov = np.clip(np.minimum(a + ext, hi) - np.maximum(a, lo), 0.0, None)
    dov = None
    if want_grad:
        dov = np.where(ov > 0.0,
                       (a + ext < hi).astype(np.float64) - (a > lo).astype(np.float64),
                       0.0)
    return k_lo, ov, dov


@dataclass
class _Batch:
    """Overlap profiles for one span bucket of the movable cells."""

    sel: np.ndarray  # indices into the movable-cell arrays
    kx: np.ndarray
    ox: np.ndarray
    dox: np.ndarray | None
    vx: np.ndarray
    ky: np.ndarray
    oy: np.ndarray
    doy: np.ndarray | None
    vy: np.ndarray


@dataclass
class _CellProfile:
    """Overlap profile for one wide cell, handled with dense sub-grid blocks."""

    pos: int  # index into the movable-cell arrays
    kx0: int
    ox: np.ndarray
    dox: np.ndarray | None
    ky0: int
    oy: np.ndarray
    doy: np.ndarray | None


class _Footprints:
    """Smoothed movable footprints and their bin-overlap profiles."""

    def __init__(self, netlist: Netlist, placement: Placement, canvas: Canvas,
                 want_grad: bool, movable: np.ndarray | None = None):
        if movable is None:
            movable = netlist.movable_mask
        self.ids = np.flatnonzero(movable)
        w = netlist.widths[self.ids]
        h = netlist.heights[self.ids]
        bw, bh = canvas.bin_w, canvas.bin_h
        self.wx = np.where(w >= bw, w, np.sqrt(bw * w))
        self.hy = np.where(h >= bh, h, np.sqrt(bh * h))
        self.scale = (w / self.wx) * (h / self.hy)
        cx = placement.x[self.ids] + w / 2.0
        cy = placement.y[self.ids] + h / 2.0
        tx = cx - self.wx / 2.0
        ty = cy - self.hy / 2.0
        self.ax = np.clip(tx, canvas.xl, canvas.xh - self.wx)
        self.ay = np.clip(ty, canvas.yl, canvas.yh - self.hy)
        self.free_x = self.free_y = None
        if want_grad:
            self.free_x = ((tx > canvas.xl) & (tx < canvas.xh - self.wx)).astype(np.float64)
            self.free_y = ((ty > canvas.yl) & (ty < canvas.yh - self.hy)).astype(np.float64)
        span_x = np.ceil(self.wx / bw).astype(np.int64) + 1
        span_y = np.ceil(self.hy / bh).astype(np.int64) + 1
        span = np.maximum(span_x, span_y)
        self.batches: list[_Batch] = []
        done = np.zeros(self.ids.size, dtype=bool)
        for cap in _PAIR_SPANS:
            sel = np.flatnonzero(~done & (span <= cap))
            done[sel] = True
            if sel.size == 0:
                continue
            kx, ox, dox, vx = _profiles(self.ax[sel], self.wx[sel],
                                        canvas.xl, bw, canvas.grid_nx, want_grad)
            ky, oy, doy, vy = _profiles(self.ay[sel], self.hy[sel],
                                        canvas.yl, bh, canvas.grid_ny, want_grad)
            self.batches.append(_Batch(sel, kx, ox, dox, vx, ky, oy, doy, vy))
        self.wide: list[_CellProfile] = []
        for pos in np.flatnonzero(~done):
            kx0, ox, dox = _profile_1d(self.ax[pos], self.wx[pos], canvas.xl,
                                       bw, canvas.grid_nx, want_grad)
            ky0, oy, doy = _profile_1d(self.ay[pos], self.hy[pos], canvas.yl,
                                       bh, canvas.grid_ny, want_grad)
            self.wide.append(_CellProfile(int(pos), kx0, ox, dox, ky0, oy, doy))

    def deposit(self, nx: int, ny: int) -> np.ndarray:
        """Accumulate scale-weighted overlap products into an (nx, ny) grid."""
        flats = []
        wts = []
        for b in self.batches:
            vm = b.vx[:, :, None] & b.vy[:, None, :]
            flat = b.kx[:, :, None] * ny + b.ky[:, None, :]
            prod = (b.ox[:, :, None] * b.oy[:, None, :]
                    * self.scale[b.sel, None, None])
            flats.append(flat[vm])
            wts.append(prod[vm])
        if flats:
            usage = np.bincount(np.concatenate(flats),
                                weights=np.concatenate(wts),
                                minlength=nx * ny).reshape(nx, ny)
        else:
            usage = np.zeros((nx, ny))
        for c in self.wide:
            usage[c.kx0:c.kx0 + c.ox.size, c.ky0:c.ky0 + c.oy.size] += (
                self.scale[c.pos] * np.outer(c.ox, c.oy))
        return usage


def compute_capacity(netlist: Netlist, placement: Placement, canvas: Canvas,
                     movable: np.ndarray | None = None) -> np.ndarray:
    """Free area per bin: bin area minus exact fixed-cell overlap.

    movable overrides which cells count as movable; anything outside the
    mask (for example macros frozen for one descent) blocks capacity.
    The result is floored at a small fraction of the bin area so blocked
    bins still participate in the penalty (see module docstring).
    """
    if movable is None:
        movable = netlist.movable_mask
    nx, ny = canvas.grid_nx, canvas.grid_ny
    fixed = np.flatnonzero(~movable)
    cap = np.full((nx, ny), canvas.bin_w * canvas.bin_h)
    for i in fixed:
        kx0, ox, _ = _profile_1d(placement.x[i], netlist.widths[i],
                                 canvas.xl, canvas.bin_w, nx, False)
        ky0, oy, _ = _profile_1d(placement.y[i], netlist.heights[i],
                                 canvas.yl, canvas.bin_h, ny, False)
        cap[kx0:kx0 + ox.size, ky0:ky0 + oy.size] -= np.outer(ox, oy)
    return np.clip(cap, _CAP_FLOOR * canvas.bin_w * canvas.bin_h, None)


def usage_of(netlist: Netlist, placement: Placement, canvas: Canvas,
             movable: np.ndarray | None = None) -> np.ndarray:
    """Deposited area per bin for the given cells, without capacity bookkeeping."""
    fp = _Footprints(netlist, placement, canvas, want_grad=False, movable=movable)
    return fp.deposit(canvas.grid_nx, canvas.grid_ny)


def build_density(netlist: Netlist, placement: Placement, canvas: Canvas,
                  capacity: np.ndarray | None = None,
                  movable: np.ndarray | None = None) -> DensityGrid:
    """Deposit movable area into bins; capacity may be passed to skip recomputation."""
    nx, ny = canvas.grid_nx, canvas.grid_ny
    fp = _Footprints(netlist, placement, canvas, want_grad=False, movable=movable)
    usage = fp.deposit(nx, ny)
    if capacity is None:
        capacity = compute_capacity(netlist, placement, canvas, movable)
    area = float(np.sum(netlist.widths[fp.ids] * netlist.heights[fp.ids]))
    return DensityGrid(canvas, canvas.bin_w, canvas.bin_h, usage, capacity, area)


def _excess(grid: DensityGrid, target: float) -> np.ndarray:
    """Per-bin max(0, usage/capacity - target); zero where capacity is zero."""
    out = np.zeros_like(grid.usage)
    pos = grid.capacity > 0.0
    out[pos] = np.clip(grid.usage[pos] / grid.capacity[pos] - target, 0.0, None)
    return out


def density_penalty(grid: DensityGrid, target: float) -> float:
    """Quadratic overfill penalty over bins with free capacity."""
    if not (0.0 < target <= 1.0):
        raise ValueError(f"target density must be in (0, 1], got {target}")
    return float(np.sum(_excess(grid, target) ** 2))


def overflow(grid: DensityGrid, target: float) -> float:
    """Fraction of movable area sitting above the per-bin target capacity."""
    if grid.movable_area <= 0.0:
        return 0.0
    over = np.clip(grid.usage - target * grid.capacity, 0.0, None)
    return float(np.sum(over) / grid.movable_area)


def density_gradient(netlist: Netlist, placement: Placement, grid: DensityGrid,
                     target: float, movable: np.ndarray | None = None) -> Gradient:
    """Analytic gradient of density_penalty for the placement the grid was built from."""
    fp = _Footprints(netlist, placement, grid.canvas, want_grad=True, movable=movable)
    return _gradient_from(netlist, fp, grid, target)


def _gradient_from(netlist: Netlist, fp: _Footprints, grid: DensityGrid,
                   target: float, excess: np.ndarray | None = None) -> Gradient:
    if excess is None:
        excess = _excess(grid, target)
    coef = np.zeros_like(grid.usage)
    pos = grid.capacity > 0.0
    coef[pos] = 2.0 * excess[pos] / grid.capacity[pos]
    ny = grid.usage.shape[1]
    flat_coef = coef.ravel()
    gx = np.zeros(fp.ids.size)
    gy = np.zeros(fp.ids.size)
    for b in fp.batches:
        vm = b.vx[:, :, None] & b.vy[:, None, :]
        flat = np.where(vm, b.kx[:, :, None] * ny + b.ky[:, None, :], 0)
        c = flat_coef[flat] * vm
        gx[b.sel] = np.einsum("njl,nj,nl->n", c, b.dox, b.oy)
        gy[b.sel] = np.einsum("njl,nj,nl->n", c, b.ox, b.doy)
    for c in fp.wide:
        sub = coef[c.kx0:c.kx0 + c.ox.size, c.ky0:c.ky0 + c.oy.size]
        gx[c.pos] = c.dox @ sub @ c.oy
        gy[c.pos] = c.ox @ sub @ c.doy
    gx *= fp.scale * fp.free_x
    gy *= fp.scale * fp.free_y
    d_x = np.zeros(netlist.n_cells)
    d_y = np.zeros(netlist.n_cells)
    d_x[fp.ids] = gx
    d_y[fp.ids] = gy
    return Gradient(d_x, d_y)


def density_eval(netlist: Netlist, placement: Placement, canvas: Canvas, target: float,
                 capacity: np.ndarray | None = None,
                 movable: np.ndarray | None = None):
    """Fused pass for the descent loop: (grid, penalty, gradient, overflow)."""
    nx, ny = canvas.grid_nx, canvas.grid_ny
    fp = _Footprints(netlist, placement, canvas, want_grad=True, movable=movable)
    usage = fp.deposit(nx, ny)
    if capacity is None:
        capacity = compute_capacity(netlist, placement, canvas, movable)
    area = float(np.sum(netlist.widths[fp.ids] * netlist.heights[fp.ids]))
    grid = DensityGrid(canvas, canvas.bin_w, canvas.bin_h, usage, capacity, area)
    if not (0.0 < target <= 1.0):
        raise ValueError(f"target density must be in (0, 1], got {target}")
    exc = _excess(grid, target)
    pen = float(np.sum(exc ** 2))
    grad = _gradient_from(netlist, fp, grid, target, excess=exc)
    return grid, pen, grad, overflow(grid, target)

"""Perturbations applied between descents: position shuffles and greedy macro moves.

shuffle permutes the positions of a random subset of macros (or of all
movable cells) — a pure permutation, so the position multiset of the
selected scope is preserved; any resulting overhang is resolved by the
clamp at the next descent's entry.  wiremask_adjust walks macros in
descending area order and snaps each to the feasible grid cell with the
least total HPWL increment over its incident nets.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .density import usage_of
from .model import Canvas, Netlist, Placement, clamp_to_canvas, pin_coords


class NoFeasibleCell(UserWarning):
    """Every grid cell for a macro was blocked; it stays where it was."""

    def __init__(self, cell_id: int, name: str):
        super().__init__(f"no feasible grid cell for macro {name!r} (id {cell_id}); "
                         "leaving it in place")
        self.cell_id = cell_id


def _selection_count(p: float, m: int) -> int:
    """ceil of p% of m, with a round to absorb binary-fraction dust."""
    return int(math.ceil(round(p * m / 100.0, 6)))


def shuffle(placement: Placement, netlist: Netlist, p: float = 50.0,
            seed: int = 0, scope: str = "macros") -> Placement:
    """Permute the positions of ceil(p% * m) cells drawn from the scope.

    scope="macros" permutes among movable macros (input returned unchanged
    when there are fewer than two); scope="all" permutes among all movable
    cells.  Unselected cells and fixed cells are untouched.
    """
    if not 0 < p <= 100:
        raise ValueError(f"p must be in (0, 100], got {p}")
    if scope == "macros":
        ids = np.flatnonzero(netlist.movable_mask & netlist.macro_mask)
    elif scope == "all":
        ids = np.flatnonzero(netlist.movable_mask)
    else:
        raise ValueError(f"scope must be 'macros' or 'all', got {scope!r}")
    out = placement.copy()
    if ids.size < 2:
        return out
    rng = np.random.Generator(np.random.PCG64(seed))
    k = _selection_count(p, ids.size)
    chosen = rng.choice(ids, size=k, replace=False)
    perm = rng.permutation(k)
    out.xy[chosen] = out.xy[chosen[perm]]
    return out


def _incident_spans(netlist: Netlist, placement: Placement, macro: int):
    """Per incident net: other-pin bbox and the macro's own pin-offset extents.

    Returns arrays (other_lo_x, other_hi_x, other_lo_y, other_hi_y,
    own_min_dx, own_max_dx, own_min_dy, own_max_dy, has_others); empty
    other-bboxes are flagged so their baseline span counts as zero.
    """
    nets = netlist.nets_of_cell(macro)
    px, py = pin_coords(netlist, placement)
    n = nets.size
    o_lo_x = np.empty(n); o_hi_x = np.empty(n)
    o_lo_y = np.empty(n); o_hi_y = np.empty(n)
    mn_dx = np.empty(n); mx_dx = np.empty(n)
    mn_dy = np.empty(n); mx_dy = np.empty(n)
    has = np.empty(n, dtype=bool)
    for i, e in enumerate(nets):
        s, t = netlist.net_start[e], netlist.net_start[e + 1]
        own = netlist.pin_cell[s:t] == macro
        mn_dx[i] = netlist.pin_dx[s:t][own].min()
        mx_dx[i] = netlist.pin_dx[s:t][own].max()
        mn_dy[i] = netlist.pin_dy[s:t][own].min()
        mx_dy[i] = netlist.pin_dy[s:t][own].max()
        other = ~own
        has[i] = other.any()
        if has[i]:
            o_lo_x[i] = px[s:t][other].min()
            o_hi_x[i] = px[s:t][other].max()
            o_lo_y[i] = py[s:t][other].min()
            o_hi_y[i] = py[s:t][other].max()
        else:
            o_lo_x[i] = o_hi_x[i] = o_lo_y[i] = o_hi_y[i] = 0.0
    return o_lo_x, o_hi_x, o_lo_y, o_hi_y, mn_dx, mx_dx, mn_dy, mx_dy, has


def _candidate_coords(canvas: Canvas, w: float, h: float):
    """Clamped lower-left coordinates for every grid cell."""
    xs = np.clip(canvas.xl + np.arange(canvas.grid_nx) * canvas.bin_w,
                 canvas.xl, canvas.xh - w)
    ys = np.clip(canvas.yl + np.arange(canvas.grid_ny) * canvas.bin_h,
                 canvas.yl, canvas.yh - h)
    return xs, ys


def _axis_increment(cand: np.ndarray, o_lo, o_hi, mn_d, mx_d, has) -> np.ndarray:
    """Summed per-net HPWL increment along one axis for each candidate coordinate."""
    c_lo = cand[None, :] + mn_d[:, None]
    c_hi = cand[None, :] + mx_d[:, None]
    span_new = (np.maximum(o_hi[:, None], c_hi) - np.minimum(o_lo[:, None], c_lo))
    span_old = (o_hi - o_lo)[:, None]
    own_only = (c_hi - c_lo)
    inc = np.where(has[:, None], span_new - span_old, own_only)
    return inc.sum(axis=0)


def build_wiremask(netlist: Netlist, placement: Placement, canvas: Canvas,
                   macro: int) -> np.ndarray:
    """HPWL increment of parking the macro's lower-left at each grid cell.

    Entry (gx, gy) sums, over the macro's incident nets, the net HPWL with
    the macro at the cell's clamped coordinates minus the HPWL of the
    net's remaining pins.  Separable per axis, so cost is
    O(nets x (grid_nx + grid_ny)).
    """
    if not (netlist.movable_mask[macro] and netlist.macro_mask[macro]):
        raise ValueError(f"cell {macro} is not a movable macro")
    w = netlist.widths[macro]
    h = netlist.heights[macro]
    xs, ys = _candidate_coords(canvas, w, h)
    spans = _incident_spans(netlist, placement, macro)
    if spans[0].size == 0:
        return np.zeros((canvas.grid_nx, canvas.grid_ny))
    o_lo_x, o_hi_x, o_lo_y, o_hi_y, mn_dx, mx_dx, mn_dy, mx_dy, has = spans
    mx = _axis_increment(xs, o_lo_x, o_hi_x, mn_dx, mx_dx, has)
    my = _axis_increment(ys, o_lo_y, o_hi_y, mn_dy, mx_dy, has)
    return mx[:, None] + my[None, :]


def _blocked(canvas: Canvas, w: float, h: float, xs, ys,
             obstacles: list[tuple[float, float, float, float]]) -> np.ndarray:
    """Grid cells where a w x h rectangle would overlap any obstacle."""
    bad = np.zeros((xs.size, ys.size), dtype=bool)
    for ox, oy, ow, oh in obstacles:
        hit_x = (xs < ox + ow) & (xs + w > ox)
        hit_y = (ys < oy + oh) & (ys + h > oy)
        bad |= hit_x[:, None] & hit_y[None, :]
    return bad


def _covered_usage(canvas: Canvas, w: float, h: float, xs, ys,
                   usage_sums: np.ndarray) -> np.ndarray:
    """Standard-cell area under a w x h rectangle at each candidate cell.

    usage_sums is the inclusive 2D prefix-sum of the usage grid, padded
    with a zero row/column.  The rectangle is rounded out to whole bins,
    which slightly over-counts and so errs on the side of caution.
    """
    kx0 = np.clip(np.floor((xs - canvas.xl) / canvas.bin_w), 0,
                  canvas.grid_nx).astype(int)
    kx1 = np.clip(np.ceil((xs + w - canvas.xl) / canvas.bin_w), 0,
                  canvas.grid_nx).astype(int)
    ky0 = np.clip(np.floor((ys - canvas.yl) / canvas.bin_h), 0,
                  canvas.grid_ny).astype(int)
    ky1 = np.clip(np.ceil((ys + h - canvas.yl) / canvas.bin_h), 0,
                  canvas.grid_ny).astype(int)
    return (usage_sums[kx1[:, None], ky1[None, :]]
            - usage_sums[kx0[:, None], ky1[None, :]]
            - usage_sums[kx1[:, None], ky0[None, :]]
            + usage_sums[kx0[:, None], ky0[None, :]])


def wiremask_adjust(netlist: Netlist, placement: Placement, canvas: Canvas,
                    usage_limit: float | None = 0.15) -> Placement:
    """Greedily re-seat every movable macro on its least-increment feasible cell.

    Macros are processed in descending area order; feasibility excludes
    overlap with fixed cells and with macros already processed (including
    any that had to stay put).  usage_limit additionally rejects cells
    where the standard-cell area already under the macro's rectangle
    exceeds that fraction of its area, so macros prefer pockets the
    surrounding placement can absorb; None disables the check, and a
    macro with no candidate under the limit falls back to ignoring it.
    Ties are broken by L1 distance from the macro's pre-adjustment
    position, then by (gy, gx).  Standard cells are untouched; with no
    macros the placement is returned unchanged.
    """
    out = placement.copy()
    macros = np.flatnonzero(netlist.movable_mask & netlist.macro_mask)
    if macros.size == 0:
        return out
    usage_sums = None
    if usage_limit is not None:
        std = netlist.movable_mask & ~netlist.macro_mask
        if std.any():
            usage = usage_of(netlist, placement, canvas, std)
            usage_sums = np.pad(np.cumsum(np.cumsum(usage, 0), 1),
                                ((1, 0), (1, 0)))
    areas = netlist.widths[macros] * netlist.heights[macros]
    order = macros[np.lexsort((macros, -areas))]
    fixed = np.flatnonzero(~netlist.movable_mask)
    obstacles = [(out.xy[c, 0], out.xy[c, 1],
                  netlist.widths[c], netlist.heights[c]) for c in fixed]
    for mid in order:
        w = netlist.widths[mid]
        h = netlist.heights[mid]
        x0, y0 = clamp_to_canvas(canvas, netlist.cells[mid], out.xy[mid, 0], out.xy[mid, 1])
        out.xy[mid] = (x0, y0)
        xs, ys = _candidate_coords(canvas, w, h)
        blocked = _blocked(canvas, w, h, xs, ys, obstacles)
        feasible = ~blocked
        if feasible.any() and usage_sums is not None:
            fits = _covered_usage(canvas, w, h, xs, ys, usage_sums) <= usage_limit * w * h
            if (feasible & fits).any():
                feasible &= fits
        if not feasible.any():
            warnings.warn(NoFeasibleCell(int(mid), netlist.cells[mid].name))
        else:
            mask = build_wiremask(netlist, out, canvas, int(mid))
            dist = np.abs(xs[:, None] - x0) + np.abs(ys[None, :] - y0)
            gx, gy = np.nonzero(feasible)
            pick = np.lexsort((gx, gy, dist[gx, gy], mask[gx, gy]))[0]
            out.xy[mid] = (xs[gx[pick]], ys[gy[pick]])
        obstacles.append((out.xy[mid, 0], out.xy[mid, 1], w, h))
    return out

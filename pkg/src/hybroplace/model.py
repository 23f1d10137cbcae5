"""Core domain model: cells, nets, netlist, canvas and placements.

The netlist is an immutable hypergraph.  On construction it builds flat
numpy views (net-major pin arrays plus a cell-to-net incidence index in
CSR form) so the numerical kernels can index arrays instead of walking
per-object structures.  Positions are lower-left corners in database
units, stored as float64.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np


class CellLargerThanCanvas(ValueError):
    """A cell cannot fit inside the placement region at all."""


class CellKind(enum.Enum):
    MOVABLE = "movable"
    FIXED = "fixed"


@dataclass(frozen=True)
class Cell:
    """One placeable object: a standard cell, macro, or fixed terminal."""

    id: int
    name: str
    width: float
    height: float
    kind: CellKind
    is_macro: bool = False

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def fixed(self) -> bool:
        return self.kind is CellKind.FIXED


@dataclass(frozen=True)
class Pin:
    """A net connection point, offset from the owning cell's lower-left corner."""

    cell: int
    dx: float
    dy: float


@dataclass(frozen=True)
class Net:
    """A hyperedge over pins.  A cell may appear more than once."""

    id: int
    pins: tuple[Pin, ...]

    def __post_init__(self):
        if not self.pins:
            raise ValueError(f"net {self.id} has no pins")


class Netlist:
    """Immutable cell/net hypergraph with flat array views.

    Attributes built once at construction:
      widths, heights     float64 per cell
      movable_mask        bool per cell (True where kind is MOVABLE)
      macro_mask          bool per cell
      pin_cell            int32, pins in net-major order
      pin_dx, pin_dy      float64, lower-left-relative offsets per pin
      net_start           int64 CSR offsets, len == n_nets + 1
      cell_net_start      int64 CSR offsets into cell_net_ids
      cell_net_ids        int32, unique incident net ids per cell, ascending
    """

    def __init__(self, cells: list[Cell], nets: list[Net]):
        self.cells = list(cells)
        self.nets = list(nets)
        n_cells = len(self.cells)
        for i, c in enumerate(self.cells):
            if c.id != i:
                raise ValueError(f"cell ids must be dense file-order indices, got {c.id} at {i}")
            if not (c.width > 0 and c.height > 0):
                raise ValueError(f"cell {c.name!r} has non-positive dimensions")
        for j, net in enumerate(self.nets):
            if net.id != j:
                raise ValueError(f"net ids must be dense, got {net.id} at {j}")
            for p in net.pins:
                if not (0 <= p.cell < n_cells):
                    raise ValueError(f"net {j} references unknown cell {p.cell}")

        self.widths = np.array([c.width for c in self.cells], dtype=np.float64)
        self.heights = np.array([c.height for c in self.cells], dtype=np.float64)
        self.movable_mask = np.array([not c.fixed for c in self.cells], dtype=bool)
        self.macro_mask = np.array([c.is_macro for c in self.cells], dtype=bool)

        pin_cell: list[int] = []
        pin_dx: list[float] = []
        pin_dy: list[float] = []
        net_start = np.zeros(len(self.nets) + 1, dtype=np.int64)
        for j, net in enumerate(self.nets):
            for p in net.pins:
                pin_cell.append(p.cell)
                pin_dx.append(p.dx)
                pin_dy.append(p.dy)
            net_start[j + 1] = len(pin_cell)
        self.pin_cell = np.array(pin_cell, dtype=np.int32)
        self.pin_dx = np.array(pin_dx, dtype=np.float64)
        self.pin_dy = np.array(pin_dy, dtype=np.float64)
        self.net_start = net_start
        self.pin_net = np.repeat(np.arange(len(self.nets), dtype=np.int32),
                                 np.diff(net_start))

        self.cell_net_start, self.cell_net_ids = self._build_incidence()

    def _build_incidence(self) -> tuple[np.ndarray, np.ndarray]:
        per_cell: list[set[int]] = [set() for _ in self.cells]
        for net in self.nets:
            for p in net.pins:
                per_cell[p.cell].add(net.id)
        start = np.zeros(len(self.cells) + 1, dtype=np.int64)
        flat: list[int] = []
        for i, nets in enumerate(per_cell):
            flat.extend(sorted(nets))
            start[i + 1] = len(flat)
        return start, np.array(flat, dtype=np.int32)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_nets(self) -> int:
        return len(self.nets)

    @property
    def n_pins(self) -> int:
        return len(self.pin_cell)

    def nets_of_cell(self, cell_id: int) -> np.ndarray:
        """Unique ids of nets incident to a cell, ascending."""
        return self.cell_net_ids[self.cell_net_start[cell_id]:self.cell_net_start[cell_id + 1]]

    def check_incidence(self) -> bool:
        """Rebuild the cell-to-net index from the nets and compare."""
        start, ids = self._build_incidence()
        return bool(np.array_equal(start, self.cell_net_start) and np.array_equal(ids, self.cell_net_ids))


@dataclass(frozen=True)
class Canvas:
    """Placement region plus the uniform grid used for density bins and wire masks."""

    xl: float
    yl: float
    xh: float
    yh: float
    grid_nx: int
    grid_ny: int

    def __post_init__(self):
        if not (self.xl < self.xh and self.yl < self.yh):
            raise ValueError("canvas bounds must satisfy xl < xh and yl < yh")
        if self.grid_nx < 1 or self.grid_ny < 1:
            raise ValueError("grid dimensions must be >= 1")

    @property
    def width(self) -> float:
        return self.xh - self.xl

    @property
    def height(self) -> float:
        return self.yh - self.yl

    @property
    def bin_w(self) -> float:
        return self.width / self.grid_nx

    @property
    def bin_h(self) -> float:
        return self.height / self.grid_ny

    def with_grid(self, grid_nx: int, grid_ny: int) -> "Canvas":
        return replace(self, grid_nx=grid_nx, grid_ny=grid_ny)


def default_grid_dim(n_movable: int) -> int:
    """Grid side for a movable-cell count: next power of two of sqrt(n), in [32, 1024]."""
    n = max(1, int(n_movable))
    side = 2 ** int(np.ceil(np.log2(max(1.0, np.sqrt(n)))))
    return int(min(1024, max(32, side)))


@dataclass
class Placement:
    """Lower-left (x, y) per cell; row i belongs to cell id i."""

    xy: np.ndarray  # (n_cells, 2) float64

    def __post_init__(self):
        self.xy = np.ascontiguousarray(self.xy, dtype=np.float64)
        if self.xy.ndim != 2 or self.xy.shape[1] != 2:
            raise ValueError("positions must be an (n, 2) array")

    def copy(self) -> "Placement":
        return Placement(self.xy.copy())

    @property
    def x(self) -> np.ndarray:
        return self.xy[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.xy[:, 1]


def pin_position(netlist: Netlist, placement: Placement, pin: Pin) -> tuple[float, float]:
    """Absolute pin coordinate: owning cell position plus pin offset."""
    x, y = placement.xy[pin.cell]
    return float(x + pin.dx), float(y + pin.dy)


def pin_coords(netlist: Netlist, placement: Placement) -> tuple[np.ndarray, np.ndarray]:
    """Absolute coordinates for every pin, net-major order."""
    px = placement.x[netlist.pin_cell] + netlist.pin_dx
    py = placement.y[netlist.pin_cell] + netlist.pin_dy
    return px, py


def clamp_to_canvas(canvas: Canvas, cell: Cell, x: float, y: float) -> tuple[float, float]:
    """Nearest position keeping the cell fully inside the canvas."""
    if cell.width > canvas.width or cell.height > canvas.height:
        raise CellLargerThanCanvas(
            f"cell {cell.name!r} ({cell.width}x{cell.height}) exceeds canvas "
            f"{canvas.width}x{canvas.height}"
        )
    cx = min(max(x, canvas.xl), canvas.xh - cell.width)
    cy = min(max(y, canvas.yl), canvas.yh - cell.height)
    return cx, cy


def clamp_placement(netlist: Netlist, placement: Placement, canvas: Canvas,
                    mask: np.ndarray | None = None) -> Placement:
    """Clamp positions of masked cells (default: movable) into the canvas.

    Raises CellLargerThanCanvas if any masked cell cannot fit.
    """
    if mask is None:
        mask = netlist.movable_mask
    w = netlist.widths[mask]
    h = netlist.heights[mask]
    if np.any(w > canvas.width) or np.any(h > canvas.height):
        bad = np.flatnonzero(mask)[np.argmax((w > canvas.width) | (h > canvas.height))]
        raise CellLargerThanCanvas(f"cell {netlist.cells[bad].name!r} exceeds canvas")
    out = placement.copy()
    out.xy[mask, 0] = np.clip(out.xy[mask, 0], canvas.xl, canvas.xh - w)
    out.xy[mask, 1] = np.clip(out.xy[mask, 1], canvas.yl, canvas.yh - h)
    return out


def contract_placement(netlist: Netlist, placement: Placement, canvas: Canvas,
                       factor: float) -> Placement:
    """Scale movable-cell centers toward the canvas center by factor.

    factor 1 is the identity; smaller factors compact the placement while
    preserving the relative arrangement (angular order, neighborhoods).
    Fixed cells are untouched, and the result is not clamped: callers that
    need in-canvas positions should clamp afterwards (the descent entry
    does).
    """
    if not 0.0 < factor <= 1.0:
        raise ValueError(f"factor must be in (0, 1], got {factor}")
    out = placement.copy()
    mov = netlist.movable_mask
    ctr = np.array([(canvas.xl + canvas.xh) / 2.0, (canvas.yl + canvas.yh) / 2.0])
    half = np.stack([netlist.widths[mov], netlist.heights[mov]], axis=1) / 2.0
    out.xy[mov] = ctr + factor * (out.xy[mov] + half - ctr) - half
    return out

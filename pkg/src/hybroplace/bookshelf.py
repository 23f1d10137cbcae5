"""Bookshelf benchmark I/O (.aux/.nodes/.nets/.pl/.scl).

Reads the ASCII file family used by the ISPD 2005 contest into the core
model and writes placements back as .pl.  Pin offsets are center-relative
on disk and normalized to lower-left-relative here, so the rest of the
code sees a single convention.  All malformed input is reported as
ParseError; the parser never raises anything else on bad text.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import Canvas, Cell, CellKind, Net, Netlist, Pin, Placement, default_grid_dim
from .textfmt import dec

log = logging.getLogger(__name__)

MACRO_AREA_RATIO_DEFAULT = 10.0


class ParseError(Exception):
    """Malformed Bookshelf input."""

    def __init__(self, file: str, line: int, message: str):
        self.file = file
        self.line = line
        self.message = message
        super().__init__(f"{file}:{line}: {message}")


class CountMismatch(ParseError):
    """A header count (NumNodes, NumNets, ...) disagrees with the records parsed."""


@dataclass
class BookshelfDesign:
    netlist: Netlist
    initial: Placement
    canvas: Canvas
    row_height: float | None
    name: str = ""
    files: tuple[str, ...] = ()

    @property
    def cell_index(self) -> dict[str, int]:
        if not hasattr(self, "_cell_index"):
            self._cell_index = {c.name: c.id for c in self.netlist.cells}
        return self._cell_index


def _records(lines: Iterable[str]) -> Iterable[tuple[int, str]]:
    """Yield (1-based line number, text) with comments and blank lines removed."""
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if text:
            yield lineno, text


def _header_value(tokens: Sequence[str], src: str, lineno: int) -> int:
    # "NumNodes : 123" tokens -> ["NumNodes", ":", "123"]
    try:
        return int(tokens[-1])
    except ValueError:
        raise ParseError(src, lineno, f"expected an integer count in {' '.join(tokens)!r}")


def _parse_nodes(lines: Iterable[str], src: str):
    """Return ([(name, w, h, fixed)], declared_nodes, declared_terminals)."""
    entries: list[tuple[str, float, float, bool]] = []
    num_nodes = num_terminals = None
    seen = set()
    for lineno, text in _records(lines):
        tokens = text.split()
        if tokens[0] == "UCLA":
            continue
        if tokens[0] == "NumNodes":
            num_nodes = _header_value(tokens, src, lineno)
            continue
        if tokens[0] == "NumTerminals":
            num_terminals = _header_value(tokens, src, lineno)
            continue
        if len(tokens) < 3:
            raise ParseError(src, lineno, f"node record needs name, width, height: {text!r}")
        name = tokens[0]
        try:
            w = float(tokens[1])
            h = float(tokens[2])
        except ValueError:
            raise ParseError(src, lineno, f"bad node dimensions in {text!r}")
        if not (w > 0 and h > 0) or not (np.isfinite(w) and np.isfinite(h)):
            raise ParseError(src, lineno, f"node {name!r} has non-positive dimensions")
        if name in seen:
            raise ParseError(src, lineno, f"duplicate node {name!r}")
        seen.add(name)
        fixed = False
        rest = tokens[3:]
        if rest:
            if rest[0] in ("terminal", "terminal_NI"):
                fixed = True
                rest = rest[1:]
            if rest:
                log.warning("%s:%d: ignoring trailing tokens %s", src, lineno, rest)
        entries.append((name, w, h, fixed))
    if num_nodes is None or num_terminals is None:
        raise ParseError(src, 0, "missing NumNodes/NumTerminals header")
    if num_nodes != len(entries):
        raise CountMismatch(src, 0, f"NumNodes={num_nodes} but parsed {len(entries)} nodes")
    n_fixed = sum(1 for e in entries if e[3])
    if num_terminals != n_fixed:
        raise CountMismatch(src, 0, f"NumTerminals={num_terminals} but parsed {n_fixed} terminals")
    return entries


def _parse_pl(lines: Iterable[str], src: str) -> dict[str, tuple[float, float, bool]]:
    """Return {name: (x, y, fixed_flag)}."""
    out: dict[str, tuple[float, float, bool]] = {}
    for lineno, text in _records(lines):
        tokens = text.split()
        if tokens[0] == "UCLA":
            continue
        if len(tokens) < 3:
            raise ParseError(src, lineno, f"placement record needs name, x, y: {text!r}")
        name = tokens[0]
        try:
            x = float(tokens[1])
            y = float(tokens[2])
        except ValueError:
            raise ParseError(src, lineno, f"bad coordinates in {text!r}")
        if not (np.isfinite(x) and np.isfinite(y)):
            raise ParseError(src, lineno, f"non-finite coordinates in {text!r}")
        fixed = False
        rest = tokens[3:]
        if rest and rest[0] == ":":
            rest = rest[1:]
            if rest:
                rest = rest[1:]  # orientation token
        for tok in rest:
            if tok in ("/FIXED", "/FIXED_NI"):
                fixed = True
            else:
                log.warning("%s:%d: ignoring trailing token %r", src, lineno, tok)
        out[name] = (x, y, fixed)
    return out


def _parse_scl(lines: Iterable[str], src: str):
    """Return (rows, declared_numrows); rows are (x0, x1, y, height)."""
    rows: list[tuple[float, float, float, float]] = []
    num_rows = None
    in_row = False
    coord = height = origin = n_sites = site_w = None
    for lineno, text in _records(lines):
        tokens = text.split()
        key = tokens[0]
        if key == "UCLA":
            continue
        if key == "NumRows":
            num_rows = _header_value(tokens, src, lineno)
            continue
        if key == "CoreRow":
            in_row = True
            coord = height = origin = n_sites = None
            site_w = 1.0
            continue
        if key == "End":
            if not in_row:
                raise ParseError(src, lineno, "End outside of a CoreRow block")
            if coord is None or height is None or origin is None or n_sites is None:
                raise ParseError(src, lineno, "CoreRow block missing Coordinate/Height/SubrowOrigin")
            rows.append((origin, origin + n_sites * site_w, coord, height))
            in_row = False
            continue
        if not in_row:
            log.warning("%s:%d: ignoring record outside CoreRow: %r", src, lineno, text)
            continue
        try:
            if key == "Coordinate":
                coord = float(tokens[-1])
            elif key == "Height":
                height = float(tokens[-1])
            elif key == "Sitewidth":
                site_w = float(tokens[-1])
            elif key == "SubrowOrigin":
                # "SubrowOrigin : x NumSites : n"
                origin = float(tokens[2])
                if "NumSites" in tokens:
                    n_sites = float(tokens[tokens.index("NumSites") + 2])
                else:
                    raise ParseError(src, lineno, "SubrowOrigin record missing NumSites")
            # Sitespacing/Siteorient/Sitesymmetry carry no information we use
        except (ValueError, IndexError):
            raise ParseError(src, lineno, f"bad CoreRow record {text!r}")
    if num_rows is not None and num_rows != len(rows):
        raise CountMismatch(src, 0, f"NumRows={num_rows} but parsed {len(rows)} rows")
    return rows


def _parse_nets(lines: Iterable[str], src: str, dims: dict[str, tuple[int, float, float]]):
    """Return (nets, declared_nets, declared_pins) with offsets normalized to lower-left."""
    nets: list[Net] = []
    num_nets = num_pins = None
    pins_seen = 0
    current: list[Pin] | None = None
    want = 0
    for lineno, text in _records(lines):
        tokens = text.split()
        if tokens[0] == "UCLA":
            continue
        if tokens[0] == "NumNets":
            num_nets = _header_value(tokens, src, lineno)
            continue
        if tokens[0] == "NumPins":
            num_pins = _header_value(tokens, src, lineno)
            continue
        if tokens[0] == "NetDegree":
            if current is not None and len(current) != want:
                raise CountMismatch(src, lineno,
                                    f"net declared {want} pins but listed {len(current)}")
            if current is not None:
                nets.append(Net(len(nets), tuple(current)))
            try:
                want = int(tokens[2] if tokens[1] == ":" else tokens[1])
            except (ValueError, IndexError):
                raise ParseError(src, lineno, f"bad NetDegree record {text!r}")
            if want < 1:
                raise ParseError(src, lineno, "NetDegree must be >= 1")
            current = []
            continue
        if current is None:
            raise ParseError(src, lineno, f"pin record before any NetDegree: {text!r}")
        name = tokens[0]
        if name not in dims:
            raise ParseError(src, lineno, f"pin references unknown node {name!r}")
        cell_id, w, h = dims[name]
        raw_dx = raw_dy = 0.0
        rest = tokens[1:]
        if rest and rest[0] in ("I", "O", "B"):
            rest = rest[1:]
        if rest and rest[0] == ":":
            if len(rest) < 3:
                raise ParseError(src, lineno, f"pin offsets incomplete in {text!r}")
            try:
                raw_dx = float(rest[1])
                raw_dy = float(rest[2])
            except ValueError:
                raise ParseError(src, lineno, f"bad pin offsets in {text!r}")
            if not (np.isfinite(raw_dx) and np.isfinite(raw_dy)):
                raise ParseError(src, lineno, f"non-finite pin offsets in {text!r}")
            if rest[3:]:
                log.warning("%s:%d: ignoring trailing tokens %s", src, lineno, rest[3:])
        elif rest:
            log.warning("%s:%d: ignoring trailing tokens %s", src, lineno, rest)
        # center-relative on disk -> lower-left-relative internally
        dx = w / 2.0 + raw_dx
        dy = h / 2.0 + raw_dy
        if not (0.0 <= dx <= w) or not (0.0 <= dy <= h):
            log.warning("%s:%d: pin offset outside node %r, clamping", src, lineno, name)
            dx = min(max(dx, 0.0), w)
            dy = min(max(dy, 0.0), h)
        current.append(Pin(cell_id, dx, dy))
        pins_seen += 1
    if current is not None:
        if len(current) != want:
            raise CountMismatch(src, 0, f"net declared {want} pins but listed {len(current)}")
        nets.append(Net(len(nets), tuple(current)))
    if num_nets is None or num_pins is None:
        raise ParseError(src, 0, "missing NumNets/NumPins header")
    if num_nets != len(nets):
        raise CountMismatch(src, 0, f"NumNets={num_nets} but parsed {len(nets)} nets")
    if num_pins != pins_seen:
        raise CountMismatch(src, 0, f"NumPins={num_pins} but parsed {pins_seen} pins")
    return nets


def _parse_aux_line(lines: Iterable[str], src: str) -> list[str]:
    for lineno, text in _records(lines):
        if ":" not in text:
            raise ParseError(src, lineno, "aux line must be 'RowBasedPlacement : files...'")
        head, _, tail = text.partition(":")
        if head.strip() != "RowBasedPlacement":
            raise ParseError(src, lineno, f"unsupported aux kind {head.strip()!r}")
        files = tail.split()
        if not files:
            raise ParseError(src, lineno, "aux names no files")
        return files
    raise ParseError(src, 0, "empty aux file")


def _read_lines(path: str) -> list[str]:
    try:
        with open(path, "r", errors="replace") as f:
            return f.readlines()
    except OSError as e:
        raise ParseError(path, 0, f"cannot read file: {e}")


def classify_macros(entries, row_height: float | None,
                    macro_area_ratio: float = MACRO_AREA_RATIO_DEFAULT) -> list[bool]:
    """Movable-cell macro flags: taller than a row, or (without rows) big by area.

    Bookshelf does not label macros; this heuristic is the load-time stand-in.
    """
    flags = [False] * len(entries)
    if row_height is not None and row_height > 0:
        for i, (_, w, h, fixed) in enumerate(entries):
            if not fixed and h > row_height:
                flags[i] = True
        return flags
    areas = [w * h for (_, w, h, fixed) in entries if not fixed]
    if not areas:
        return flags
    median = float(np.median(np.array(areas)))
    if median <= 0:
        return flags
    for i, (_, w, h, fixed) in enumerate(entries):
        if not fixed and w * h >= macro_area_ratio * median:
            flags[i] = True
    return flags


def parse_aux(path: str, macro_area_ratio: float = MACRO_AREA_RATIO_DEFAULT) -> BookshelfDesign:
    """Load a full Bookshelf design from its .aux entry point."""
    base = os.path.dirname(os.path.abspath(path))
    files = _parse_aux_line(_read_lines(path), path)
    by_ext: dict[str, str] = {}
    for f in files:
        ext = os.path.splitext(f)[1].lower()
        by_ext.setdefault(ext, f)
    for required in (".nodes", ".nets", ".pl"):
        if required not in by_ext:
            raise ParseError(path, 0, f"aux names no {required} file")

    nodes_path = os.path.join(base, by_ext[".nodes"])
    entries = _parse_nodes(_read_lines(nodes_path), nodes_path)

    pl_path = os.path.join(base, by_ext[".pl"])
    positions = _parse_pl(_read_lines(pl_path), pl_path)

    rows = []
    if ".scl" in by_ext:
        scl_path = os.path.join(base, by_ext[".scl"])
        rows = _parse_scl(_read_lines(scl_path), scl_path)

    row_height = None
    if rows:
        heights = [r[3] for r in rows]
        row_height = float(np.median(np.array(heights)))

    macro_flags = classify_macros(entries, row_height, macro_area_ratio)
    cells = []
    xy = np.zeros((len(entries), 2))
    for i, (name, w, h, fixed) in enumerate(entries):
        kind = CellKind.FIXED if fixed else CellKind.MOVABLE
        cells.append(Cell(i, name, w, h, kind, is_macro=macro_flags[i]))
        if name in positions:
            x, y, pl_fixed = positions[name]
            xy[i] = (x, y)
            if pl_fixed and not fixed:
                log.warning("%s: node %r is /FIXED in .pl but not a terminal in .nodes",
                            pl_path, name)
        else:
            log.warning("%s: no placement record for node %r, defaulting to (0, 0)",
                        pl_path, name)
    unknown = set(positions) - {e[0] for e in entries}
    for name in sorted(unknown):
        log.warning("%s: placement record for unknown node %r ignored", pl_path, name)

    nets_path = os.path.join(base, by_ext[".nets"])
    dims = {name: (i, w, h) for i, (name, w, h, _) in enumerate(entries)}
    nets = _parse_nets(_read_lines(nets_path), nets_path, dims)

    if rows:
        xl = min(r[0] for r in rows)
        xh = max(r[1] for r in rows)
        yl = min(r[2] for r in rows)
        yh = max(r[2] + r[3] for r in rows)
    else:
        # fall back to the bounding box of fixed cells and initial positions
        xs0 = xy[:, 0]
        ys0 = xy[:, 1]
        xl = float(np.min(xs0))
        yl = float(np.min(ys0))
        xh = float(np.max(xs0 + [c.width for c in cells]))
        yh = float(np.max(ys0 + [c.height for c in cells]))
    if not (xl < xh and yl < yh):
        raise ParseError(path, 0, "degenerate placement region")

    n_movable = sum(1 for c in cells if not c.fixed)
    dim = default_grid_dim(n_movable)
    canvas = Canvas(xl, yl, xh, yh, dim, dim)
    netlist = Netlist(cells, nets)
    name = os.path.splitext(os.path.basename(path))[0]
    sources = [os.path.abspath(path), nodes_path, nets_path, pl_path]
    if ".scl" in by_ext:
        sources.append(scl_path)
    return BookshelfDesign(netlist, Placement(xy), canvas, row_height, name,
                           tuple(sources))


def read_pl(design: BookshelfDesign, path: str) -> Placement:
    """Load positions from a .pl file onto an already-parsed design."""
    records = _parse_pl(_read_lines(path), path)
    xy = design.initial.xy.copy()
    index = design.cell_index
    for name, (x, y, _) in records.items():
        i = index.get(name)
        if i is None:
            log.warning("%s: placement record for unknown node %r ignored", path, name)
            continue
        xy[i] = (x, y)
    return Placement(xy)


def write_pl(design: BookshelfDesign, placement: Placement, path: str) -> None:
    """Write a placement as Bookshelf .pl: "name x y : N", "/FIXED" on fixed cells."""
    lines = ["UCLA pl 1.0\n"]
    for cell in design.netlist.cells:
        x, y = placement.xy[cell.id]
        suffix = " /FIXED" if cell.fixed else ""
        lines.append(f"{cell.name} {dec(x)} {dec(y)} : N{suffix}\n")
    with open(path, "w") as f:
        f.writelines(lines)

"""hybroplace: analytical global placement with a perturb-and-descend outer loop.

The library places VLSI netlists (Bookshelf format) by gradient descent
on a smoothed half-perimeter wirelength plus a bin-density penalty, then
escapes local optima by perturbing each converged placement — shuffling
cell positions or greedily re-seating macros along a wire-mask — and
keeping the best exact HPWL seen over all descents.
"""

from .bookshelf import (BookshelfDesign, CountMismatch, ParseError,
                        classify_macros, parse_aux, read_pl, write_pl)
from .density import (DensityGrid, build_density, compute_capacity,
                      density_eval, density_gradient, density_penalty, overflow)
from .hybro import (HybroConfig, HybroTrace, PerturbStrategy, iter_seed,
                    run_hybro, run_multiple)
from .metrics import HpwlReport, hpwl_net, hpwl_total, macro_hpwl, net_extents
from .model import (Canvas, Cell, CellKind, CellLargerThanCanvas, Net, Netlist,
                    Pin, Placement, clamp_placement, clamp_to_canvas,
                    default_grid_dim, pin_coords, pin_position)
from .perturb import (NoFeasibleCell, build_wiremask, shuffle, wiremask_adjust)
from .placer import (DivergenceDetected, PlacerConfig, PlacerResult, descend,
                     init_placement, place)
from .render import render_svg
from .wirelength import (Gradient, NonPositiveGamma, WaEval, WaParams,
                         wa_eval, wa_gradient, wa_net, wa_total)

__version__ = "0.1.0"

__all__ = [
    "BookshelfDesign", "Canvas", "Cell", "CellKind", "CellLargerThanCanvas",
    "CountMismatch", "DensityGrid", "DivergenceDetected", "Gradient",
    "HpwlReport", "HybroConfig", "HybroTrace", "Net", "Netlist",
    "NoFeasibleCell", "NonPositiveGamma", "ParseError", "PerturbStrategy",
    "Pin", "Placement", "PlacerConfig", "PlacerResult", "WaEval", "WaParams",
    "build_density", "build_wiremask", "classify_macros", "clamp_placement",
    "clamp_to_canvas", "compute_capacity", "default_grid_dim", "density_eval",
    "density_gradient", "density_penalty", "descend", "hpwl_net", "hpwl_total",
    "init_placement", "iter_seed", "macro_hpwl", "net_extents", "overflow",
    "parse_aux", "pin_coords", "pin_position", "place", "read_pl",
    "render_svg", "run_hybro", "run_multiple", "shuffle", "wa_eval",
    "wa_gradient", "wa_net", "wa_total", "wiremask_adjust", "write_pl",
]

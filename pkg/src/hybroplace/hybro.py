"""The hybrid outer loop: descend, perturb, repeat; keep the best exact HPWL.

One run performs N+1 descents and N perturbations.  Iteration 0 descends
from the initial placement; each later iteration descends from a
perturbed copy of the previous converged solution (or from a fresh
random start in baseline mode, the multiple-restart reference).  The
best solution is selected by exact HPWL, so a perturbation that ends up
hurting can never worsen the returned result.

Perturbed placements are contracted toward the canvas center before
their descent (HybroConfig.contract).  The annealing schedule is tuned
for compact starts — the density weight ramps up as the blob spreads —
so re-submitting a fully spread placement leaves it nothing to anneal;
contraction re-arms the schedule while the perturbation's payload, the
relative arrangement of cells and macros, survives the scaling.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .bookshelf import BookshelfDesign
from .metrics import macro_hpwl
from .model import contract_placement
from .perturb import shuffle, wiremask_adjust
from .placer import PlacerConfig, PlacerResult, descend, init_placement

STRATEGIES = ("shuffle", "shuffle-all", "wiremask")


@dataclass(frozen=True)
class PerturbStrategy:
    """Which perturbation to apply between descents.

    kind "shuffle" permutes p% of macro positions, "shuffle-all" permutes
    p% of all movable cells, "wiremask" greedily re-seats every macro.
    seed feeds a per-iteration stream so each perturbation differs.
    """

    kind: str = "wiremask"
    p: float = 50.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in STRATEGIES:
            raise ValueError(f"kind must be one of {STRATEGIES}, got {self.kind!r}")
        if not 0 < self.p <= 100:
            raise ValueError(f"p must be in (0, 100], got {self.p}")


@dataclass(frozen=True)
class HybroConfig:
    iterations: int = 5
    strategy: PerturbStrategy = field(default_factory=PerturbStrategy)
    placer: PlacerConfig = field(default_factory=PlacerConfig)
    baseline_mode: bool = False
    perturb_best: bool = False
    init_mode: str = "random_center"
    reinit_seeds: tuple[int, ...] | None = None
    contract: float = 0.5

    def __post_init__(self) -> None:
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if not 0.0 < self.contract <= 1.0:
            raise ValueError(f"contract must be in (0, 1], got {self.contract}")


@dataclass
class HybroTrace:
    """Per-iteration log; best_hpwl is non-increasing by construction."""

    iteration: list[int] = field(default_factory=list)
    hpwl: list[float] = field(default_factory=list)
    macro_hpwl: list[float] = field(default_factory=list)
    best_hpwl: list[float] = field(default_factory=list)
    t_descent_s: list[float] = field(default_factory=list)
    t_perturb_s: list[float] = field(default_factory=list)

    def append(self, iteration: int, hpwl: float, macro: float, best: float,
               t_descent: float, t_perturb: float) -> None:
        self.iteration.append(iteration)
        self.hpwl.append(hpwl)
        self.macro_hpwl.append(macro)
        self.best_hpwl.append(best)
        self.t_descent_s.append(t_descent)
        self.t_perturb_s.append(t_perturb)

    def columns(self) -> dict[str, list]:
        return {"iter": self.iteration, "hpwl": self.hpwl,
                "macro_hpwl": self.macro_hpwl, "best_hpwl": self.best_hpwl,
                "t_descent_s": self.t_descent_s, "t_perturb_s": self.t_perturb_s}


def iter_seed(seed: int, iteration: int) -> int:
    """Deterministic per-iteration stream derived from one base seed."""
    ss = np.random.SeedSequence([seed, iteration])
    return int(ss.generate_state(1, np.uint64)[0])


def run_hybro(design: BookshelfDesign, config: HybroConfig, observer=None):
    """Run the outer loop; returns (best PlacerResult, HybroTrace).

    Perturbation applies to the just-converged solution (or to the best
    so far when perturb_best is set).  In baseline mode every iteration
    after the first restarts from a fresh random initialization instead.
    observer, if given, is called as observer(iteration, result) after
    each descent (the CLI uses it for per-iteration snapshots).
    """
    netlist, canvas = design.netlist, design.canvas
    current = init_placement(design, config.placer.seed, config.init_mode)
    best: PlacerResult | None = None
    trace = HybroTrace()
    for i in range(config.iterations + 1):
        t0 = time.perf_counter()
        result = descend(design, current, config.placer)
        t_descent = time.perf_counter() - t0
        if best is None or result.hpwl < best.hpwl:
            best = result
        m_hpwl = macro_hpwl(netlist, result.placement)
        if observer is not None:
            observer(i, result)
        t_perturb = 0.0
        if i < config.iterations:
            source = best.placement if config.perturb_best else result.placement
            t1 = time.perf_counter()
            if config.baseline_mode:
                if config.reinit_seeds is not None:
                    seed = config.reinit_seeds[i]
                else:
                    seed = iter_seed(config.placer.seed, i + 1)
                current = init_placement(design, seed, config.init_mode)
            else:
                if config.strategy.kind == "wiremask":
                    current = wiremask_adjust(netlist, source, canvas)
                else:
                    scope = "macros" if config.strategy.kind == "shuffle" else "all"
                    current = shuffle(source, netlist, config.strategy.p,
                                      iter_seed(config.strategy.seed, i + 1), scope)
                current = contract_placement(netlist, current, canvas,
                                             config.contract)
            t_perturb = time.perf_counter() - t1
        trace.append(i, result.hpwl, m_hpwl, best.hpwl, t_descent, t_perturb)
    return best, trace


def run_multiple(design: BookshelfDesign, config: HybroConfig):
    """Multiple independent restarts, best-of-N (the restart baseline)."""
    return run_hybro(design, replace(config, baseline_mode=True))

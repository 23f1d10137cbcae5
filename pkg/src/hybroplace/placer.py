"""First-order descent on smoothed wirelength plus a weighted density penalty.

The objective is f(s) = WA(s) + lambda * penalty(s).  lambda starts small
(scaled so both terms' gradients are comparable) and is multiplied by a
growth factor every step while overflow still exceeds the stopping
threshold; gamma anneals from coarse to sharp as overflow falls.  The
default optimizer is momentum plus per-coordinate scaling (Adam) with a
cosine-decayed step; an alternative projected line-search mode ("gd")
guarantees a non-increasing objective when lambda is 0 and gamma fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .bookshelf import BookshelfDesign
from .density import compute_capacity, density_eval
from .metrics import hpwl_total
from .model import Canvas, Netlist, Placement, clamp_placement
from .wirelength import WaParams, wa_eval


class DivergenceDetected(RuntimeError):
    """Objective exploded past the guard even after learning-rate retries."""


# Fraction of the step budget over which the overflow milestone ramps from
# its initial value down to eps_stop.  lambda grows only while overflow is
# behind this schedule, so a run that spreads on schedule keeps lambda
# nearly constant while a stuck run escalates it exponentially.
_MILESTONE_RAMP = 0.7


class _Diverged(Exception):
    """Internal signal: restart the descent with a smaller learning rate."""


@dataclass(frozen=True)
class PlacerConfig:
    """Knobs for one gradient-descent run.

    learning_rate is a length; None means 0.1x bin width.  lambda0 scales
    the initial density weight relative to the gradient-norm ratio of the
    two terms; 0 disables the density term entirely (wirelength-only
    descent, used by the line-search monotonicity contract).  gamma is
    gamma_factor x max(bin width, bin height), annealed from
    gamma_start_factor down to gamma_end_factor as overflow falls; equal
    factors hold gamma constant.

    polish marks a refinement run from an already-spread warm start: the
    density weight starts at its equilibrium value instead of the cold
    lambda0 ramp, is held there (no growth schedule), and steps are
    capped at a fraction of gamma, so the structure of the input is
    preserved instead of being shaken apart and re-spread.  lambda_init,
    when given, is that equilibrium weight (typically the final weight
    of the run that produced the warm start); otherwise polish falls
    back to the gradient-norm ratio at the first step.
    """

    target_density: float = 1.0
    lambda0: float = 1e-4
    lambda_growth: float = 1.05
    gamma_start_factor: float = 4.0
    gamma_end_factor: float = 0.5
    learning_rate: float | None = None
    max_steps: int = 1000
    stall_window: int = 50
    stall_tol: float = 1e-4
    eps_stop: float = 0.10
    seed: int = 0
    optimizer: str = "adam"
    divergence_factor: float = 1e6
    max_retries: int = 3
    polish: bool = False
    lambda_init: float | None = None

    def __post_init__(self) -> None:
        if self.lambda0 < 0:
            raise ValueError(f"lambda0 must be >= 0, got {self.lambda0}")
        if self.lambda_init is not None and self.lambda_init < 0:
            raise ValueError(f"lambda_init must be >= 0, got {self.lambda_init}")
        if self.lambda_growth < 1:
            raise ValueError(f"lambda_growth must be >= 1, got {self.lambda_growth}")
        if self.learning_rate is not None and not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.stall_window < 1:
            raise ValueError(f"stall_window must be >= 1, got {self.stall_window}")
        if not 0 < self.target_density <= 1:
            raise ValueError(f"target_density must be in (0, 1], got {self.target_density}")
        if not self.eps_stop >= 0:
            raise ValueError(f"eps_stop must be >= 0, got {self.eps_stop}")
        if self.gamma_start_factor <= 0 or self.gamma_end_factor <= 0:
            raise ValueError("gamma factors must be > 0")
        if self.optimizer not in ("adam", "gd"):
            raise ValueError(f"optimizer must be 'adam' or 'gd', got {self.optimizer!r}")


@dataclass
class PlacerResult:
    placement: Placement
    hpwl: float
    overflow: float
    steps_taken: int
    converged: bool
    objective: np.ndarray
    trace: dict[str, np.ndarray]
    learning_rate: float


def init_placement(design: BookshelfDesign, seed: int = 0,
                   mode: str = "random_center") -> Placement:
    """Starting positions for a descent: random_center, spread, or keep.

    random_center scatters movable-cell centers with Gaussian noise
    (sigma = 5% of each canvas span) around the canvas center; spread lays
    them on a jittered uniform grid; keep returns the parsed .pl
    positions.  Movable cells are clamped into the canvas; fixed cells are
    never touched.
    """
    netlist, canvas = design.netlist, design.canvas
    placement = design.initial.copy()
    mov = np.flatnonzero(netlist.movable_mask)
    if mode == "keep" or mov.size == 0:
        if mov.size:
            placement = clamp_placement(netlist, placement, canvas)
        return placement
    rng = np.random.Generator(np.random.PCG64(seed))
    w = netlist.widths[mov]
    h = netlist.heights[mov]
    if mode == "random_center":
        ccx = (canvas.xl + canvas.xh) / 2.0
        ccy = (canvas.yl + canvas.yh) / 2.0
        cx = ccx + rng.normal(0.0, 0.05 * canvas.width, mov.size)
        cy = ccy + rng.normal(0.0, 0.05 * canvas.height, mov.size)
    elif mode == "spread":
        g = int(math.ceil(math.sqrt(mov.size)))
        slots = np.arange(mov.size)
        px = (slots % g + 0.5) / g
        py = (slots // g + 0.5) / g
        jx = rng.uniform(-0.4, 0.4, mov.size) / g
        jy = rng.uniform(-0.4, 0.4, mov.size) / g
        cx = canvas.xl + (px + jx) * canvas.width
        cy = canvas.yl + (py + jy) * canvas.height
    else:
        raise ValueError(f"unknown init mode {mode!r}")
    placement.xy[mov, 0] = cx - w / 2.0
    placement.xy[mov, 1] = cy - h / 2.0
    return clamp_placement(netlist, placement, canvas)


def _frozen_projector(netlist: Netlist, move_mask: np.ndarray, mov: np.ndarray):
    """Pushes moving cells fully out of frozen macros' rectangles.

    The capacity floor gives blocked bins a strong repulsive penalty, but
    inside a large frozen macro the penalty is a plateau: every interior
    bin is equally terrible, so the gradient gives no direction out.
    This projection (applied after every step, like the canvas clamp)
    shifts any cell whose center falls inside a frozen macro past its
    nearest edge.  Frozen standard cells are left to the capacity floor;
    they are at most a couple of bins wide, so the penalty gradient
    across their footprint already points toward free space.
    """
    frozen = np.flatnonzero(netlist.movable_mask & netlist.macro_mask & ~move_mask)
    if frozen.size == 0 or mov.size == 0:
        return lambda p: p
    half_w = netlist.widths[mov] / 2.0
    half_h = netlist.heights[mov] / 2.0

    def project(p: Placement) -> Placement:
        cx = p.xy[mov, 0] + half_w
        cy = p.xy[mov, 1] + half_h
        for c in frozen:
            rx0, ry0 = p.xy[c]
            rx1 = rx0 + netlist.widths[c]
            ry1 = ry0 + netlist.heights[c]
            ins = (cx > rx0) & (cx < rx1) & (cy > ry0) & (cy < ry1)
            if not ins.any():
                continue
            side = np.argmin(np.stack([cx[ins] - rx0, rx1 - cx[ins],
                                       cy[ins] - ry0, ry1 - cy[ins]]), axis=0)
            ncx = cx[ins].copy()
            ncy = cy[ins].copy()
            ncx[side == 0] = rx0 - half_w[ins][side == 0]
            ncx[side == 1] = rx1 + half_w[ins][side == 1]
            ncy[side == 2] = ry0 - half_h[ins][side == 2]
            ncy[side == 3] = ry1 + half_h[ins][side == 3]
            cx[ins] = ncx
            cy[ins] = ncy
        p.xy[mov, 0] = cx - half_w
        p.xy[mov, 1] = cy - half_h
        return p

    return project


def _gamma_for(overflow_now: float, overflow_start: float, config: PlacerConfig,
               canvas: Canvas) -> float:
    """Log-interpolated gamma: coarse while overflow is high, sharp near the goal."""
    base = max(canvas.bin_w, canvas.bin_h)
    hi = config.gamma_start_factor * base
    lo = config.gamma_end_factor * base
    if config.polish or overflow_start <= config.eps_stop or hi == lo:
        return lo
    t = (overflow_now - config.eps_stop) / (overflow_start - config.eps_stop)
    t = min(max(t, 0.0), 1.0)
    return math.exp(math.log(lo) + t * (math.log(hi) - math.log(lo)))


def descend(design: BookshelfDesign, placement: Placement,
            config: PlacerConfig,
            move_mask: np.ndarray | None = None) -> PlacerResult:
    """Run gradient descent to convergence or step budget.

    move_mask restricts which cells the descent may move (default: all
    movable cells); cells outside it are treated as blockages for the
    density term.  Retries with a halved learning rate when the objective
    exceeds divergence_factor x its initial value; raises
    DivergenceDetected once max_retries halvings are exhausted.
    """
    canvas = design.canvas
    lr0 = config.learning_rate
    if lr0 is None:
        lr0 = 0.1 * max(canvas.bin_w, canvas.bin_h)
    last = None
    for attempt in range(config.max_retries + 1):
        lr = lr0 * 0.5 ** attempt
        try:
            return _descend_once(design, placement, config, lr, move_mask)
        except _Diverged as exc:
            last = exc
    raise DivergenceDetected(
        f"objective exceeded {config.divergence_factor:g}x its initial value "
        f"after {config.max_retries + 1} attempts (final learning rate "
        f"{lr:g}): {last}")


def _descend_once(design: BookshelfDesign, placement: Placement,
                  config: PlacerConfig, lr: float,
                  move_mask: np.ndarray | None = None) -> PlacerResult:
    netlist, canvas = design.netlist, design.canvas
    if move_mask is None:
        move_mask = netlist.movable_mask
    else:
        move_mask = move_mask & netlist.movable_mask
    p = placement.copy()
    mov = np.flatnonzero(move_mask)
    project = _frozen_projector(netlist, move_mask, mov)
    if mov.size:
        p = project(clamp_placement(netlist, p, canvas, move_mask))
    capacity = compute_capacity(netlist, p, canvas, move_mask)

    rows: list[tuple[int, float, float, float, float, float]] = []
    objective: list[float] = []

    def finish(steps: int, converged: bool) -> PlacerResult:
        report = hpwl_total(netlist, p)
        cols = ("step", "wa", "penalty", "lambda", "overflow", "hpwl")
        trace = {c: np.array(v) for c, v in zip(cols, zip(*rows))}
        return PlacerResult(p, report.total, rows[-1][4], steps, converged,
                            np.array(objective), trace, lr)

    lam = None
    ovf_start = None
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    m1 = np.zeros((mov.size, 2))
    m2 = np.zeros((mov.size, 2))
    f_first = None
    ovf = 0.0

    for t in range(config.max_steps + 1):
        gamma = _gamma_for(ovf if ovf_start is not None else 1.0,
                           ovf_start if ovf_start is not None else 1.0,
                           config, canvas)
        wa = wa_eval(netlist, p, WaParams(gamma))
        grid, pen, dgrad, ovf = density_eval(
            netlist, p, canvas, config.target_density, capacity, move_mask)
        if ovf_start is None:
            ovf_start = ovf
        if lam is None:
            if config.lambda_init is not None:
                lam = config.lambda_init
            elif config.lambda0 == 0.0:
                lam = 0.0
            else:
                wl_norm = float(np.abs(wa.grad.d_x).sum() + np.abs(wa.grad.d_y).sum())
                d_norm = float(np.abs(dgrad.d_x).sum() + np.abs(dgrad.d_y).sum())
                ratio = wl_norm / d_norm if d_norm > 0 else 1.0
                lam = ratio if config.polish else config.lambda0 * ratio
        f = wa.wa + lam * pen
        rows.append((t, wa.wa, pen, lam, ovf, wa.hpwl))
        objective.append(f)
        if f_first is None:
            f_first = f
        guard = config.divergence_factor * max(abs(f_first), 1e-12)
        if not math.isfinite(f) or f > guard:
            raise _Diverged(f"objective {f:g} at step {t} (initial {f_first:g})")
        if mov.size == 0:
            return finish(0, True)
        if t >= config.stall_window and ovf <= config.eps_stop:
            f_ref = objective[t - config.stall_window]
            if abs(f - f_ref) / max(abs(f_ref), 1e-12) < config.stall_tol:
                return finish(t, True)
        if t == config.max_steps:
            return finish(t, False)

        gx = wa.grad.d_x[mov] + lam * dgrad.d_x[mov]
        gy = wa.grad.d_y[mov] + lam * dgrad.d_y[mov]
        g = np.stack([gx, gy], axis=1)
        step = min(lr, 0.25 * gamma) if config.polish else lr
        if config.optimizer == "adam":
            m1 = beta1 * m1 + (1 - beta1) * g
            m2 = beta2 * m2 + (1 - beta2) * g * g
            mhat = m1 / (1 - beta1 ** (t + 1))
            vhat = m2 / (1 - beta2 ** (t + 1))
            lr_t = step * 0.5 * (1.0 + math.cos(math.pi * t / config.max_steps))
            p.xy[mov] -= lr_t * mhat / (np.sqrt(vhat) + eps)
            p = project(clamp_placement(netlist, p, canvas, move_mask))
        else:
            p = _line_search_step(netlist, p, canvas, mov, g, f, lam, gamma,
                                  config, capacity, step, move_mask, project)
        # Polish runs start at the equilibrium weight; growing it further
        # only squeezes the warm start apart, so the schedule is skipped.
        if not config.polish:
            ramp = max(1.0, _MILESTONE_RAMP * config.max_steps)
            start = max(ovf_start, config.eps_stop)
            milestone = config.eps_stop + (start - config.eps_stop) * max(0.0, 1.0 - t / ramp)
            if ovf > milestone:
                lam *= config.lambda_growth
    raise AssertionError("unreachable: loop always returns or raises")


def _line_search_step(netlist: Netlist, p: Placement, canvas: Canvas,
                      mov: np.ndarray, g: np.ndarray, f: float, lam: float,
                      gamma: float, config: PlacerConfig, capacity: np.ndarray,
                      lr: float, move_mask: np.ndarray | None = None,
                      project=lambda pl: pl) -> Placement:
    """Projected backtracking step: never returns a point with higher objective."""
    gsq = float(np.sum(g * g))
    alpha = lr
    cand, f_new = p, f
    for _ in range(40):
        cand = p.copy()
        cand.xy[mov] -= alpha * g
        cand = project(clamp_placement(netlist, cand, canvas, move_mask))
        wa = wa_eval(netlist, cand, WaParams(gamma))
        _, pen, _, _ = density_eval(netlist, cand, canvas,
                                    config.target_density, capacity, move_mask)
        f_new = wa.wa + lam * pen
        if f_new <= f - 1e-4 * alpha * gsq:
            return cand
        alpha *= 0.5
    return cand if f_new <= f else p


def place(design: BookshelfDesign, config: PlacerConfig | None = None,
          seed: int | None = None, init_mode: str = "random_center") -> PlacerResult:
    """Initialize and descend in one call (the single-descent baseline)."""
    config = config or PlacerConfig()
    if seed is None:
        seed = config.seed
    start = init_placement(design, seed, init_mode)
    return descend(design, start, config)

"""Command-line surface: place, hybro, eval, and plot subcommands.

Every knob resolves as built-in default < config file < flag, and each
run that produces files also writes a JSON manifest recording the
resolved value and provenance of every knob plus SHA-256 digests of all
inputs and outputs.  A manifest can be fed back via --config to
reproduce a run byte-for-byte.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys

from .bookshelf import (MACRO_AREA_RATIO_DEFAULT, BookshelfDesign, ParseError,
                        parse_aux, read_pl, write_pl)
from .density import build_density, overflow as density_overflow
from .hybro import HybroConfig, PerturbStrategy, run_hybro
from .metrics import hpwl_total, macro_hpwl
from .placer import DivergenceDetected, PlacerConfig, place
from .render import render_svg
from .textfmt import dec

TOOL_NAME = "hybroplace"

PLACER_KNOBS: dict[str, tuple[object, type, str]] = {
    "lambda0": (1e-4, float, "initial density weight, relative to the gradient-norm ratio"),
    "lambda-growth": (1.05, float, "density-weight multiplier while overflow > eps-stop"),
    "gamma-start": (4.0, float, "initial smoothing, in bin widths"),
    "gamma-end": (0.5, float, "final smoothing, in bin widths"),
    "lr": (None, float, "learning rate in length units (default: 0.1 x bin width)"),
    "max-steps": (1000, int, "descent step budget"),
    "stall-window": (50, int, "steps between objective samples for the stall test"),
    "stall-tol": (1e-4, float, "relative objective change treated as stalled"),
    "eps-stop": (0.1, float, "overflow level at which density is considered satisfied"),
    "optimizer": ("adam", str, "adam (default) or gd (backtracking line search)"),
    "init": ("random_center", str, "initial placement: random_center, spread, or keep"),
}

COMMON_KNOBS: dict[str, tuple[object, type, str]] = {
    "target-density": (1.0, float, "per-bin usage/capacity target in (0, 1]"),
    "seed": (0, int, "base seed for every random choice in the run"),
    "grid": (None, int, "density/mask grid side (default: scaled to design size)"),
    "macro-area-ratio": (MACRO_AREA_RATIO_DEFAULT, float,
                         "area multiple of the median movable cell that makes a macro"),
    "macro-hpwl": ("macro_pins", str,
                   "macro HPWL definition: macro_pins or full_nets"),
}

HYBRO_KNOBS: dict[str, tuple[object, type, str]] = {
    "iters": (5, int, "number N of perturb+descend rounds after the first descent"),
    "strategy": ("wiremask", str,
                 "perturbation: shuffle, shuffle-all, wiremask, or restart"),
    "p": (50.0, float, "percentage of the scope the shuffle strategies permute"),
    "contract": (0.5, float,
                 "scale perturbed placements toward the canvas center before "
                 "re-descending (1 disables)"),
}


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def _load_config_file(path: str) -> dict:
    try:
        with open(path, "r") as f:
            obj = json.load(f)
    except OSError as e:
        raise ParseError(path, 0, f"cannot read config: {e}")
    except json.JSONDecodeError as e:
        raise ParseError(path, e.lineno, f"bad JSON: {e.msg}")
    if isinstance(obj, dict) and "config" in obj and "tool" in obj:
        obj = obj["config"]  # a manifest doubles as a config file
    if not isinstance(obj, dict):
        raise ParseError(path, 0, "config must be a JSON object")
    return {str(k).replace("_", "-"): v for k, v in obj.items()}


def _resolve(knobs: dict[str, tuple[object, type, str]], file_cfg: dict,
             args: argparse.Namespace, config_path: str | None):
    """Apply default < file < flag; returns ({knob: value}, {knob: source})."""
    unknown = sorted(set(file_cfg) - set(knobs) - {"threads"})
    if unknown:
        raise ParseError(config_path or "<config>", 0,
                         f"unknown config keys: {', '.join(unknown)}")
    values: dict[str, object] = {}
    sources: dict[str, str] = {}
    for name, (default, typ, _help) in knobs.items():
        flag_val = getattr(args, name.replace("-", "_"))
        if flag_val is not None:
            values[name], sources[name] = flag_val, "flag"
        elif name in file_cfg:
            raw = file_cfg[name]
            values[name] = raw if raw is None else typ(raw)
            sources[name] = "file"
        else:
            values[name], sources[name] = default, "default"
    return values, sources


def _resolve_threads(file_cfg: dict, args: argparse.Namespace):
    if getattr(args, "threads", None) is not None:
        return args.threads, "flag"
    if file_cfg.get("threads") is not None:
        return int(file_cfg["threads"]), "file"
    env = os.environ.get("HYBRO_THREADS")
    if env is not None:
        return int(env), "env"
    return os.cpu_count() or 1, "default"


def _add_knob_args(sub: argparse.ArgumentParser, knobs: dict) -> None:
    for name, (default, typ, help_text) in knobs.items():
        shown = default if default is not None else "auto"
        sub.add_argument(f"--{name}", type=typ, default=None, metavar=name.upper(),
                         dest=name.replace("-", "_"),
                         help=f"{help_text} (default: {shown})")


def _write_csv(path: str, columns: dict[str, list]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns.keys())
        for row in zip(*columns.values()):
            writer.writerow(dec(v) if isinstance(v, float) else str(int(v))
                            for v in row)


def _write_manifest(path: str, command: str, cfg: dict, prov: dict,
                    threads: tuple, inputs: list[str], outputs: list[str]) -> None:
    from . import __version__
    doc = {
        "tool": {"name": TOOL_NAME, "version": __version__},
        "command": command,
        "seed": cfg.get("seed"),
        "threads": {"count": threads[0], "source": threads[1]},
        "config": dict(sorted(cfg.items())),
        "provenance": dict(sorted(prov.items())),
        "inputs": {p: _sha256(p) for p in inputs},
        "outputs": {p: _sha256(p) for p in outputs if os.path.exists(p)},
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def _load_design(args: argparse.Namespace, cfg: dict) -> BookshelfDesign:
    design = parse_aux(args.aux, macro_area_ratio=cfg["macro-area-ratio"])
    if cfg.get("grid") is not None:
        n = int(cfg["grid"])
        design.canvas = design.canvas.with_grid(n, n)
    return design


def _placer_config(cfg: dict) -> PlacerConfig:
    return PlacerConfig(
        target_density=cfg["target-density"],
        lambda0=cfg["lambda0"],
        lambda_growth=cfg["lambda-growth"],
        gamma_start_factor=cfg["gamma-start"],
        gamma_end_factor=cfg["gamma-end"],
        learning_rate=cfg["lr"],
        max_steps=cfg["max-steps"],
        stall_window=cfg["stall-window"],
        stall_tol=cfg["stall-tol"],
        eps_stop=cfg["eps-stop"],
        seed=cfg["seed"],
        optimizer=cfg["optimizer"],
    )


def _report(design: BookshelfDesign, placement, cfg: dict) -> tuple[float, float, float]:
    report = hpwl_total(design.netlist, placement)
    m_hpwl = macro_hpwl(design.netlist, placement, cfg["macro-hpwl"])
    grid = build_density(design.netlist, placement, design.canvas)
    ovf = density_overflow(grid, cfg["target-density"])
    return report.total, m_hpwl, ovf


def _print_summary(design: BookshelfDesign, hpwl: float, m_hpwl: float,
                   ovf: float) -> None:
    n = design.netlist
    movable = int(n.movable_mask.sum())
    macros = int((n.movable_mask & n.macro_mask).sum())
    print(f"design {design.name}: {n.n_cells} cells "
          f"({movable} movable, {macros} macros), {n.n_nets} nets")
    print(f"  HPWL       {dec(hpwl)}")
    print(f"  macro HPWL {dec(m_hpwl)}")
    print(f"  overflow   {dec(ovf)}")
    print(f"HPWL={dec(hpwl)} MACRO_HPWL={dec(m_hpwl)} OVERFLOW={dec(ovf)}")


def cmd_eval(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config) if args.config else {}
    knobs = dict(COMMON_KNOBS)
    cfg, prov = _resolve(knobs, file_cfg, args, args.config)
    threads = _resolve_threads(file_cfg, args)
    design = _load_design(args, cfg)
    placement = design.initial
    inputs = list(design.files)
    if args.pl:
        placement = read_pl(design, args.pl)
        inputs.append(args.pl)
    hpwl, m_hpwl, ovf = _report(design, placement, cfg)
    _print_summary(design, hpwl, m_hpwl, ovf)
    if args.manifest:
        _write_manifest(args.manifest, "eval", cfg, prov, threads, inputs, [])
    return 0


def cmd_place(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config) if args.config else {}
    knobs = {**COMMON_KNOBS, **PLACER_KNOBS}
    cfg, prov = _resolve(knobs, file_cfg, args, args.config)
    threads = _resolve_threads(file_cfg, args)
    design = _load_design(args, cfg)
    result = place(design, _placer_config(cfg), seed=cfg["seed"],
                   init_mode=cfg["init"])
    out_pl = args.out_pl or f"{design.name}.place.pl"
    write_pl(design, result.placement, out_pl)
    outputs = [out_pl]
    if args.trace_csv:
        _write_csv(args.trace_csv,
                   {k: list(v) for k, v in result.trace.items()})
        outputs.append(args.trace_csv)
    if args.svg:
        with open(args.svg, "w") as f:
            f.write(render_svg(design.netlist, result.placement, design.canvas))
        outputs.append(args.svg)
    hpwl, m_hpwl, ovf = _report(design, result.placement, cfg)
    _print_summary(design, hpwl, m_hpwl, ovf)
    print(f"steps={result.steps_taken} converged={result.converged} -> {out_pl}")
    manifest = args.manifest or out_pl + ".manifest.json"
    _write_manifest(manifest, "place", cfg, prov, threads,
                    list(design.files), outputs)
    return 0


def cmd_hybro(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config) if args.config else {}
    knobs = {**COMMON_KNOBS, **PLACER_KNOBS, **HYBRO_KNOBS}
    cfg, prov = _resolve(knobs, file_cfg, args, args.config)
    threads = _resolve_threads(file_cfg, args)
    if cfg["strategy"] not in ("shuffle", "shuffle-all", "wiremask", "restart"):
        print(f"error: unknown strategy {cfg['strategy']!r}", file=sys.stderr)
        return 2
    design = _load_design(args, cfg)
    restart = cfg["strategy"] == "restart"
    strategy = PerturbStrategy(
        kind="wiremask" if restart else cfg["strategy"],
        p=cfg["p"], seed=cfg["seed"])
    hconfig = HybroConfig(
        iterations=cfg["iters"], strategy=strategy, placer=_placer_config(cfg),
        baseline_mode=restart, perturb_best=bool(args.perturb_best),
        init_mode=cfg["init"], contract=cfg["contract"])

    observer = None
    if args.svg:
        base, ext = os.path.splitext(args.svg)
        ext = ext or ".svg"
        snapshots: list[str] = []

        def observer(i: int, result) -> None:
            path = f"{base}.iter{i}{ext}"
            with open(path, "w") as f:
                f.write(render_svg(design.netlist, result.placement, design.canvas))
            snapshots.append(path)

    best, trace = run_hybro(design, hconfig, observer=observer)
    out_pl = args.out_pl or f"{design.name}.hybro.pl"
    write_pl(design, best.placement, out_pl)
    outputs = [out_pl]
    if args.trace_csv:
        _write_csv(args.trace_csv, trace.columns())
        outputs.append(args.trace_csv)
    if args.svg:
        outputs.extend(snapshots)
    hpwl, m_hpwl, ovf = _report(design, best.placement, cfg)
    _print_summary(design, hpwl, m_hpwl, ovf)
    print(f"iterations={cfg['iters']} strategy={cfg['strategy']} -> {out_pl}")
    manifest = args.manifest or out_pl + ".manifest.json"
    _write_manifest(manifest, "hybro", cfg, prov, threads,
                    list(design.files), outputs)
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config) if args.config else {}
    cfg, prov = _resolve(dict(COMMON_KNOBS), file_cfg, args, args.config)
    threads = _resolve_threads(file_cfg, args)
    design = _load_design(args, cfg)
    placement = design.initial
    inputs = list(design.files)
    if args.pl:
        placement = read_pl(design, args.pl)
        inputs.append(args.pl)
    with open(args.out, "w") as f:
        f.write(render_svg(design.netlist, placement, design.canvas))
    print(f"wrote {args.out}")
    manifest = args.manifest or args.out + ".manifest.json"
    _write_manifest(manifest, "plot", cfg, prov, threads, inputs, [args.out])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="global placement by gradient descent with perturbation restarts")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, knobs: dict) -> None:
        p.add_argument("aux", help="Bookshelf .aux entry file")
        p.add_argument("--config", help="JSON config file (or a previous manifest)")
        p.add_argument("--threads", type=int, default=None,
                       help="thread count recorded for reproducibility "
                            "(default: HYBRO_THREADS or all cores)")
        p.add_argument("--manifest", help="manifest path (default: next to the output)")
        _add_knob_args(p, knobs)

    p_eval = sub.add_parser("eval", help="evaluate a placement's HPWL and overflow")
    common(p_eval, COMMON_KNOBS)
    p_eval.add_argument("--pl", help="placement to evaluate instead of the input .pl")
    p_eval.set_defaults(func=cmd_eval)

    p_place = sub.add_parser("place", help="run a single gradient-descent placement")
    common(p_place, {**COMMON_KNOBS, **PLACER_KNOBS})
    p_place.add_argument("--out-pl", help="output placement path (default: <design>.place.pl)")
    p_place.add_argument("--trace-csv", help="write the per-step objective trace here")
    p_place.add_argument("--svg", help="write the final layout as SVG here")
    p_place.set_defaults(func=cmd_place)

    p_hybro = sub.add_parser("hybro", help="run the full perturb-and-descend loop")
    common(p_hybro, {**COMMON_KNOBS, **PLACER_KNOBS, **HYBRO_KNOBS})
    p_hybro.add_argument("--out-pl", help="output placement path (default: <design>.hybro.pl)")
    p_hybro.add_argument("--trace-csv", help="write the per-iteration trace here")
    p_hybro.add_argument("--svg", help="write per-iteration layout SVGs derived from this path")
    p_hybro.add_argument("--perturb-best", action="store_const", const=True,
                         default=None, help="perturb the best solution so far "
                         "instead of the latest one")
    p_hybro.set_defaults(func=cmd_hybro)

    p_plot = sub.add_parser("plot", help="render a placement as SVG")
    common(p_plot, COMMON_KNOBS)
    p_plot.add_argument("--pl", help="placement to render instead of the input .pl")
    p_plot.add_argument("--out", required=True, help="output SVG path")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except DivergenceDetected as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

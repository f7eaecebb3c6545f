"""Command-line interface.

Every subcommand reads a base configuration from ``--config`` (JSON) and
applies flag overrides on top.  Results go to ``--out`` (stdout when
omitted).  Failures print one line ``error: {json}`` to stderr and exit
non-zero: 2 for usage errors, 1 for everything else.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys

import numpy as np

from chiralchain import __version__
from chiralchain import io as cio
from chiralchain.dynamics import propagate, subharmonic_metric, traversal_time
from chiralchain.errors import ChainError, DomainError
from chiralchain.model import ChainConfig, Detuning, build_coupling_matrix
from chiralchain.observables import transport_imbalance
from chiralchain.phases import DEFAULT_SIZES, fit_pr_scaling, fit_structure_thermo
from chiralchain.spectrum import eigen_spectrum
from chiralchain.steady_state import steady_state
from chiralchain.sweep import (
    RECIPES,
    SweepSpec,
    run_figure_recipe,
    run_phase_diagram,
    trajectory_columns,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


_ANGLE = re.compile(r"^\s*([-+]?[0-9]*\.?[0-9]*(?:e[-+]?\d+)?)\s*\*?\s*pi\s*(?:/\s*([0-9]*\.?[0-9]+))?\s*$")


def parse_angle(text):
    """Float, or a multiple of pi such as ``pi/4``, ``0.8pi``, ``3*pi/4``."""
    try:
        return float(text)
    except ValueError:
        pass
    m = _ANGLE.match(text.lower())
    if not m:
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}")
    coef = m.group(1)
    value = (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * math.pi
    if m.group(2):
        value /= float(m.group(2))
    return value


def _config_args(p):
    g = p.add_argument_group("configuration (override --config)")
    g.add_argument("--config", help="JSON file with a chain configuration")
    g.add_argument("--n-atoms", "-N", type=int, dest="n_atoms")
    g.add_argument("--xi", type=parse_angle, help="radians; accepts forms like pi/4")
    g.add_argument("--directionality", "-D", type=float, dest="directionality")
    g.add_argument("--rabi", type=float)
    g.add_argument("--theta-s", type=parse_angle, dest="theta_s")
    g.add_argument("--detuning-type", choices=("uniform", "linear", "harmonic"))
    g.add_argument("--detuning-value", type=float)


def _output_args(p):
    p.add_argument("--out", help="output file (stdout if omitted)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")


def _build_parser():
    parser = _Parser(prog="chiralchain", description="Weakly driven chiral-coupled atomic chains.")
    parser.add_argument("--version", action="version", version=f"chiralchain {__version__}")
    parser.add_argument("--workers", type=int, help="worker processes (default $CHIRAL_CHAIN_WORKERS or 1)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("matrix", help="coupling matrix M")
    _config_args(p)
    _output_args(p)

    p = sub.add_parser("steady", help="steady state")
    _config_args(p)
    _output_args(p)

    p = sub.add_parser("spectrum", help="eigenvalues of M sorted by decay rate")
    _config_args(p)
    _output_args(p)

    p = sub.add_parser("dynamics", help="trajectory, traversal time or oscillation metric")
    _config_args(p)
    _output_args(p)
    p.add_argument("--mode", choices=("trajectory", "traversal", "subharmonic"), default="trajectory")
    p.add_argument("--t-end", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=0.5)
    p.add_argument("--t-start", type=float, default=0.0, help="window start for --mode subharmonic")
    p.add_argument("--initial", choices=("ground", "steady"), default="ground")
    p.add_argument("--rescale", action="store_true", help="add a t/1000 column")
    p.add_argument("--fraction", type=float, default=0.5, help="threshold for --mode traversal")
    p.add_argument("--t-max", type=float, default=1e6)

    p = sub.add_parser("transport", help="T_p versus linear-detuning slope")
    _config_args(p)
    _output_args(p)
    p.add_argument("--slopes", type=float, nargs=3, metavar=("START", "STOP", "NUM"),
                   help="linspace of slopes; default: the configured detuning only")

    p = sub.add_parser("phase-diagram", help="classify a (D, xi) grid")
    _config_args(p)
    p.add_argument("--d-grid", type=float, nargs=3, metavar=("START", "STOP", "NUM"), default=(0.0, 1.0, 41))
    p.add_argument("--xi-grid", type=parse_angle, nargs=3, metavar=("START", "STOP", "NUM"),
                   default=(math.pi / 41, math.pi, 41))
    p.add_argument("--sizes", type=int, nargs="+", default=list(DEFAULT_SIZES))
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=cio.FORMATS, default="csv", dest="fmt")

    p = sub.add_parser(
        "recipe",
        help="data behind one figure: " + ", ".join(RECIPES),
        description="recipes:\n" + "\n".join(f"  {k:<6} {v[1]}" for k, v in RECIPES.items()),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("name")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=cio.FORMATS, default="csv", dest="fmt")

    p = sub.add_parser("fit", help="finite-size fits")
    p.add_argument("kind", choices=("power", "thermo"))
    p.add_argument("--sizes", type=float, nargs="+", required=True)
    p.add_argument("--values", type=float, nargs="+", required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")
    return parser


def load_config(args):
    """Merge ``--config`` with flag overrides into a :class:`ChainConfig`."""
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"config: cannot read {args.config}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config: invalid JSON ({exc.msg})") from None
        if not isinstance(data, dict):
            raise UsageError("config: expected a JSON object")
    for key in ("n_atoms", "xi", "directionality", "rabi", "theta_s"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if args.detuning_type is not None or args.detuning_value is not None:
        det = dict(data.get("detuning") or {"type": "uniform", "params": {"value": 0.0}})
        if args.detuning_type is not None:
            det["type"] = args.detuning_type
        if args.detuning_value is not None:
            det["params"] = {"value": args.detuning_value}
        data["detuning"] = det
    if command_needs_size(args) and "n_atoms" not in data:
        raise UsageError("config: missing key 'n_atoms'")
    if "xi" not in data:
        raise UsageError("config: missing key 'xi'")
    try:
        return ChainConfig.from_dict(data)
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def command_needs_size(args):
    return args.command != "phase-diagram"


def _emit(args, columns, rows, meta):
    text = cio.render(columns, rows, meta, args.fmt)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_matrix(args):
    cfg = load_config(args)
    m = build_coupling_matrix(cfg)
    rows = [(i + 1, j + 1, m[i, j].real, m[i, j].imag) for i in range(cfg.n_atoms) for j in range(cfg.n_atoms)]
    _emit(args, ("row", "col", "re", "im"), rows, cio.metadata(config=cfg.to_dict()))


def _cmd_steady(args):
    cfg = load_config(args)
    st = steady_state(cfg)
    meta = cio.metadata(config=cfg.to_dict(), residual=st.residual, condition_estimate=st.condition_estimate)
    _emit(args, ("site", "re_sigma", "im_sigma", "population", "normalized"), st.rows(), meta)


def _cmd_spectrum(args):
    cfg = load_config(args)
    spec = eigen_spectrum(build_coupling_matrix(cfg))
    _emit(args, ("n", "decay_rate", "shift"), spec.rows(), cio.metadata(config=cfg.to_dict()))


def _cmd_dynamics(args):
    cfg = load_config(args)
    meta = {"config": cfg.to_dict(), "mode": args.mode}
    if args.mode == "traversal":
        tc = traversal_time(cfg, args.fraction, t_max=args.t_max)
        meta["threshold_fraction"] = args.fraction
        _emit(args, ("t_c",), [(tc,)], cio.metadata(**meta))
        return
    if args.dt <= 0 or args.t_end <= 0:
        raise UsageError("--dt and --t-end must be positive")
    grid = np.linspace(0.0, args.t_end, int(round(args.t_end / args.dt)) + 1)
    sigma0 = steady_state(cfg).sigma if args.initial == "steady" else None
    traj = propagate(cfg, sigma0, grid)
    meta.update(t_end=args.t_end, dt=args.dt, initial=args.initial)
    if args.mode == "subharmonic":
        keep = grid >= args.t_start
        period, persistence = subharmonic_metric(traj.total_population_t[keep], grid[keep])
        meta["window"] = [args.t_start, args.t_end]
        _emit(args, ("period", "persistence"), [(period, persistence)], cio.metadata(**meta))
        return
    meta["rescale"] = "t/1000" if args.rescale else None
    _emit(args, trajectory_columns(cfg.n_atoms, args.rescale), traj.rows(args.rescale), cio.metadata(**meta))


def _cmd_transport(args):
    cfg = load_config(args)
    if args.slopes is None:
        tp = transport_imbalance(steady_state(cfg).normalized)
        _emit(args, ("t_p",), [(tp,)], cio.metadata(config=cfg.to_dict()))
        return
    start, stop, num = args.slopes
    if num < 1 or num != int(num):
        raise UsageError("--slopes NUM must be a positive integer")
    rows = []
    for s in np.linspace(start, stop, int(num)):
        c = cfg.with_(detuning=Detuning.linear(float(s)))
        rows.append((float(s), transport_imbalance(steady_state(c).normalized)))
    _emit(args, ("slope", "t_p"), rows, cio.metadata(config=cfg.to_dict(), slopes=list(args.slopes)))


def _grid(triple, name):
    start, stop, num = triple
    if num != int(num) or num < 1:
        raise UsageError(f"{name}: grid is empty (NUM must be a positive integer)")
    return tuple(np.linspace(start, stop, int(num)))


def _cmd_phase_diagram(args):
    if args.n_atoms is None and not args.config:
        args.n_atoms = max(args.sizes)
    if args.xi is None:
        args.xi = 0.0
    base = load_config(args)
    try:
        spec = SweepSpec(_grid(args.d_grid, "d-grid"), _grid(args.xi_grid, "xi-grid"),
                         tuple(args.sizes), base, args.out, args.fmt)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    points = run_phase_diagram(spec, args.workers)
    counts = {}
    for pt in points:
        counts[pt.label.value] = counts.get(pt.label.value, 0) + 1
    sys.stdout.write(json.dumps({"cells": len(points), "labels": counts}, sort_keys=True) + "\n")


def _cmd_recipe(args):
    if args.name not in RECIPES:
        raise UsageError(f"unknown recipe {args.name!r}; valid: {', '.join(RECIPES)}")
    for path in run_figure_recipe(args.name, args.out, args.fmt, args.workers):
        sys.stdout.write(path + "\n")


def _cmd_fit(args):
    if len(args.sizes) != len(args.values):
        raise UsageError("--sizes and --values differ in length")
    try:
        fit = (fit_pr_scaling if args.kind == "power" else fit_structure_thermo)(args.sizes, args.values)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    names = sorted(fit.params)
    _emit(args, ("kind", *names, "residual"), [(fit.kind, *(fit.params[k] for k in names), fit.residual)],
          cio.metadata(sizes=args.sizes, values=args.values))


_COMMANDS = {
    "matrix": _cmd_matrix,
    "steady": _cmd_steady,
    "spectrum": _cmd_spectrum,
    "dynamics": _cmd_dynamics,
    "transport": _cmd_transport,
    "phase-diagram": _cmd_phase_diagram,
    "recipe": _cmd_recipe,
    "fit": _cmd_fit,
}


def _fail(kind, message, code, **extra):
    payload = cio.finite({"error": kind, "message": message, **extra})
    sys.stderr.write("error: " + json.dumps(payload, sort_keys=True) + "\n")
    return code


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.workers is not None and args.workers < 1:
            raise UsageError("--workers must be >= 1")
        _COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("usage", str(exc), 2)
    except ChainError as exc:
        extra = {}
        if getattr(exc, "condition", None) is not None:
            extra["condition_estimate"] = exc.condition
        if getattr(exc, "time", None) is not None:
            extra["time"] = exc.time
        return _fail(type(exc).__name__, str(exc), 1, **extra)
    except OSError as exc:
        return _fail("io", f"{exc.filename or ''}: {exc.strerror or exc}", 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Subcommands read and write the JSON system format, so builders pipe into
analyses::

    repdim takagi --beta 2 --lambda 0.75 | repdim root
    repdim interp --data nodes.json --assign T1 | repdim root

Exit codes: 0 success, 1 invalid input, 2 budget or convergence failure.
Errors are reported as one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import errors
from .approx import convergence_table, default_iterates
from .builders import (
    PRESET_LAMBDAS,
    PRESET_NODES,
    PRESET_ASSIGNMENTS,
    InterpolationData,
    interpolation_system,
    multivariable_takagi,
    takagi_closed_form,
    takagi_system,
)
from .conditions import justify_dimension
from .core import SkewSystem, parse_number
from .estimation import attractor_cover, box_count_dimension, sample_graph, takagi_surface
from .jsonio import dumps_report, dumps_system, loads_system, round_sig
from .pressure import dimension_root, pressure_at
from .render import ImageSpec, render


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors, not computation failures
    def error(self, message):
        raise errors.ValidationError(message)


def _fmt(x) -> str:
    return f"{round_sig(float(x), 10):.10g}"


def _read_system(path) -> SkewSystem:
    if path in (None, "-"):
        text = sys.stdin.read()
    else:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise errors.ValidationError(f"cannot read {path}: {exc.strerror}") from None
    return loads_system(text)


def _with_meta(system, **extra):
    meta = dict(system.meta or {})
    meta.update(extra)
    return dataclasses.replace(system, meta=meta)


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise errors.ValidationError(f"expected comma-separated integers, got {text!r}") from None


def _assignment(text):
    if text in PRESET_ASSIGNMENTS:
        return PRESET_ASSIGNMENTS[text]
    try:
        pairs = [tuple(int(v) for v in p.split(",")) for p in text.split(";")]
    except ValueError:
        raise errors.BadAssignment(f"assignment must be a preset or 'k,l;k,l;...', got {text!r}") from None
    if any(len(p) != 2 for p in pairs):
        raise errors.BadAssignment(f"each assignment entry needs two indices, got {text!r}")
    return tuple(pairs)


def _load_nodes(path):
    if path is None:
        return PRESET_NODES, PRESET_LAMBDAS
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise errors.MalformedSystem(f"cannot read interpolation data {path}: {exc}") from None
    if isinstance(raw, list):
        return raw, None
    if not isinstance(raw, dict) or "nodes" not in raw:
        raise errors.MalformedSystem("interpolation data needs a 'nodes' list")
    return raw["nodes"], raw.get("lambdas")


# --------------------------------------------------------------------------- commands


def cmd_root(args, out):
    system = _read_system(args.input)
    report = dimension_root(system, justify=args.justify)
    out.write(dumps_report(report) + "\n")


def cmd_pressure(args, out):
    system = _read_system(args.input)
    out.write(_fmt(pressure_at(system, s=args.s)) + "\n")


def cmd_check(args, out):
    system = _read_system(args.input)
    report = justify_dimension(system, depth=args.depth, horizon=args.horizon)
    out.write(dumps_report(report) + "\n")


def cmd_interp(args, out):
    nodes, lambdas = _load_nodes(args.data)
    if args.lambdas:
        lambdas = [parse_number(v) for v in args.lambdas.split(",")]
    if lambdas is None:
        raise errors.MalformedSystem("fiber ratios missing: pass --lambdas or include them in the data file")
    system = interpolation_system(InterpolationData.create(nodes, _assignment(args.assign), lambdas))
    out.write(dumps_system(system) + "\n")


def cmd_takagi(args, out):
    beta, lam = parse_number(args.beta), parse_number(args.lam)
    system = takagi_system(beta, lam)
    system = _with_meta(system, closed_form_dimension=round_sig(takagi_closed_form(beta, lam)))
    out.write(dumps_system(system) + "\n")


def cmd_mtakagi(args, out):
    res = multivariable_takagi(_ints(args.betas), parse_number(args.lam))
    dim = round_sig(res.dimension)
    if res.system is None:
        payload = {"system": None, "closed_form_dimension": dim, "betas": list(res.betas), "notes": list(res.notes)}
        out.write(json.dumps(payload, indent=2) + "\n")
        return
    out.write(dumps_system(_with_meta(res.system, closed_form_dimension=dim)) + "\n")


def cmd_markov_approx(args, out):
    system = _read_system(args.input)
    ks = _ints(args.ks) if args.ks else default_iterates(system)
    lam = parse_number(args.lam) if args.lam else None
    out.write("k,entropy,s_m\n")
    for k, h, s in convergence_table(system, ks, lam):
        out.write(f"{k},{_fmt(h)},{_fmt(s)}\n")


def _graph_points(system, n, N):
    xs = np.arange(n) / (n - 1) if n > 1 else np.zeros(1)
    g = sample_graph(system, xs, N)
    return xs, g.ys


def cmd_boxcount(args, out):
    system = _read_system(args.input)
    if args.source == "cover":
        res = box_count_dimension(attractor_cover(system, args.depth))
    else:
        xs, ys = _graph_points(system, args.samples, args.N)
        res = box_count_dimension(np.column_stack([xs, ys]), mode=args.mode)
    out.write(res.csv())
    out.write(f"# slope={_fmt(res.slope)} r2={_fmt(res.r2)} window={res.window[0]}:{res.window[1]} mode={res.mode}\n")


def cmd_sample(args, out):
    system = _read_system(args.input)
    xs, ys = _graph_points(system, args.samples, args.N)
    out.write("x,y\n")
    for x, y in zip(xs, ys):
        out.write(f"{_fmt(x)},{_fmt(y)}\n")


def cmd_render(args, out):
    system = _read_system(args.input)
    spec = ImageSpec(args.width, args.height, args.format)
    meta = system.meta or {}
    if args.what == "cover":
        data = render(attractor_cover(system, args.depth), spec)
    elif system.d == 2 and meta.get("family") == "mtakagi":
        grid = np.arange(args.samples) / (args.samples - 1)
        Z, _ = takagi_surface(meta["betas"], meta["lambda"], (grid, grid), args.N)
        data = render(Z, spec, surface=True)
    else:
        xs, ys = _graph_points(system, args.samples, args.N)
        data = render(np.column_stack([xs, ys]), spec)
    try:
        with open(args.output, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise errors.ValidationError(f"cannot write {args.output}: {exc.strerror}") from None
    out.write(json.dumps({"output": args.output, "bytes": len(data), "format": args.format}) + "\n")


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="repdim", description="Dimension of repellers of piecewise affine skew products.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_input(sp):
        sp.add_argument("input", nargs="?", default="-", help="system JSON file (default: stdin)")
        return sp

    d = argparse.ArgumentDefaultsHelpFormatter
    sp = with_input(sub.add_parser("root", help="zero of the pressure (DimensionReport JSON)", formatter_class=d))
    sp.add_argument("--justify", action="store_true", help="attach the hypothesis checks")
    sp.set_defaults(func=cmd_root)

    sp = with_input(sub.add_parser("pressure", help="pressure at s", formatter_class=d))
    sp.add_argument("--s", type=float, required=True, help="singular-value exponent")
    sp.set_defaults(func=cmd_pressure)

    sp = with_input(sub.add_parser("check", help="hypothesis checks (HypothesisReport JSON)", formatter_class=d))
    sp.add_argument("--depth", type=int, default=4, help="word length for the non-diagonality search")
    sp.add_argument("--horizon", type=int, default=12, help="separation-evidence horizon")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("interp", help="fractal interpolation system JSON", formatter_class=d)
    sp.add_argument("--data", help="JSON with 'nodes' (and optionally 'lambdas'); default: the built-in 4-node set")
    sp.add_argument("--assign", default="T1", help="preset T1/T2 or explicit 'k,l;k,l;...'")
    sp.add_argument("--lambdas", help="comma-separated fiber ratios, overriding the data file")
    sp.set_defaults(func=cmd_interp)

    sp = sub.add_parser("takagi", help="beta-Takagi system JSON", formatter_class=d)
    sp.add_argument("--beta", required=True, help="base slope, e.g. 2 or 3/2")
    sp.add_argument("--lambda", dest="lam", required=True, help="graph weight in (1/beta, 1)")
    sp.set_defaults(func=cmd_takagi)

    sp = sub.add_parser("mtakagi", help="multivariable Takagi system JSON", formatter_class=d)
    sp.add_argument("--betas", required=True, help="comma-separated integer slopes, e.g. 2,2")
    sp.add_argument("--lambda", dest="lam", required=True, help="graph weight in (1/max beta, 1)")
    sp.set_defaults(func=cmd_mtakagi)

    sp = with_input(sub.add_parser("markov-approx", help="Markov approximation table (CSV)", formatter_class=d))
    sp.add_argument("--ks", help="comma-separated iterates (default: three even iterates past the threshold)")
    sp.add_argument("--lambda", dest="lam", help="Takagi graph weight for the embedded fiber maps")
    sp.set_defaults(func=cmd_markov_approx)

    sp = with_input(sub.add_parser("boxcount", help="box-counting regression (CSV + slope)", formatter_class=d))
    sp.add_argument("--source", choices=("samples", "cover"), default="samples")
    sp.add_argument("--samples", type=int, default=65536, help="graph samples on a uniform grid")
    sp.add_argument("--N", type=int, default=40, help="truncation depth for graph sampling")
    sp.add_argument("--depth", type=int, default=10, help="cover depth")
    sp.add_argument("--mode", choices=("graph", "points"), default="graph", help="count rule for samples")
    sp.set_defaults(func=cmd_boxcount)

    sp = with_input(sub.add_parser("sample", help="graph samples (CSV x,y)", formatter_class=d))
    sp.add_argument("--samples", type=int, default=1025)
    sp.add_argument("--N", type=int, default=40)
    sp.set_defaults(func=cmd_sample)

    sp = with_input(sub.add_parser("render", help="draw the graph, a cover or a heightmap", formatter_class=d))
    sp.add_argument("--output", required=True)
    sp.add_argument("--format", choices=("ppm", "svg"), default="ppm")
    sp.add_argument("--width", type=int, default=800)
    sp.add_argument("--height", type=int, default=600)
    sp.add_argument("--what", choices=("graph", "cover"), default="graph")
    sp.add_argument("--depth", type=int, default=8)
    sp.add_argument("--samples", type=int, default=4097)
    sp.add_argument("--N", type=int, default=40)
    sp.set_defaults(func=cmd_render)
    return p


def main(argv=None, stdout=None, stderr=None) -> int:
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "samples", 2) < 2:
            raise errors.ValidationError("--samples must be at least 2")
        args.func(args, out)
        return 0
    except errors.RepdimError as exc:
        code = 2 if isinstance(exc, errors.ComputationError) else 1
        err.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit": code}) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())

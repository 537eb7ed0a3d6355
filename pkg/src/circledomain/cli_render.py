"""Command line entry point and SVG output.

Exit codes: 0 success, 2 invalid input, 3 a solver stopped without
converging (its best result is still written), 4 file errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from .domain_model import (
    AnnulusShape,
    DiskShape,
    DomainSpec,
    PointShape,
    PolygonShape,
    classify,
    load_domain,
    validate_domain,
)
from .errors import DomainError, InvalidParameter, MaxIterExceeded, MaxRoundsExceeded
from .exhaustion_driver import circle_domain_spec, kernel_report, plan_exhaustion, run_exhaustion
from .gap_ratio import build_radii_ladder, rho_estimate
from .koebe_uniformizer import CircleDomain, koebe_iterate
from .transboundary_modulus import EnclosingFamily, SeparatingFamily, build_quotient_grid, solve_modulus
from .transboundary_modulus.grid import OMEGA, QuotientGrid

log = logging.getLogger("circledomain")

EXIT_OK, EXIT_INVALID, EXIT_NOT_CONVERGED, EXIT_IO = 0, 2, 3, 4


class _IOFailure(Exception):
    pass


# ---------------------------------------------------------------- JSON


def _clean(obj):
    """Make ``obj`` strict-JSON serializable: complex -> [x, y], non-finite -> null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(float(obj.real)), _clean(float(obj.imag))]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def _write(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc.strerror or exc}") from None


# ---------------------------------------------------------------- SVG


def _fmt(x: float) -> str:
    s = f"{x:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _cell_outline(grid: QuotientGrid, i: int, j: int) -> np.ndarray:
    u = grid.u0 + np.array([i, i + 1, i + 1, i]) * grid.h
    v = grid.v0 + np.array([j, j, j + 1, j + 1]) * grid.h
    return grid.to_physical(u + 1j * v)


def _shape_elements(spec: DomainSpec, dot: float) -> list[str]:
    out = []
    for comp in spec:
        s = comp.shape
        tag = f'id="{comp.id}"'
        if isinstance(s, DiskShape):
            c = s.center
            out.append(f'<circle {tag} cx="{_fmt(c.real)}" cy="{_fmt(-c.imag)}" r="{_fmt(s.radius)}"/>')
        elif isinstance(s, PointShape):
            out.append(f'<circle {tag} cx="{_fmt(s.at.real)}" cy="{_fmt(-s.at.imag)}" r="{_fmt(dot)}"/>')
        elif isinstance(s, AnnulusShape):
            c = s.center
            d = " ".join(
                f"M {_fmt(c.real + r)} {_fmt(-c.imag)} a {_fmt(r)} {_fmt(r)} 0 1 0 {_fmt(-2 * r)} 0 "
                f"a {_fmt(r)} {_fmt(r)} 0 1 0 {_fmt(2 * r)} 0 Z"
                for r in (s.r_out, s.r_in)
            )
            out.append(f'<path {tag} d="{d}" fill-rule="evenodd"/>')
        else:
            pts = s.array if isinstance(s, PolygonShape) else s.sample_boundary(256)
            d = " ".join(f"{_fmt(z.real)},{_fmt(-z.imag)}" for z in pts)
            out.append(f'<polygon {tag} points="{d}"/>')
    return out


def render_svg(
    shapes,
    path: str | None = None,
    window=None,
    metric=None,
    grid: QuotientGrid | None = None,
    outline: DomainSpec | None = None,
) -> str:
    """SVG of a domain (a ``DomainSpec`` or ``CircleDomain``).

    Components are filled, the domain is white and y points up.  A metric
    on ``grid`` is drawn as one cell per nonzero weight with opacity
    proportional to the weight; ``outline`` adds a second domain drawn
    unfilled (the input of a uniformization, say).  ``window`` is
    (xmin, ymin, xmax, ymax) and defaults to the grid window or the padded
    bounding box.  Returns the text and writes it when ``path`` is given.
    """
    spec = circle_domain_spec(shapes) if isinstance(shapes, CircleDomain) else shapes
    if window is None:
        if grid is not None:
            window = grid.physical_bbox()
        else:
            boxes = [spec.bbox()] + ([outline.bbox()] if outline is not None and len(outline) else [])
            x0 = min(b[0] for b in boxes)
            y0 = min(b[1] for b in boxes)
            x1 = max(b[2] for b in boxes)
            y1 = max(b[3] for b in boxes)
            pad = 0.1 * max(x1 - x0, y1 - y0, 1e-9)
            window = (x0 - pad, y0 - pad, x1 + pad, y1 + pad)
    x0, y0, x1, y1 = map(float, window)
    w, h = x1 - x0, y1 - y0
    size = max(w, h)
    out = [
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{_fmt(x0)} {_fmt(-y1)} {_fmt(w)} {_fmt(h)}" width="600" height="{_fmt(600 * h / w)}">',
        f'<rect x="{_fmt(x0)}" y="{_fmt(-y1)}" width="{_fmt(w)}" height="{_fmt(h)}" fill="white"/>',
    ]
    if metric is not None and grid is not None:
        cells = np.asarray(metric, dtype=float)[: grid.n_cells]
        top = float(cells.max()) if cells.size and cells.max() > 0 else 1.0
        out.append('<g fill="#d62728" stroke="none">')
        for node in np.nonzero(cells > 0)[0].tolist():
            i, j = divmod(node, grid.nv)
            if grid.cell_class[i, j] != OMEGA:
                continue
            op = _fmt(cells[node] / top)
            if grid.chart == "cartesian":
                cx, cy = grid.u0 + i * grid.h, grid.v0 + j * grid.h
                out.append(
                    f'<rect x="{_fmt(cx)}" y="{_fmt(-(cy + grid.h))}" width="{_fmt(grid.h)}" '
                    f'height="{_fmt(grid.h)}" fill-opacity="{op}"/>'
                )
            else:
                pts = " ".join(f"{_fmt(z.real)},{_fmt(-z.imag)}" for z in _cell_outline(grid, i, j))
                out.append(f'<polygon points="{pts}" fill-opacity="{op}"/>')
        out.append("</g>")
    stroke = _fmt(0.002 * size)
    out.append(f'<g fill="#4c72b0" stroke="#1f3b6e" stroke-width="{stroke}">')
    out += _shape_elements(spec, 0.005 * size)
    out.append("</g>")
    if outline is not None:
        out.append(f'<g fill="none" stroke="#888888" stroke-width="{stroke}" stroke-dasharray="{_fmt(0.01 * size)}">')
        out += [e.replace(' id="', ' class="', 1) for e in _shape_elements(outline, 0.005 * size)]
        out.append("</g>")
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        _write(path, text)
    return text


# ---------------------------------------------------------------- commands


def _parse_q(text: str | None):
    if text is None:
        return None
    parts = text.split(",")
    if len(parts) == 2:
        try:
            return complex(float(parts[0]), float(parts[1]))
        except ValueError:
            pass
    return text  # a component id


def _load(args) -> DomainSpec:
    if args.inp is None:
        raise DomainError("--in is required")
    try:
        return load_domain(args.inp)
    except OSError as exc:
        raise _IOFailure(f"cannot read {args.inp}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise DomainError(f"{args.inp} is not valid JSON: {exc.msg}") from None


def cmd_analyze(args) -> int:
    spec = _load(args)
    report = {"nondegeneracy": classify(spec).to_json()}
    if args.b is not None:
        delta = args.delta if args.delta is not None else math.inf
        gr = rho_estimate(spec, args.b, delta)
        if args.r0 is not None:
            gr.ladder = build_radii_ladder(spec, args.b, spec.get(args.b).shape.reference_point, args.r0)
        report["gap_ratio"] = gr.to_json()
        report["rho_estimate"] = gr.rho
    _write(args.out, dumps(report))
    if args.svg:
        render_svg(spec, args.svg)
    return EXIT_OK


def _modulus_setup(spec: DomainSpec, args):
    if args.b is None:
        raise DomainError("modulus needs --b")
    core = spec.get(args.b).shape
    center = complex(getattr(core, "center", core.reference_point))
    q = _parse_q(args.q)
    family_kind = args.family or ("separating" if q is not None else "enclosing")
    chart = args.chart
    beta = None
    if args.r_out is not None:
        chart = "logpolar"
    if chart == "logpolar":
        inner = float(np.abs(core.sample_boundary(2048) - center).min()) if not isinstance(core, PointShape) else 0.0
        if args.r_out is not None:
            r_out = args.r_out
        else:
            x0, y0, x1, y1 = spec.bbox()
            r_out = 1.25 * max(abs(complex(x, y) - center) for x in (x0, x1) for y in (y0, y1))
        r_in = inner if inner > 0 else 1e-3 * r_out
        window = (center.real, center.imag, r_in, r_out)
        beta = tuple((center + r_out * (1 + 1e-9) * np.exp(2j * np.pi * np.arange(720) / 720)).tolist())
    else:
        x0, y0, x1, y1 = spec.bbox()
        pad = 0.25 * max(x1 - x0, y1 - y0)
        window = (x0 - pad, y0 - pad, x1 + pad, y1 + pad)
    grid = build_quotient_grid(spec, window, args.n, chart)
    if family_kind == "separating":
        if q is None:
            raise DomainError("the separating family needs --q")
        family = SeparatingFamily(q, args.b, beta)
    elif family_kind == "enclosing":
        family = EnclosingFamily(args.b, beta)
    else:
        raise DomainError(f"unknown family {family_kind!r}")
    return grid, family


def cmd_modulus(args) -> int:
    spec = _load(args)
    grid, family = _modulus_setup(spec, args)
    code = EXIT_OK
    try:
        res = solve_modulus(grid, family, tol=args.tol, max_iter=args.max_iter, batch=args.batch, seed=args.seed)
    except MaxIterExceeded as exc:
        res, code = exc.result, EXIT_NOT_CONVERGED
        print(f"MaxIterExceeded: {exc}", file=sys.stderr)
    out = res.to_json()
    out["grid"] = {"chart": grid.chart, "n": args.n, "h": grid.h, "shape": [grid.nu, grid.nv]}
    out["warnings"] = list(res.warnings)
    _write(args.out, dumps(out))
    if args.svg:
        render_svg(spec, args.svg, metric=res.metric, grid=grid)
    return code


def _circle_json(cd: CircleDomain, trace) -> dict:
    out = cd.to_json()
    out["trace"] = trace.to_json() if trace is not None else None
    return out


def cmd_uniformize(args) -> int:
    spec = _load(args)
    code = EXIT_OK
    try:
        cd, _, trace = koebe_iterate(spec, args.roundness_target, args.max_rounds, args.samples)
    except MaxRoundsExceeded as exc:
        cd, trace, code = exc.circle_domain, exc.trace, EXIT_NOT_CONVERGED
        print(f"MaxRoundsExceeded: {exc}", file=sys.stderr)
    _write(args.out, dumps(_circle_json(cd, trace)))
    if args.svg:
        render_svg(cd, args.svg, outline=spec)
    return code


def cmd_exhaust(args) -> int:
    spec = _load(args)
    plan = plan_exhaustion(spec, args.batch)
    tracked = [t for t in (args.b, *(args.track or [])) if t is not None]
    if not tracked and plan.order:
        tracked = [plan.order[0]]
    trace = run_exhaustion(
        plan,
        roundness_target=args.roundness_target,
        tracked=tracked,
        max_rounds=args.max_rounds,
        samples=args.samples,
        witness=not args.no_witness,
        seed=args.seed,
    )
    _write(args.out, trace.to_jsonl())
    if args.svg and trace.stages:
        render_svg(trace.stages[-1].circle_domain, args.svg)
    if trace.b is not None and len(trace.stages) >= 2:
        log.info("kernel report: %s", json.dumps(_clean(kernel_report(trace, trace.b).to_json()), sort_keys=True))
    return EXIT_NOT_CONVERGED if trace.failure else EXIT_OK


def cmd_render(args) -> int:
    if args.inp is None:
        raise DomainError("--in is required")
    try:
        with open(args.inp, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise _IOFailure(f"cannot read {args.inp}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise DomainError(f"{args.inp} is not valid JSON: {exc.msg}") from None
    if isinstance(raw, dict) and "disks" in raw:
        shapes = CircleDomain.from_json(raw)
    else:
        shapes = validate_domain(raw)
    render_svg(shapes, args.svg or args.out or "-")
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "modulus": cmd_modulus,
    "uniformize": cmd_uniformize,
    "exhaust": cmd_exhaust,
    "render": cmd_render,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="circledomain", description="Circle-domain geometry toolkit.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--in", dest="inp", metavar="FILE")
    p.add_argument("--out", metavar="FILE", help="output file (default: stdout)")
    p.add_argument("--svg", metavar="FILE")
    p.add_argument("--n", type=int, default=128, help="grid cells along the longer side")
    p.add_argument("--tol", type=float, default=0.02)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--roundness-target", type=float, default=1e-3)
    p.add_argument("--max-rounds", type=int, default=100)
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--r0", type=float, default=None, help="starting radius of the radii ladder")
    p.add_argument("--b", metavar="ID")
    p.add_argument("--q", metavar="X,Y|ID")
    p.add_argument("--track", metavar="ID", action="append")
    p.add_argument("--family", choices=["separating", "enclosing"])
    p.add_argument("--chart", choices=["cartesian", "logpolar"], default="cartesian")
    p.add_argument("--r-out", type=float, default=None, help="outer radius of a log-polar window about b")
    p.add_argument("--no-witness", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    return p


def _configure_logging():
    level = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("TOOL_LOG", "").lower(), logging.WARNING
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)


def _check_flags(args):
    if args.n < 16:
        raise InvalidParameter("--n must be at least 16")
    if args.batch < 1:
        raise InvalidParameter("--batch must be at least 1")
    if args.seed < 0:
        raise InvalidParameter("--seed must be non-negative")
    if args.delta is not None and not args.delta > 0:
        raise InvalidParameter("--delta must be positive")
    if args.command in ("analyze", "modulus") and args.b is None and (args.delta is not None or args.q is not None):
        raise InvalidParameter("--delta and --q need --b")


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    if args.batch is None:
        args.batch = 2 if args.command == "exhaust" else 64
    try:
        _check_flags(args)
        return COMMANDS[args.command](args)
    except _IOFailure as exc:
        print(f"IOError: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

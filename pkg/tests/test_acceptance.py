"""Acceptance criteria, one test each.

Every test prints a single PASS/FAIL line (also collected in the terminal
summary) before asserting.  Expected values come from closed forms or
independent brute force, never from the code under test.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from circledomain import fixtures, validate_domain
from circledomain.domain_model import AnnulusShape, DiskShape, PointShape, PolygonShape, classify, kappa, transform_spec
from circledomain.exhaustion_driver import kernel_report, plan_exhaustion, run_exhaustion, spec_contains
from circledomain.gap_ratio import build_radii_ladder, el_upper_bound, gr_pair, gr_point
from circledomain.koebe_uniformizer import exterior_map, koebe_iterate, map_apply
from circledomain.sphere_geom import affine, identity, inversion, similarity
from circledomain.transboundary_modulus import (
    EnclosingFamily,
    SeparatingFamily,
    build_quotient_grid,
    invariance_sweep,
    solve_modulus,
)

from conftest import circle
from test_gap_ratio import brute_pair

pytestmark = pytest.mark.acceptance


def test_criterion_1_kappa(record):
    t0 = time.perf_counter()
    disk = kappa(DiskShape(0, 1.0))
    square = kappa(PolygonShape((0, 1, 1 + 1j, 1j)))
    checks = {
        "kappa(disk) = pi/4": abs(disk - math.pi / 4) <= 1e-12,
        "kappa(square) = 1/2": abs(square - 0.5) <= 1e-12,
    }
    record(1, "kappa oracle", checks, time.perf_counter() - t0, 1.0, f"disk {disk:.15f} square {square:.15f}")


def test_criterion_2_gap_ratio(record):
    t0 = time.perf_counter()
    point = gr_point(PointShape(2 + 1j), -1.0)
    # thin concentric rings of radii 1 and 3: for w on the outer ring the
    # inner one spans distances 2 to 4, so the ratio is near 2, not 1
    rings = gr_pair(AnnulusShape(0, 1.0, 1.001), AnnulusShape(0, 3.0, 3.001))
    a, b = DiskShape(0, 1.0), DiskShape(4, 1.0)
    exact = gr_pair(a, b)
    brute = brute_pair(a, b, 10_000)
    checks = {
        "gr_point(point) = 1": point == 1.0,
        "gr_pair(concentric rings) = 1 +- 1e-6": abs(rings - 1) <= 1e-6,
        "gr_pair(disk pair) = 2 +- 1e-3 (brute force)": abs(brute - 2) <= 1e-3 and abs(exact - 2) <= 1e-3,
    }
    detail = f"point {point} rings {rings:.6f} pair {exact:.9f} brute {brute:.6f}"
    record(2, "gap ratio oracles", checks, time.perf_counter() - t0, 5.0, detail)


def test_criterion_3_similarity_invariance(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for raw in (fixtures.disk_pair(), fixtures.two_squares()):
        spec = validate_domain(raw)
        a, b = spec.ids
        before = gr_pair(spec.get(a), spec.get(b))
        for _ in range(100):
            T = similarity(
                float(np.exp(rng.uniform(-3, 3))), rng.uniform(0, 2 * math.pi), complex(*rng.uniform(-50, 50, 2))
            )
            moved = transform_spec(spec, T)
            worst = max(worst, abs(gr_pair(moved.get(a), moved.get(b)) - before) / before)
    checks = {"relative change <= 1e-9": worst <= 1e-9}
    record(3, "similarity invariance of gr_pair", checks, time.perf_counter() - t0, 5.0, f"worst {worst:.2e}")


@pytest.mark.parametrize("log_ratio, expected", [(2 * math.pi, 1.0), (math.pi, 2.0)])
def test_criterion_4_annulus(record, log_ratio, expected):
    t0 = time.perf_counter()
    R = math.exp(log_ratio)
    spec = validate_domain(fixtures.annulus_core())
    grid = build_quotient_grid(spec, (0, 0, 1.0, R), 256, "logpolar")
    res = solve_modulus(grid, EnclosingFamily("b", tuple(circle(0, R * (1 + 1e-9), 1440))))
    checks = {
        f"EL = {expected:g} +- 5%": abs(res.el - expected) <= 0.05 * expected,
        "iterations <= 200": res.iterations <= 200,
    }
    detail = f"log(R/r) = {log_ratio:.4f}: EL {res.el:.6f} in {res.iterations} iterations"
    record(4, "annulus extremal length", checks, time.perf_counter() - t0, 60.0, detail)


def test_criterion_5_conformal_invariance(record, disk_pair):
    t0 = time.perf_counter()
    family = SeparatingFamily("a", "b", tuple(circle(4, 6.5)))
    same, sim, inv = invariance_sweep(
        disk_pair,
        family,
        [identity(), affine(2, 1), inversion(40 + 30j)],
        256,
        tol=0.05,
        window=(4, 0, 1.0, 7.0),
        chart="logpolar",
    )
    checks = {
        "identity rel_diff = 0": same["rel_diff"] == 0.0,
        "similarity rel_diff <= 5%": sim["rel_diff"] <= 0.05,
        "inversion rel_diff <= 10%": inv["rel_diff"] <= 0.10,
    }
    detail = f"EL {same['el_before']:.4f}; similarity {sim['rel_diff']:.4f}; inversion {inv['rel_diff']:.4f}"
    record(5, "conformal invariance of EL", checks, time.perf_counter() - t0, 180.0, detail)


def test_criterion_6_ladder_bound(record):
    t0 = time.perf_counter()
    spec = validate_domain(fixtures.sector_ladder())
    ladder = build_radii_ladder(spec, "b", 0, 1.0)
    kappa_min = classify(spec).kappa_min
    grid = build_quotient_grid(spec, (0, 0, 2.5e-5, 1.2), 128, "logpolar")
    beta = tuple(circle(0, 1.1))
    checks = {"rho_observed <= 2.5": ladder.rho_observed <= 2.5, "ladder has M >= 4": ladder.M >= 4}
    els, parts = [], []
    for M in (2, 3, 4):
        # q sits inside the (2M+1)-th ladder radius, so M level pairs separate it from beta
        q = 0.7 * ladder.radii[2 * M + 1] * 1j
        el = solve_modulus(grid, SeparatingFamily(q, "b", beta)).el
        bound = 1.15 * el_upper_bound(ladder.rho_observed, kappa_min, M)
        checks[f"M={M}: EL <= bound"] = el <= bound
        els.append(el)
        parts.append(f"M={M} EL {el:.4f} <= {bound:.1f}")
    checks["EL decreases as q moves inward"] = all(x > y for x, y in zip(els, els[1:]))
    detail = f"rho {ladder.rho_observed:.4f}; " + "; ".join(parts)
    record(6, "ladder EL bound", checks, time.perf_counter() - t0, 300.0, detail)


def test_criterion_7_koebe(record, two_squares):
    t0 = time.perf_counter()
    cd, F, trace = koebe_iterate(two_squares, roundness_target=1e-3, max_rounds=100)
    rng = np.random.default_rng(0)
    z = rng.uniform(-2, 4, 1000) + 1j * rng.uniform(-2, 3, 1000)
    z = z[~spec_contains(two_squares, z)][:100]
    err = float(np.max(np.abs(map_apply(F, map_apply(F, z), inverse=True) - z)))
    _, radius = exterior_map(fixtures.ellipse_curve(2.0, 1.0, 512)).image_circle
    checks = {
        "converged within 100 rounds": trace.converged and len(trace.rounds) - 1 <= 100,
        "roundness <= 1e-3": max(cd.roundness.values()) <= 1e-3,
        "disks disjoint": cd.is_disjoint(),
        "roundtrip error <= 1e-5 on 100 points": len(z) == 100 and err <= 1e-5,
        "ellipse radius (a+b)/2 +- 1e-4": abs(radius - 1.5) <= 1e-4,
    }
    detail = (
        f"{len(trace.rounds) - 1} rounds, roundness {max(cd.roundness.values()):.1e}, "
        f"roundtrip {err:.1e}, ellipse radius {radius:.7f}"
    )
    record(7, "Koebe iteration", checks, time.perf_counter() - t0, 120.0, detail)


@pytest.fixture(scope="module")
def rings_trace():
    t0 = time.perf_counter()
    spec = validate_domain(fixtures.rings())
    trace = run_exhaustion(plan_exhaustion(spec, 2), tracked=["b", "p"], witness_n=256, seed=0)
    return trace, time.perf_counter() - t0


def test_criterion_8_witness_metric(record, rings_trace):
    trace, seconds = rings_trace
    checks = {"every stage ran": trace.failure is None and len(trace.stages) >= 2}
    worst_area, worst_excess = 0.0, math.inf
    for s in trace.stages:
        w = s.witness
        checks[f"stage {s.n}: area <= bound"] = w.area <= w.bound
        checks[f"stage {s.n}: 100 curves with L >= diam - 2h"] = w.curves == 100 and w.min_excess >= 0
        worst_area = max(worst_area, w.area / w.bound)
        worst_excess = min(worst_excess, w.min_excess)
    detail = f"max area/bound {worst_area:.3f}, min L - (diam - 2h) {worst_excess:.3f}"
    record(8, "witness metric", checks, seconds, 120.0, detail)


def test_criterion_9_exhaustion_trend(record, rings_trace):
    trace, seconds = rings_trace
    report = kernel_report(trace, "b")
    d = report.deltas
    diam = trace.diameters_of("p")
    checks = {
        "Hausdorff deltas non-increasing (20% allowance)": all(y <= 1.2 * x for x, y in zip(d, d[1:])),
        "final roundness of b <= 1e-2": report.final_roundness <= 1e-2,
        "point image diameter decreases": all(y < x for x, y in zip(diam, diam[1:])),
    }
    detail = (
        "deltas " + ", ".join(f"{x:.2e}" for x in d)
        + f"; roundness {report.final_roundness:.1e}; point diameters "
        + ", ".join(f"{x:.7f}" for x in diam)
    )
    record(9, "exhaustion trend", checks, seconds, 300.0, detail)


def _cli(tmp_path, tag, *argv):
    out, svg = tmp_path / f"{tag}.out", tmp_path / f"{tag}.svg"
    proc = subprocess.run(
        [sys.executable, "-m", "circledomain.cli_render", *argv, "--out", str(out), "--svg", str(svg)],
        capture_output=True,
    )
    read = lambda p: p.read_bytes() if p.exists() else None  # noqa: E731
    return proc.returncode, proc.stderr, read(out), read(svg)


def test_criterion_10_determinism(record, tmp_path):
    t0 = time.perf_counter()
    commands = {
        "analyze": [],
        "uniformize": [],
        "modulus": ["--n", "32", "--tol", "0.05"],
        "exhaust": ["--no-witness"],
    }
    modulus_args = {
        "disk_pair": ["--b", "b", "--q", "a", "--r-out", "6.5"],
        "two_squares": ["--b", "A", "--q", "B", "--r-out", "4"],
        "annulus_core": ["--b", "b", "--r-out", str(math.exp(math.pi))],
        "rings": ["--b", "b", "--q", "p", "--r-out", "5"],
        "sector_ladder": ["--b", "b", "--q", "0,0.01", "--r-out", "1.2"],
    }
    checks = {}
    for name, make in fixtures.ALL.items():
        src = tmp_path / f"{name}.json"
        src.write_text(json.dumps(make()))
        for cmd, extra in commands.items():
            argv = [cmd, "--in", str(src), *extra, *(modulus_args[name] if cmd == "modulus" else [])]
            first = _cli(tmp_path, f"{name}-{cmd}-1", *argv, "--seed", "0")
            second = _cli(tmp_path, f"{name}-{cmd}-2", *argv, "--seed", "0")
            wrote = first[0] in (0, 3) and first[2] is not None
            checks[f"{name} {cmd} (exit {first[0]})"] = first == second and (wrote or first[0] == 2)
    record(10, "determinism", checks, time.perf_counter() - t0, detail=f"{len(checks)} command pairs compared")

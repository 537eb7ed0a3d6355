"""Exhaustion of a domain by finite component subsets.

The non-trivial components are added to the uniformized set a batch at a
time, largest first.  Each stage's domain Omega_n keeps only the scheduled
components, is mapped onto a circle domain by the Koebe iteration, and
the resulting map F_n (normalized at infinity) is evaluated on the
boundaries of tracked components.  The trace records how those images
move between stages; the limit itself is never constructed.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .domain_model import (
    Component,
    DiskShape,
    DomainSpec,
    PointShape,
    classify,
    shape_distance,
)
from .errors import DomainError, InsufficientStages, InvalidParameter, NoSeparatingCycle
from .koebe_uniformizer import CircleDomain, NumericMap, koebe_iterate, map_apply, roundness
from .sphere_geom import hausdorff_distance
from .transboundary_modulus.grid import OMEGA, QuotientGrid, build_quotient_grid
from .transboundary_modulus.solver import metric_area
from .transboundary_modulus.walks import curve_length

log = logging.getLogger(__name__)

TRACK_SAMPLES = 256
POINT_CIRCLE_FRACTION = 0.01


@dataclass(frozen=True)
class ExhaustionPlan:
    spec: DomainSpec
    order: tuple[str, ...]  # non-trivial ids by decreasing diameter
    stages: tuple[tuple[str, ...], ...]  # nested B_1, B_2, ...

    def to_json(self) -> dict:
        return {"order": list(self.order), "stages": [list(b) for b in self.stages]}


def plan_exhaustion(spec: DomainSpec, batch: int) -> ExhaustionPlan:
    """Nested subsets adding ``batch`` components per stage, largest first."""
    if batch < 1:
        raise InvalidParameter("batch must be at least 1")
    nontrivial = [c for c in spec if not c.is_trivial]
    order = tuple(c.id for c in sorted(nontrivial, key=lambda c: (-c.shape.diam(), c.id)))
    stages = tuple(order[: min(k, len(order))] for k in range(batch, len(order) + batch, batch))
    return ExhaustionPlan(spec, order, stages)


# ---------------------------------------------------------------- tracking


def default_beta(spec: DomainSpec, b: str, samples: int = 256) -> np.ndarray:
    """A circle in Omega around ``b`` halfway to the nearest other component."""
    comp = spec.get(b).shape
    if isinstance(comp, PointShape):
        raise InvalidParameter("the enclosed component must be non-trivial")
    center = complex(getattr(comp, "center", comp.reference_point))
    reach = float(np.abs(comp.sample_boundary(1024) - center).max())
    if isinstance(comp, DiskShape):
        reach = comp.radius
    clear = math.inf
    for c in spec:
        if c.id != b:
            clear = min(clear, c.shape.distance_range(center)[0])
    if math.isinf(clear):
        clear = 3.0 * reach
    if not clear > reach:
        raise NoSeparatingCycle(f"no circle about the center of {b!r} separates it from the rest")
    radius = 0.5 * (reach + clear)
    return center + radius * np.exp(2j * np.pi * np.arange(samples) / samples)


def _point_circle(spec: DomainSpec, cid: str, samples: int) -> np.ndarray:
    p = spec.get(cid).shape
    others = [shape_distance(p, c.shape) for c in spec if c.id != cid]
    eps = POINT_CIRCLE_FRACTION * (min(others) if others else 1.0)
    return p.at + eps * np.exp(2j * np.pi * np.arange(samples) / samples)


def _diameter(z: np.ndarray) -> float:
    z = np.asarray(z, dtype=complex).ravel()
    if len(z) < 2:
        return 0.0
    return float(np.abs(z[:, None] - z[None, :]).max())


# ---------------------------------------------------------------- witness metric


@dataclass
class WitnessMetricReport:
    R: float
    area: float
    bound: float
    holds: bool
    min_excess: float  # min over sampled curves of L - (diam - 2h)
    min_length: float
    curves: int
    h: float
    metric: np.ndarray = field(repr=False, default=None)
    grid: QuotientGrid = field(repr=False, default=None)

    def to_json(self) -> dict:
        return {
            "R": self.R,
            "area": self.area,
            "bound": self.bound,
            "holds": self.holds,
            "min_excess": self.min_excess,
            "min_length": self.min_length,
            "curves": self.curves,
            "h": self.h,
        }


def circle_domain_spec(cd: CircleDomain) -> DomainSpec:
    comps = [Component(i, DiskShape(complex(c), float(r))) for i, c, r in cd.disks]
    comps += [Component(i, PointShape(complex(p))) for i, p in cd.points]
    return DomainSpec(tuple(comps))


def _raster_walk(grid: QuotientGrid, curve: np.ndarray) -> list[int] | None:
    """Closed node walk through the cells a densely sampled curve visits."""
    i = np.floor((curve.real - grid.u0) / grid.h).astype(int)
    j = np.floor((curve.imag - grid.v0) / grid.h).astype(int)
    if i.min() < 0 or j.min() < 0 or i.max() >= grid.nu or j.max() >= grid.nv:
        return None
    cls = grid.cell_class[i, j]
    nodes = np.where(cls == OMEGA, i * grid.nv + j, grid.n_cells + cls)
    keep = np.concatenate([[True], nodes[1:] != nodes[:-1]])
    walk = nodes[keep].tolist()
    while len(walk) > 1 and walk[-1] == walk[0]:
        walk.pop()
    if len(walk) < 3:
        return None
    return walk + [walk[0]]


def witness_metric(
    cd: CircleDomain,
    beta_image: np.ndarray,
    kappa_min: float,
    n: int = 256,
    curves: int = 100,
    seed: int = 0,
    around: str | None = None,
) -> WitnessMetricReport:
    """Witness metric on the image circle domain and its two checks.

    The metric is 1 on image-domain cells inside B(0, R), the diameter on
    image components contained in B(0, R), and 0 elsewhere, with
    R = 1.05 max |F(beta)|.  Its area is compared with
    (1 + 1/kappa_min) pi R^2, and closed curves around the image of
    ``around`` (default: the first disk) are checked for
    L >= diam - 2h.
    """
    if not kappa_min > 0:
        raise InvalidParameter("kappa_min must be positive")
    R = 1.05 * float(np.abs(np.asarray(beta_image)).max())
    spec = circle_domain_spec(cd)
    half = 1.1 * R
    grid = build_quotient_grid(spec, (-half, -half, half, half), n, "cartesian")
    m = np.zeros(grid.n_nodes)
    centers = grid.cell_centers()
    inside = (np.abs(centers) < R) & (grid.cell_class == OMEGA)
    m[: grid.n_cells] = inside.ravel().astype(float)
    disks = {i: (c, r) for i, c, r in cd.disks}
    for k, cid in enumerate(grid.comp_ids):
        shape = spec.get(cid).shape
        if isinstance(shape, DiskShape) and abs(shape.center) + shape.radius <= R:
            m[grid.n_cells + k] = shape.diam()
    area = metric_area(grid, m)
    bound = (1.0 + 1.0 / kappa_min) * math.pi * R * R

    if around is None:
        around = cd.disks[0][0] if cd.disks else None
    rng = np.random.default_rng(seed)
    min_excess, min_len, done = math.inf, math.inf, 0
    if around is not None and around in disks:
        c0, r0 = disks[around]
        attempts = 0
        while done < curves and attempts < 20 * curves:
            attempts += 1
            off = 0.2 * r0 * rng.random() * np.exp(2j * np.pi * rng.random())
            c = c0 + off
            lo, hi = r0 + abs(off) + 2 * grid.h, R - abs(c) - 2 * grid.h
            if not hi > lo:
                continue
            rad = lo + (hi - lo) * rng.random()
            k = max(64, int(8 * 2 * math.pi * rad / grid.h))
            pts = c + rad * np.exp(2j * np.pi * np.arange(k) / k)
            walk = _raster_walk(grid, pts)
            if walk is None:
                continue
            try:
                L = curve_length(grid, m, walk)
            except DomainError:
                continue
            crossed = [grid.component_of_node(v) for v in set(walk) if v >= grid.n_cells]
            hull = [pts[~spec_contains(spec, pts)]]
            for cid in crossed:
                hull.append(spec.get(cid).shape.sample_boundary(256))
            D = _diameter(_thin(np.concatenate(hull)))
            min_excess = min(min_excess, L - (D - 2 * grid.h))
            min_len = min(min_len, L)
            done += 1
    return WitnessMetricReport(
        R=R,
        area=area,
        bound=bound,
        holds=bool(area <= bound),
        min_excess=float(min_excess),
        min_length=float(min_len),
        curves=done,
        h=grid.h,
        metric=m,
        grid=grid,
    )


def spec_contains(spec: DomainSpec, z: np.ndarray) -> np.ndarray:
    hit = np.zeros(len(z), dtype=bool)
    for c in spec:
        hit |= c.shape.contains(z)
    return hit


def _thin(z: np.ndarray, k: int = 1024) -> np.ndarray:
    if len(z) <= k:
        return z
    return z[np.linspace(0, len(z) - 1, k).astype(int)]


# ---------------------------------------------------------------- running


@dataclass
class ExhaustionStage:
    n: int
    B: tuple[str, ...]
    circle_domain: CircleDomain
    F: NumericMap
    images: dict  # tracked id -> image samples
    roundness: dict
    diameters: dict
    hausdorff_delta: float | None = None
    witness: WitnessMetricReport | None = None

    def to_json(self) -> dict:
        w = self.witness
        return {
            "n": self.n,
            "B_n": list(self.B),
            "roundness": dict(sorted(self.roundness.items())),
            "hausdorff_delta": self.hausdorff_delta,
            "diameters": dict(sorted(self.diameters.items())),
            "witness": None if w is None else {"R": w.R, "area": w.area, "bound": w.bound},
        }


@dataclass
class ExhaustionTrace:
    plan: ExhaustionPlan
    tracked: tuple[str, ...]
    b: str | None
    stages: list[ExhaustionStage] = field(default_factory=list)
    failure: str | None = None

    @property
    def hausdorff_deltas(self) -> list[float]:
        return [s.hausdorff_delta for s in self.stages[1:]]

    def diameters_of(self, cid: str) -> list[float]:
        return [s.diameters[cid] for s in self.stages]

    def roundness_of(self, cid: str) -> list[float]:
        return [s.roundness[cid] for s in self.stages]

    def to_jsonl(self) -> str:
        lines = [json.dumps(s.to_json(), sort_keys=True) for s in self.stages]
        if self.failure is not None:
            lines.append(json.dumps({"failure": self.failure, "n": len(self.stages) + 1}, sort_keys=True))
        return "".join(line + "\n" for line in lines)


def run_exhaustion(
    plan: ExhaustionPlan,
    roundness_target: float = 1e-3,
    tracked=(),
    max_rounds: int = 100,
    samples: int = 256,
    witness: bool = True,
    witness_n: int = 256,
    seed: int = 0,
) -> ExhaustionTrace:
    """Uniformize each stage domain and follow the tracked components.

    The first non-trivial tracked id is the designated ``b``: its image
    Hausdorff deltas between stages are recorded and, when ``witness`` is
    set, the witness metric is checked on a circle around it.  A stage
    that fails ends the trace with the reason recorded.
    """
    spec = plan.spec
    tracked = tuple(tracked)
    for cid in tracked:
        spec.get(cid)
    b = next((c for c in tracked if not spec.get(c).is_trivial), None)
    report = classify(spec)
    kappa_min = report.kappa_min
    beta = default_beta(spec, b) if b is not None else None
    sources = {}
    for cid in tracked:
        shape = spec.get(cid).shape
        if isinstance(shape, PointShape):
            sources[cid] = _point_circle(spec, cid, TRACK_SAMPLES)
        else:
            sources[cid] = shape.sample_boundary(TRACK_SAMPLES)

    trace = ExhaustionTrace(plan, tracked, b)
    for n, B in enumerate(plan.stages, start=1):
        try:
            cd, F, _ = koebe_iterate(
                spec.subset(B), roundness_target=roundness_target, max_rounds=max_rounds, samples=samples
            )
            images, rnd, diam = {}, {}, {}
            for cid in tracked:
                img = cd.samples[cid] if cid in cd.samples else map_apply(F, sources[cid])
                images[cid] = img
                diam[cid] = _diameter(img)
                if not spec.get(cid).is_trivial:
                    rnd[cid] = roundness(img).value
            stage = ExhaustionStage(n, tuple(B), cd, F, images, rnd, diam)
            if trace.stages and b is not None:
                stage.hausdorff_delta = hausdorff_distance(trace.stages[-1].images[b], images[b])
            if witness and b is not None and kappa_min is not None:
                stage.witness = witness_metric(
                    cd, map_apply(F, beta), kappa_min, n=witness_n, seed=seed, around=b if b in B else None
                )
        except DomainError as exc:
            trace.failure = f"{type(exc).__name__}: {exc}"
            log.warning("stage %d failed: %s", n, trace.failure)
            break
        trace.stages.append(stage)
        log.info("stage %d: |B| = %d, roundness %s", n, len(B), stage.roundness)
    return trace


# ---------------------------------------------------------------- diagnostics


@dataclass(frozen=True)
class KernelReport:
    b: str
    stages: int
    tail_hausdorff: float
    deltas: tuple[float, ...]
    final_roundness: float
    limit_samples: np.ndarray = field(repr=False)
    clearance: float | None = None
    delta_star: float | None = None

    def to_json(self) -> dict:
        return {
            "b": self.b,
            "stages": self.stages,
            "tail_hausdorff": self.tail_hausdorff,
            "deltas": list(self.deltas),
            "final_roundness": self.final_roundness,
            "clearance": self.clearance,
            "delta_star": self.delta_star,
        }


def kernel_report(trace: ExhaustionTrace, b: str, eta_clearance: float = 0.0, p_star=None) -> KernelReport:
    """Convergence diagnostics for the images of ``b``.

    The limit set is estimated by the last stage's image.  With a
    reference point ``p_star`` at distance at least ``eta_clearance`` from
    it, the reported lower bound is that distance less half the largest
    gap between neighbouring samples.
    """
    imgs = [s.images[b] for s in trace.stages if b in s.images]
    if len(imgs) < 2:
        raise InsufficientStages(f"need at least two stages tracking {b!r}, have {len(imgs)}")
    deltas = tuple(hausdorff_distance(x, y) for x, y in zip(imgs, imgs[1:]))
    tail = deltas[len(deltas) // 2 :]
    last = np.asarray(imgs[-1])
    final = roundness(last).value
    clearance = delta_star = None
    if p_star is not None:
        clearance = float(np.abs(last - complex(p_star)).min())
        if clearance >= eta_clearance:
            slack = 0.5 * float(np.abs(np.roll(last, -1) - last).max())
            delta_star = clearance - slack
    return KernelReport(b, len(imgs), float(max(tail)), deltas, final, last, clearance, delta_star)

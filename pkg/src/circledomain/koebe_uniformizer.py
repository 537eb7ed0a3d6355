"""Koebe iteration onto circle domains.

Each round maps the exterior of one boundary component onto the exterior
of a disk and pushes every other component forward.  The single-component
exterior map is a geodesic zipper: the curve is opened at two sample
points with a square root and then zipped onto the real line one sample
at a time by elementary slit maps of the upper half-plane, each of which
is explicitly invertible.  A final Möbius map sends the half-plane holding
infinity onto the exterior of the unit disk, and an affine correction makes
the map z + O(1/z) at infinity.

Sample points are mapped exactly onto the image circle; the map is exact
for the curve made of hyperbolic geodesic arcs between the samples, so
its error on the true curve shrinks as the samples get denser and as the
curve gets rounder (circles are reproduced exactly).
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .domain_model import (
    AnnulusShape,
    DiskShape,
    DomainSpec,
    PointShape,
    points_in_polygon,
    polygon_is_simple,
    polygon_signed_area,
)
from .errors import (
    ComponentCollision,
    ConvergenceFailure,
    InvalidParameter,
    MaxRoundsExceeded,
    NonSimpleCurve,
    OutsideDomain,
)
from .sphere_geom import INF, MobiusTransform, mobius_apply, mobius_inverse

log = logging.getLogger(__name__)

MAX_COMPONENTS = 8
POINTLIKE = "POINTLIKE"


# ---------------------------------------------------------------- roundness


@dataclass(frozen=True)
class Roundness:
    value: float
    center: complex
    radius: float
    flag: str | None = None

    def __float__(self) -> float:
        return self.value


def roundness(samples) -> Roundness:
    """(max r - min r) / mean r about a least-squares fitted center."""
    z = np.asarray(samples, dtype=complex).ravel()
    if len(z) < 2:
        raise InvalidParameter("roundness needs at least two samples")
    m = complex(z.mean())
    scale = max(1.0, float(np.abs(z).max()))
    if np.abs(z - m).max() <= 1e-14 * scale:
        return Roundness(0.0, m, 0.0, POINTLIKE)
    c = m
    if len(z) >= 3:
        # algebraic circle fit: |u|^2 = 2 Re(conj(c) u) + d for u = z - m
        u = z - m
        M = np.column_stack([2 * u.real, 2 * u.imag, np.ones(len(u))])
        sol, *_ = np.linalg.lstsq(M, np.abs(u) ** 2, rcond=None)
        if np.all(np.isfinite(sol)):
            c = m + complex(sol[0], sol[1])
    r = np.abs(z - c)
    return Roundness(float((r.max() - r.min()) / r.mean()), c, float(r.mean()))


# ---------------------------------------------------------------- zipper stage


def _sqrt_upper(w: np.ndarray, side: np.ndarray, scale: float) -> np.ndarray:
    """Square root in the upper half-plane whose real part has the sign of ``side``.

    Exact inputs satisfy both conditions; with rounding noise only one is
    reliable.  Mostly imaginary roots are chosen by the sign of their
    imaginary part, mostly real ones (points already zipped onto the real
    axis) by ``side``.  Roots at the slit tip carry noise of order
    sqrt(eps) * scale and are snapped to 0; at the next step such points,
    with ``side`` exactly 0, go to the positive side, which borders the
    exterior of a counterclockwise curve.
    """
    s = np.sqrt(w)
    s = np.where(np.abs(s) < 1e-7 * scale, 0.0, s)
    flip = np.where(np.abs(s.imag) >= np.abs(s.real), s.imag < 0, side < -1e-11 * scale)
    return np.where(flip, -s, s)


@dataclass
class ZipperStage:
    """Conformal map of the exterior of a closed curve onto a disk exterior."""

    curve: np.ndarray  # source samples, in order
    z0: complex
    z1: complex
    b: np.ndarray  # slit map parameters, one per zipped sample
    c: np.ndarray
    p0: float  # real image of z0 before the closing map
    ext_sign: int  # +1: exterior lands in the first quadrant before squaring
    pole: complex  # upper/lower half-plane point sent to infinity
    a1: complex = 1.0
    a0: complex = 0.0

    # ---- raw map to the unit disk exterior
    def _open(self, z: np.ndarray) -> np.ndarray:
        w = (z - self.z1) / (z - self.z0)
        return 1j * np.sqrt(w)

    def _zip(self, zeta: np.ndarray) -> np.ndarray:
        for b, c in zip(self.b.tolist(), self.c.tolist()):
            g = zeta if math.isinf(b) else zeta / (1 - zeta / b)
            zeta = _sqrt_upper(g * g + c * c, g.real, c)
        return zeta

    def _close(self, zeta: np.ndarray) -> np.ndarray:
        eta = zeta / (1 - zeta / self.p0)
        return eta * eta

    def _to_disk(self, w: np.ndarray) -> np.ndarray:
        p = self.pole
        return (w - p.conjugate()) / (w - p)

    def raw(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        at_z0 = z == self.z0
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self._to_disk(self._close(self._zip(self._open(z))))
        # z0 is opened to infinity and closed back onto the point 1
        out[at_z0] = 1.0
        return out

    # ---- normalized map
    def forward(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        out = np.empty_like(z)
        inf = np.isinf(z)
        out[inf] = INF
        if (~inf).any():
            out[~inf] = (self.raw(z[~inf]) - self.a0) / self.a1
        return out

    def inverse(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        out = np.empty_like(w)
        inf = np.isinf(w)
        out[inf] = INF
        v = w[~inf] * self.a1 + self.a0
        p = self.pole
        W = (p * v - p.conjugate()) / (v - 1)
        # the root in the quadrant holding the exterior
        eta = np.sqrt(W) * self.ext_sign
        zeta = eta / (1 + eta / self.p0)
        for b, c in zip(self.b[::-1].tolist(), self.c[::-1].tolist()):
            g = _sqrt_upper(zeta * zeta - c * c, zeta.real, c)
            zeta = g if math.isinf(b) else g / (1 + g / b)
        q = -(zeta * zeta)
        out[~inf] = (self.z1 - q * self.z0) / (1 - q)
        return out

    @property
    def image_circle(self) -> tuple[complex, float]:
        return -self.a0 / self.a1, 1.0 / abs(self.a1)

    @property
    def capacity(self) -> float:
        return 1.0 / abs(self.a1)

    def contains_source(self, z) -> np.ndarray:
        return points_in_polygon(np.asarray(z, dtype=complex), self.curve)


def exterior_map(curve, eval_tol: float = 1e-6, check_simple: bool = True) -> ZipperStage:
    """Exterior Riemann map of the closed curve through ``curve``.

    The returned stage is normalized to f(z) = z + O(1/z) at infinity, so
    its image is the exterior of a circle whose radius is the logarithmic
    capacity of the curve.
    """
    z = np.asarray(curve, dtype=complex).ravel()
    if len(z) >= 2 and z[0] == z[-1]:
        z = z[:-1]
    if len(z) < 64:
        raise InvalidParameter("the exterior map needs at least 64 samples")
    if not np.all(np.isfinite(z)):
        raise InvalidParameter("curve samples must be finite")
    if check_simple and not polygon_is_simple(z):
        raise NonSimpleCurve("boundary sample self-intersects")
    if polygon_signed_area(z) < 0:
        z = z[::-1].copy()
    n = len(z)
    z0, z1 = z[0], z[1]

    # open the curve at [z0, z1]: z1 -> 0, z0 -> infinity, the rest into the upper half-plane
    zeta = 1j * np.sqrt((z[2:] - z1) / (z[2:] - z0))
    z0_img = INF  # image of z0, sent to infinity by the opening map
    bs = np.empty(n - 2)
    cs = np.empty(n - 2)
    track = np.array([1j], dtype=complex)  # image of infinity
    for k in range(n - 2):
        a = zeta[k]
        if not a.imag > 0:
            raise ConvergenceFailure(f"sample {k + 2} left the upper half-plane while zipping", achieved=math.inf)
        b = abs(a) ** 2 / a.real if a.real != 0 else math.inf
        c = abs(a) ** 2 / a.imag
        bs[k], cs[k] = b, c
        rest = zeta[k + 1 :]
        pts = np.concatenate([rest, track])
        g = pts if math.isinf(b) else pts / (1 - pts / b)
        pts = _sqrt_upper(g * g + c * c, g.real, c)
        zeta[k + 1 :] = pts[: len(rest)]
        track = pts[len(rest) :]
        if cmath.isinf(z0_img):
            if math.isinf(b):
                continue
            g0 = complex(-b)
        elif math.isinf(b):
            g0 = z0_img
        elif z0_img == b:
            z0_img = INF  # sent to infinity; the next finite step picks it up
            continue
        else:
            g0 = z0_img / (1 - z0_img / b)
        z0_img = complex(_sqrt_upper(np.array([g0 * g0 + c * c]), np.array([g0.real]), c)[0])
    p0 = z0_img.real
    eta_inf = track[0] / (1 - track[0] / p0)
    ext_sign = 1 if eta_inf.real > 0 else -1
    pole = complex(eta_inf * eta_inf)
    stage = ZipperStage(z, z0, z1, bs, cs, p0, ext_sign, pole)

    # normalization at infinity from a Fourier fit on a large circle
    center = complex(z.mean())
    radius = 4.0 * float(np.abs(z - center).max())
    m = 256
    ring = center + radius * np.exp(2j * np.pi * np.arange(m) / m)
    coef = np.fft.fft(stage.raw(ring)) / m
    a1 = coef[1] / radius
    a0 = coef[0] - a1 * center
    stage.a1, stage.a0 = complex(a1), complex(a0)

    c, r = stage.image_circle
    dev = np.abs(np.abs(stage.forward(z) - c) - r)
    achieved = float(dev.max() / r)
    if not achieved <= eval_tol:
        raise ConvergenceFailure(f"image roundness {achieved:.3g} exceeds {eval_tol:.3g}", achieved=achieved)
    return stage


# ---------------------------------------------------------------- composed maps


@dataclass
class NumericMap:
    """Composition of Möbius and exterior-map stages, applied first to last."""

    stages: list = field(default_factory=list)
    sources: list = field(default_factory=list)  # source shapes, for domain checks
    targets: list = field(default_factory=list)  # (center, radius) or point of the image components

    def __call__(self, z):
        return map_apply(self, z)


def _apply_stage(stage, z: np.ndarray, inverse: bool) -> np.ndarray:
    if isinstance(stage, MobiusTransform):
        return mobius_apply(mobius_inverse(stage) if inverse else stage, z)
    return stage.inverse(z) if inverse else stage.forward(z)


def map_apply(F: NumericMap, z, inverse: bool = False):
    """Evaluate the composed map (or its inverse) at a point or array of points."""
    scalar = np.ndim(z) == 0
    w = np.atleast_1d(np.asarray(z, dtype=complex)).copy()
    finite = np.isfinite(w)
    if inverse:
        for t in F.targets:
            if isinstance(t, tuple):
                c, r = t
                if np.any(np.abs(w[finite] - c) < r * (1 - 1e-9)):
                    raise OutsideDomain("point lies inside an image disk")
        stages = reversed(F.stages)
    else:
        for s in F.sources:
            if not isinstance(s, PointShape) and np.any(s.contains(w[finite])):
                raise OutsideDomain("point lies inside a source component")
        stages = iter(F.stages)
    for stage in stages:
        w = _apply_stage(stage, w, inverse)
    return complex(w[0]) if scalar else w.reshape(np.shape(z))


# ---------------------------------------------------------------- tracking


def _boundary_param(shape):
    """t in [0, 1) -> point on the boundary of a disk or polygon."""
    if isinstance(shape, DiskShape):
        return lambda t: shape.center + shape.radius * np.exp(2j * np.pi * np.asarray(t))
    v = shape.array
    closed = np.append(v, v[0])
    s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(closed)))])
    s /= s[-1]
    return lambda t: np.interp(np.asarray(t), s, closed.real) + 1j * np.interp(np.asarray(t), s, closed.imag)


@dataclass
class _Tracked:
    """Boundary samples of one component in the current picture.

    Each point is the image of ``source(param)`` under the stages from
    ``since`` on.  The source starts as the original boundary; once the
    component has its own stage, it becomes that stage's image circle,
    because between zipper samples the stage's boundary is its own arcs
    and not the original curve.
    """

    id: str
    shape: object
    params: np.ndarray
    points: np.ndarray
    source: object = None
    period: float = 1.0
    since: int = 0

    @property
    def is_point(self) -> bool:
        return isinstance(self.shape, PointShape)

    def reanchor(self, stage_count: int, center: complex, radius: float):
        """Make the current points (on a circle) the new source."""
        ang = np.unwrap(np.angle(self.points - center))
        sign = 1.0 if ang[-1] >= ang[0] else -1.0
        self.params = sign * (ang - ang[0])
        self.period = 2 * np.pi
        start = float(ang[0])
        self.source = lambda t: center + radius * np.exp(1j * (start + sign * np.asarray(t)))
        self.since = stage_count


def _initial_tracking(spec: DomainSpec, count: int) -> list[_Tracked]:
    out = []
    for comp in spec:
        s = comp.shape
        if isinstance(s, PointShape):
            out.append(_Tracked(comp.id, s, np.zeros(1), np.array([s.at], dtype=complex)))
            continue
        t = np.arange(count) / count
        if not isinstance(s, DiskShape):
            # include the polygon's corners so they are tracked exactly
            v = s.array
            closed = np.append(v, v[0])
            cum = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(closed)))])
            corners = cum[:-1] / cum[-1]
            d = np.abs(t[:, None] - corners[None, :])
            near = np.minimum(d, 1 - d).min(axis=1) < 0.25 / count
            t = np.unique(np.concatenate([t[~near], corners]))
        src = _boundary_param(s)
        out.append(_Tracked(comp.id, s, t, src(t), src))
    return out


def _rebalance(track: _Tracked, F: NumericMap, k: int, rounds: int = 8):
    """Keep about ``k`` tracked points evenly spread in the current picture.

    New points are parameter midpoints of the track's source pushed
    through the later stages, so every point stays an exact image.
    """
    for _ in range(rounds):
        p, t = track.points, track.params
        gaps = np.abs(np.roll(p, -1) - p)
        mean = float(gaps.sum()) / k
        wide = np.nonzero(gaps > 1.5 * mean)[0]
        changed = False
        if len(wide):
            t_next = np.where(wide + 1 < len(t), t[(wide + 1) % len(t)], t[0] + track.period)
            mid = 0.5 * (t[wide] + t_next)
            new = track.source(mid)
            for stage in F.stages[track.since :]:
                new = _apply_stage(stage, new, False)
            order = np.argsort(np.concatenate([t, mid]), kind="stable")
            track.params = np.concatenate([t, mid])[order]
            track.points = np.concatenate([p, new])[order]
            changed = True
        p, t = track.points, track.params
        gaps = np.abs(np.roll(p, -1) - p)
        span = gaps + np.roll(gaps, 1)  # distance spanned by dropping each point
        crowded = np.nonzero(span < 0.9 * float(gaps.sum()) / k)[0]
        crowded = crowded[::2]
        if len(crowded) and len(p) - len(crowded) >= k // 2:
            keep = np.ones(len(p), dtype=bool)
            keep[crowded] = False
            track.params, track.points = t[keep], p[keep]
            changed = True
        if not changed:
            break


def component_roundness(points: np.ndarray) -> Roundness:
    return roundness(points)


def _check_collisions(tracks: list[_Tracked]):
    curves = [t for t in tracks if not t.is_point]
    for i, a in enumerate(tracks):
        for b in curves:
            if a is b:
                continue
            if np.any(points_in_polygon(a.points, b.points)):
                raise ComponentCollision(f"images of {a.id!r} and {b.id!r} interleave")


# ---------------------------------------------------------------- results


@dataclass
class CircleDomain:
    disks: list  # (id, center, radius)
    points: list  # (id, point)
    roundness: dict
    samples: dict = field(default_factory=dict)  # id -> final image boundary samples

    def to_json(self) -> dict:
        return {
            "disks": [{"id": i, "center": [c.real, c.imag], "radius": r} for i, c, r in self.disks],
            "points": [{"id": i, "at": [p.real, p.imag]} for i, p in self.points],
            "roundness": dict(self.roundness),
        }

    @classmethod
    def from_json(cls, raw: dict) -> "CircleDomain":
        try:
            disks = [(d["id"], complex(*d["center"]), float(d["radius"])) for d in raw["disks"]]
            points = [(p["id"], complex(*p["at"])) for p in raw["points"]]
            rnd = {str(k): float(v) for k, v in raw.get("roundness", {}).items()}
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidParameter(f"malformed circle domain: {exc}") from None
        return cls(disks, points, rnd)

    def is_disjoint(self) -> bool:
        for k, (_, c1, r1) in enumerate(self.disks):
            for _, c2, r2 in self.disks[k + 1 :]:
                if abs(c1 - c2) <= r1 + r2:
                    return False
            for _, p in self.points:
                if abs(p - c1) <= r1:
                    return False
        return True


@dataclass
class IterationTrace:
    rounds: list = field(default_factory=list)  # per round: {id: roundness}
    stages: int = 0
    converged: bool = False

    def to_json(self) -> dict:
        return {"rounds": [dict(r) for r in self.rounds], "stages": self.stages, "converged": self.converged}


def _circle_domain(tracks: list[_Tracked], samples: int) -> CircleDomain:
    disks, pts, rnd = [], [], {}
    for t in tracks:
        if t.is_point:
            pts.append((t.id, complex(t.points[0])))
            continue
        r = component_roundness(t.points)
        disks.append((t.id, r.center, r.radius))
        rnd[t.id] = r.value
    return CircleDomain(disks, pts, rnd, {t.id: t.points.copy() for t in tracks})


def koebe_iterate(
    spec: DomainSpec,
    roundness_target: float = 1e-3,
    max_rounds: int = 100,
    samples: int = 256,
) -> tuple[CircleDomain, NumericMap, IterationTrace]:
    """Round-robin Koebe iteration in component id order."""
    if not roundness_target > 0:
        raise InvalidParameter("roundness target must be positive")
    if max_rounds < 1:
        raise InvalidParameter("max_rounds must be at least 1")
    if samples < 64:
        raise InvalidParameter("at least 64 samples per component")
    curves = [c for c in spec if not isinstance(c.shape, PointShape)]
    if len(curves) > MAX_COMPONENTS:
        raise InvalidParameter(f"at most {MAX_COMPONENTS} non-point components")
    for c in curves:
        if isinstance(c.shape, AnnulusShape):
            raise InvalidParameter(f"component {c.id!r} is an annulus; its hole would be a second domain")

    tracks = _initial_tracking(spec, samples)
    F = NumericMap(stages=[], sources=[c.shape for c in spec])
    trace = IterationTrace()

    def measure() -> dict:
        return {t.id: component_roundness(t.points).value for t in tracks if not t.is_point}

    current = measure()
    trace.rounds.append(current)
    rounds = 0
    while max(current.values(), default=0.0) > roundness_target:
        if rounds == max_rounds:
            cd = _circle_domain(tracks, samples)
            F.targets = _targets(cd)
            raise MaxRoundsExceeded(
                f"roundness {max(current.values()):.3g} after {max_rounds} rounds",
                circle_domain=cd,
                numeric_map=F,
                trace=trace,
            )
        rounds += 1
        for track in tracks:
            if track.is_point:
                continue
            _rebalance(track, F, samples)
            stage = exterior_map(track.points, eval_tol=1e-8, check_simple=False)
            F.stages.append(stage)
            for other in tracks:
                other.points = stage.forward(other.points)
            track.reanchor(len(F.stages), *stage.image_circle)
        _check_collisions(tracks)
        current = measure()
        trace.rounds.append(current)
        log.debug("round %d: max roundness %.3g", rounds, max(current.values(), default=0.0))
    trace.stages = len(F.stages)
    trace.converged = True
    cd = _circle_domain(tracks, samples)
    F.targets = _targets(cd)
    return cd, F, trace


def _targets(cd: CircleDomain) -> list:
    return [(c, r) for _, c, r in cd.disks] + [p for _, p in cd.points]

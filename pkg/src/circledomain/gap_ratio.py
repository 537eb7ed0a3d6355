"""Gap ratios between components, the per-component ratio bound and the
shrinking-radii ladder around a base point.

For a compact set K and a point w outside it, the gap ratio is
sup|z - w| / inf|z - w| over z in K.  For two components a, b the pair
ratio takes the sup of that quantity over w in b.  Moving w toward the
nearest point of a never lowers the ratio (the inf drops at unit speed,
the sup at most at unit speed, and sup >= inf), so the pair ratio is
attained on the boundary of b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .domain_model import (
    DISJOINT_TOL,
    AnnulusShape,
    Component,
    DiskShape,
    DomainSpec,
    PointShape,
    PolygonShape,
    Shape,
    _pseg,
    points_in_polygon,
    polyline_edges,
    shape_distance,
)
from .errors import InvalidParameter, InvalidR0, ZeroDistance


def _shape(c) -> Shape:
    return c.shape if isinstance(c, Component) else c


def gr_point(K, w: complex) -> float:
    """Gap ratio of the set ``K`` seen from the point ``w``."""
    s = _shape(K)
    w = complex(w)
    lo, hi = s.distance_range(w)
    if lo <= 0.0:
        raise ZeroDistance(f"{w} lies in the component")
    return hi / lo


def _polygon_ratios(poly: PolygonShape, w: np.ndarray) -> np.ndarray:
    """Vectorized gap ratio of a polygon from many outside points."""
    v = poly.array
    hi = np.max(np.abs(w[:, None] - v[None, :]), axis=1)
    starts, ends = polyline_edges(v)
    lo = np.min(_pseg(w[:, None], starts[None, :], ends[None, :]), axis=1)
    inside = points_in_polygon(w, v)
    lo[inside] = 0.0
    with np.errstate(divide="ignore"):
        return np.where(lo > 0, hi / np.where(lo > 0, lo, 1.0), np.inf)


class _BoundaryPath:
    """Arc-length parametrization of each connected boundary piece of a shape."""

    def __init__(self, shape: Shape):
        self.pieces = []
        for piece in shape.boundary_pieces():
            if piece[0] == "circle":
                c, r = piece[1], piece[2]
                self.pieces.append((2 * math.pi * r, lambda t, c=c, r=r: c + r * np.exp(1j * t / r)))
            elif piece[0] == "point":
                self.pieces.append((0.0, lambda t, p=piece[1]: np.full(np.shape(t), p, dtype=complex)))
            else:
                verts = piece[1]
                closed = np.append(verts, verts[0])
                s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(closed)))])

                def at(t, s=s, closed=closed):
                    t = np.mod(t, s[-1])
                    return np.interp(t, s, closed.real) + 1j * np.interp(t, s, closed.imag)

                self.pieces.append((float(s[-1]), at))


def _sup_over_boundary(ratio, b: Shape, rtol: float = 1e-6) -> float:
    """Maximize ``ratio`` (vectorized over points) along the boundary of ``b``."""
    path = _BoundaryPath(b)
    best = -math.inf
    for length, at in path.pieces:
        if length == 0.0:
            best = max(best, float(ratio(at(np.zeros(1)))[0]))
            continue
        n, previous = 256, -math.inf
        while True:
            t = np.arange(n) * (length / n)
            vals = ratio(at(t))
            k = int(np.argmax(vals))
            step = length / n

            def neg(tt, at=at):
                return -float(ratio(at(np.array([tt])))[0])

            res = minimize_scalar(neg, bounds=(t[k] - step, t[k] + step), method="bounded", options={"xatol": 1e-12 * max(1.0, length)})
            value = max(float(vals[k]), -float(res.fun))
            if abs(value - previous) <= rtol * abs(value) or n >= 1 << 16:
                break
            previous, n = value, 2 * n
        best = max(best, value)
    return best


def gr_pair(a, b) -> float:
    """Sup over w in ``b`` of the gap ratio of ``a`` seen from w."""
    sa, sb = _shape(a), _shape(b)
    if shape_distance(sa, sb) < DISJOINT_TOL:
        raise ZeroDistance("components touch")
    if isinstance(sa, PointShape):
        return 1.0
    if isinstance(sa, DiskShape):
        d = sb.distance_range(sa.center)[0]
        return (d + sa.radius) / (d - sa.radius)
    if isinstance(sa, AnnulusShape):
        lo, hi = sb.distance_range(sa.center)
        if hi < sa.r_in:
            return (hi + sa.r_out) / (sa.r_in - hi)
        return (lo + sa.r_out) / (lo - sa.r_out)
    return _sup_over_boundary(lambda w: _polygon_ratios(sa, w), sb)


@dataclass
class RadiiLadder:
    base: str
    w: complex
    radii: list[float]
    members: list[list[str]]
    rho_observed: float
    M: int

    @property
    def J(self) -> int:
        return len(self.radii) - 1

    def to_json(self) -> dict:
        return {
            "base": self.base,
            "w": [self.w.real, self.w.imag],
            "radii": list(self.radii),
            "members": [list(m) for m in self.members],
            "rho_observed": self.rho_observed,
            "M": self.M,
        }


@dataclass
class GapRatioReport:
    base: str
    delta: float
    pairs: list[tuple[str, str, float]]
    rho: float
    ladder: RadiiLadder | None = field(default=None)

    def to_json(self) -> dict:
        out = {
            "pairs": [{"a": a, "b": b, "gr": g} for a, b, g in self.pairs],
            "rho": self.rho,
            "delta": self.delta,
        }
        if self.ladder is not None:
            out["ladder"] = self.ladder.to_json()
        return out


def rho_estimate(spec: DomainSpec, b: str, delta: float) -> GapRatioReport:
    """Largest pair gap ratio Gr(a, b) over components within ``delta`` of b."""
    if not delta > 0:
        raise InvalidParameter("delta must be positive")
    base = spec.get(b)
    pairs = []
    for comp in spec:
        if comp.id == b:
            continue
        if shape_distance(comp.shape, base.shape) < delta:
            pairs.append((comp.id, b, gr_pair(comp, base)))
    rho = max((g for _, _, g in pairs), default=1.0)
    return GapRatioReport(base=b, delta=delta, pairs=pairs, rho=rho)


def build_radii_ladder(
    spec: DomainSpec,
    b: str,
    w: complex,
    R0: float,
    max_levels: int = 64,
    beta: Shape | None = None,
) -> RadiiLadder:
    """Shrinking radii R_0 > R_1 > ... around ``w``.

    Level j collects the non-trivial components other than ``b`` that meet
    both circles |z - w| = R_j and |z - w| = R_j / 2; the next radius is the
    smallest distance from w to one of them.  ``beta``, when given, is a
    region that must contain the starting circle.
    """
    base = spec.get(b)
    w = complex(w)
    if not base.shape.contains(np.array([w]), tol=1e-12)[0]:
        raise InvalidParameter("base point must lie in the base component")
    if not R0 > 0 or not math.isfinite(R0):
        raise InvalidR0("R0 must be a positive finite radius")
    if beta is not None:
        ring = w + R0 * np.exp(2j * np.pi * np.arange(720) / 720)
        if not np.all(beta.contains(ring)):
            raise InvalidR0("the starting circle leaves the enclosing region")
    ranges = {c.id: c.shape.distance_range(w) for c in spec if c.id != b and not c.is_trivial}
    radii, members = [float(R0)], []
    while len(members) < max_levels:
        R = radii[-1]
        level = sorted(cid for cid, (lo, hi) in ranges.items() if lo <= R / 2 and hi >= R)
        if not level:
            break
        members.append(level)
        radii.append(min(ranges[cid][0] for cid in level))
    J = len(radii) - 1
    rho_obs = max((radii[j] / radii[j + 1] for j in range(J)), default=1.0)
    return RadiiLadder(b, w, radii, members, rho_obs, max((J - 1) // 2, 0))


def el_upper_bound(rho: float, kappa_min: float, M: int) -> float:
    """4 pi rho^2 (1 + 1/kappa) / M."""
    if M < 1:
        raise InvalidParameter("M must be at least 1")
    if rho < 1 or not 0 < kappa_min <= math.pi / 4 + 1e-12:
        raise InvalidParameter("need rho >= 1 and 0 < kappa <= pi/4")
    return 4 * math.pi * rho**2 * (1 + 1 / kappa_min) / M

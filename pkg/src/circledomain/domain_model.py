"""Complementary components of a planar domain and their shape statistics.

A domain is described by the closed sets it omits: points, disks, simple
polygons and annuli.  Everything here works on exact geometry; distances
between shapes are computed from closed-form boundary comparisons.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    InvalidParameter,
    InvalidShape,
    OverlappingComponents,
    TrivialComponent,
    UnboundedComplement,
    UnknownComponent,
)
from .sphere_geom import MobiusTransform, mobius_apply

DISJOINT_TOL = 1e-9
_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


# ---------------------------------------------------------------- segments


def point_segment_distance(p, a: complex, b: complex) -> np.ndarray:
    """Distance from each point of ``p`` to the segment [a, b]."""
    p = np.asarray(p, dtype=complex)
    ab = b - a
    denom = abs(ab) ** 2
    if denom == 0:
        return np.abs(p - a)
    t = np.clip(((p - a) * np.conj(ab)).real / denom, 0.0, 1.0)
    return np.abs(p - (a + t * ab))


def _cross(u, v):
    return u.real * v.imag - u.imag * v.real


def segments_intersect(a1, b1, a2, b2) -> np.ndarray:
    """Closed-segment intersection test, broadcast over arrays."""
    a1, b1, a2, b2 = np.broadcast_arrays(*(np.asarray(v, dtype=complex) for v in (a1, b1, a2, b2)))
    d1 = _cross(b2 - a2, a1 - a2)
    d2 = _cross(b2 - a2, b1 - a2)
    d3 = _cross(b1 - a1, a2 - a1)
    d4 = _cross(b1 - a1, b2 - a1)
    proper = (d1 * d2 < 0) & (d3 * d4 < 0)

    def on_segment(p, q, r, d):
        # r collinear with p-q and inside its bounding box
        return (d == 0) & (np.minimum(p.real, q.real) <= r.real) & (r.real <= np.maximum(p.real, q.real)) & (
            np.minimum(p.imag, q.imag) <= r.imag
        ) & (r.imag <= np.maximum(p.imag, q.imag))

    touch = on_segment(a2, b2, a1, d1) | on_segment(a2, b2, b1, d2) | on_segment(a1, b1, a2, d3) | on_segment(a1, b1, b2, d4)
    return proper | touch


def segment_segment_distance(a1, b1, a2, b2) -> np.ndarray:
    a1, b1, a2, b2 = np.broadcast_arrays(*(np.asarray(v, dtype=complex) for v in (a1, b1, a2, b2)))
    out = np.minimum(
        np.minimum(_pseg(a1, a2, b2), _pseg(b1, a2, b2)),
        np.minimum(_pseg(a2, a1, b1), _pseg(b2, a1, b1)),
    )
    out[segments_intersect(a1, b1, a2, b2)] = 0.0
    return out


def _pseg(p, a, b):
    """Elementwise point-to-segment distance."""
    ab = b - a
    denom = np.abs(ab) ** 2
    safe = np.where(denom > 0, denom, 1.0)
    t = np.clip(((p - a) * np.conj(ab)).real / safe, 0.0, 1.0)
    t = np.where(denom > 0, t, 0.0)
    return np.abs(p - (a + t * ab))


def polyline_edges(vertices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return vertices, np.roll(vertices, -1)


def points_in_polygon(points, vertices: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Even-odd test for a closed polygon; points within ``tol`` of an edge count as inside."""
    z = np.asarray(points, dtype=complex)
    flat = z.ravel()
    # sort by height so each edge only touches the points in its band
    order = np.argsort(flat.imag, kind="stable")
    zs = flat[order]
    ys = zs.imag
    inside = np.zeros(len(flat), dtype=bool)
    near = np.zeros(len(flat), dtype=bool)
    starts, ends = polyline_edges(np.asarray(vertices, dtype=complex))
    for a, b in zip(starts.tolist(), ends.tolist()):
        lo, hi = sorted((a.imag, b.imag))
        i0, i1 = np.searchsorted(ys, lo, "left"), np.searchsorted(ys, hi, "left")
        if i1 > i0:
            band = zs[i0:i1]
            xs = a.real + (band.imag - a.imag) * (b.real - a.real) / (b.imag - a.imag)
            inside[i0:i1] ^= band.real < xs
        if tol > 0:
            j0, j1 = np.searchsorted(ys, lo - tol, "left"), np.searchsorted(ys, hi + tol, "right")
            if j1 > j0:
                near[j0:j1] |= point_segment_distance(zs[j0:j1], a, b) <= tol
    out = np.empty(len(flat), dtype=bool)
    out[order] = inside | near
    return out.reshape(z.shape)


def polygon_signed_area(vertices: np.ndarray) -> float:
    x, y = vertices.real, vertices.imag
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_is_simple(vertices: np.ndarray) -> bool:
    n = len(vertices)
    starts, ends = polyline_edges(vertices)
    if np.any(np.abs(ends - starts) == 0):
        return False
    # only edges whose midpoints are closer than the longest edge can meet
    lengths = np.abs(ends - starts)
    mids = 0.5 * (starts + ends)
    tree = cKDTree(np.column_stack([mids.real, mids.imag]))
    pairs = tree.query_pairs(float(lengths.max()) * (1 + 1e-9), output_type="ndarray")
    if len(pairs) == 0:
        return True
    i, j = pairs.min(axis=1), pairs.max(axis=1)
    hit = segments_intersect(starts[i], ends[i], starts[j], ends[j])
    adjacent = (j == i + 1) | ((i == 0) & (j == n - 1))
    if np.any(hit & ~adjacent):
        return False
    # neighbouring edges may only share their common vertex
    u, v = np.roll(vertices, 1) - vertices, np.roll(vertices, -1) - vertices
    folded = (_cross(u, v) == 0) & ((u * np.conj(v)).real > 0)
    return not bool(folded.any())


def resample_closed_polyline(vertices: np.ndarray, n: int) -> np.ndarray:
    """``n`` points equally spaced in arc length along a closed polyline."""
    closed = np.append(vertices, vertices[0])
    seg = np.abs(np.diff(closed))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    t = np.arange(n) * (s[-1] / n)
    return np.interp(t, s, closed.real) + 1j * np.interp(t, s, closed.imag)


# ---------------------------------------------------------------- shapes


@dataclass(frozen=True)
class Shape:
    kind = "shape"

    def contains(self, z, tol: float = 0.0) -> np.ndarray:
        raise NotImplementedError

    def area(self) -> float:
        raise NotImplementedError

    def diam(self) -> float:
        raise NotImplementedError

    def bbox(self) -> tuple[float, float, float, float]:
        raise NotImplementedError

    def distance_range(self, w: complex) -> tuple[float, float]:
        """(inf, sup) of |z - w| over the shape."""
        raise NotImplementedError

    def boundary_pieces(self) -> list[tuple]:
        raise NotImplementedError

    def sample_boundary(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def transformed(self, T: MobiusTransform, density: int = 64) -> "Shape":
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    @property
    def reference_point(self) -> complex:
        raise NotImplementedError

    def sample_interior(self, rng: np.random.Generator, n: int) -> np.ndarray:
        xmin, ymin, xmax, ymax = self.bbox()
        out: list[np.ndarray] = []
        got = 0
        while got < n:
            z = rng.uniform(xmin, xmax, 4 * n) + 1j * rng.uniform(ymin, ymax, 4 * n)
            z = z[self.contains(z)]
            out.append(z)
            got += len(z)
        return np.concatenate(out)[:n]


def _xy(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


@dataclass(frozen=True)
class PointShape(Shape):
    at: complex
    kind = "point"

    def contains(self, z, tol=0.0):
        return np.abs(np.asarray(z, dtype=complex) - self.at) <= tol

    def area(self):
        return 0.0

    def diam(self):
        return 0.0

    def bbox(self):
        return (self.at.real, self.at.imag, self.at.real, self.at.imag)

    def distance_range(self, w):
        d = abs(w - self.at)
        return d, d

    def boundary_pieces(self):
        return [("point", self.at)]

    def sample_boundary(self, n):
        return np.array([self.at])

    def sample_interior(self, rng, n):
        return np.full(n, self.at)

    @property
    def reference_point(self):
        return self.at

    def transformed(self, T, density=64):
        return PointShape(complex(mobius_apply(T, self.at)))

    def to_json(self):
        return {"type": "point", "at": _xy(self.at)}


@dataclass(frozen=True)
class DiskShape(Shape):
    center: complex
    radius: float
    kind = "disk"

    def contains(self, z, tol=0.0):
        return np.abs(np.asarray(z, dtype=complex) - self.center) <= self.radius + tol

    def area(self):
        return math.pi * self.radius**2

    def diam(self):
        return 2.0 * self.radius

    def bbox(self):
        c, r = self.center, self.radius
        return (c.real - r, c.imag - r, c.real + r, c.imag + r)

    def distance_range(self, w):
        d = abs(w - self.center)
        return max(d - self.radius, 0.0), d + self.radius

    def boundary_pieces(self):
        return [("circle", self.center, self.radius)]

    def sample_boundary(self, n):
        return self.center + self.radius * np.exp(2j * np.pi * np.arange(n) / n)

    @property
    def reference_point(self):
        return self.center

    def transformed(self, T, density=64):
        if T.is_affine:
            return DiskShape(complex(mobius_apply(T, self.center)), abs(T.a / T.d) * self.radius)
        pole = -T.d / T.c
        if abs(pole - self.center) <= self.radius:
            raise InvalidParameter("Möbius pole lies in a disk component")
        z = self.center + self.radius * np.exp(2j * np.pi * np.array([0.0, 1.0, 2.0]) / 3.0)
        return DiskShape(*circle_through(*mobius_apply(T, z)))

    def to_json(self):
        return {"type": "disk", "center": _xy(self.center), "radius": float(self.radius)}


@dataclass(frozen=True)
class AnnulusShape(Shape):
    center: complex
    r_in: float
    r_out: float
    kind = "annulus"

    def contains(self, z, tol=0.0):
        d = np.abs(np.asarray(z, dtype=complex) - self.center)
        return (d >= self.r_in - tol) & (d <= self.r_out + tol)

    def area(self):
        return math.pi * (self.r_out**2 - self.r_in**2)

    def diam(self):
        return 2.0 * self.r_out

    def bbox(self):
        c, r = self.center, self.r_out
        return (c.real - r, c.imag - r, c.real + r, c.imag + r)

    def distance_range(self, w):
        d = abs(w - self.center)
        if d < self.r_in:
            lo = self.r_in - d
        elif d > self.r_out:
            lo = d - self.r_out
        else:
            lo = 0.0
        return lo, d + self.r_out

    def boundary_pieces(self):
        return [("circle", self.center, self.r_in), ("circle", self.center, self.r_out)]

    def sample_boundary(self, n):
        # split samples between the circles in proportion to their lengths
        n_in = max(1, int(round(n * self.r_in / (self.r_in + self.r_out))))
        n_out = max(1, n - n_in)
        t_in = np.exp(2j * np.pi * np.arange(n_in) / n_in)
        t_out = np.exp(2j * np.pi * np.arange(n_out) / n_out)
        return np.concatenate([self.center + self.r_in * t_in, self.center + self.r_out * t_out])

    @property
    def reference_point(self):
        return self.center + 0.5 * (self.r_in + self.r_out)

    def transformed(self, T, density=64):
        if not T.is_affine:
            raise InvalidParameter("annulus components only support similarity maps")
        s = abs(T.a / T.d)
        return AnnulusShape(complex(mobius_apply(T, self.center)), s * self.r_in, s * self.r_out)

    def to_json(self):
        return {
            "type": "annulus",
            "center": _xy(self.center),
            "r_in": float(self.r_in),
            "r_out": float(self.r_out),
        }


@dataclass(frozen=True)
class PolygonShape(Shape):
    vertices: tuple[complex, ...]
    kind = "polygon"

    @property
    def array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=complex)

    def contains(self, z, tol=0.0):
        return points_in_polygon(z, self.array, tol)

    def area(self):
        return abs(polygon_signed_area(self.array))

    def diam(self):
        v = self.array
        return float(np.max(np.abs(v[:, None] - v[None, :])))

    def bbox(self):
        v = self.array
        return (v.real.min(), v.imag.min(), v.real.max(), v.imag.max())

    def distance_range(self, w):
        v = self.array
        dmax = float(np.max(np.abs(v - w)))
        if points_in_polygon(np.array([w]), v)[0]:
            return 0.0, dmax
        return self.edge_distance(w), dmax

    def edge_distance(self, w: complex) -> float:
        starts, ends = polyline_edges(self.array)
        return float(np.min(_pseg(np.full(len(starts), w), starts, ends)))

    def boundary_pieces(self):
        return [("polyline", self.array)]

    def sample_boundary(self, n):
        return resample_closed_polyline(self.array, n)

    @property
    def reference_point(self):
        v = self.array
        x, y = v.real, v.imag
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cr = x * yn - xn * y
        a = cr.sum() / 2.0
        c = complex(((x + xn) * cr).sum() / (6 * a), ((y + yn) * cr).sum() / (6 * a))
        if self.contains(np.array([c]))[0]:
            return c
        return complex(self.sample_interior(np.random.default_rng(0), 1)[0])

    def transformed(self, T, density=64):
        if T.is_affine:
            return make_polygon(mobius_apply(T, self.array))
        pole = -T.d / T.c
        if self.contains(np.array([pole]))[0]:
            raise InvalidParameter("Möbius pole lies in a polygon component")
        v = self.array
        t = np.arange(density) / density
        dense = (v[:, None] + t[None, :] * (np.roll(v, -1) - v)[:, None]).ravel()
        return make_polygon(mobius_apply(T, dense))

    def to_json(self):
        return {"type": "polygon", "vertices": [_xy(z) for z in self.vertices]}


def circle_through(z1: complex, z2: complex, z3: complex) -> tuple[complex, float]:
    """Center and radius of the circle through three points."""
    w = (z3 - z1) / (z2 - z1)
    if abs(w.imag) < 1e-15:
        raise InvalidParameter("collinear points define no circle")
    c = (z2 - z1) * (w - abs(w) ** 2) / (2j * w.imag) + z1
    return complex(c), float(abs(z1 - c))


def make_polygon(points: Iterable[complex]) -> PolygonShape:
    """Build a counter-clockwise polygon, dropping a repeated closing vertex."""
    v = np.asarray(list(points), dtype=complex)
    if len(v) > 1 and v[0] == v[-1]:
        v = v[:-1]
    if len(v) < 3:
        raise InvalidShape("polygon needs at least 3 vertices")
    area = polygon_signed_area(v)
    if not area > 0 and not area < 0:
        raise InvalidShape("polygon has zero area")
    if area < 0:
        v = v[::-1]
    return PolygonShape(tuple(complex(z) for z in v))


# ---------------------------------------------------------------- components


@dataclass(frozen=True)
class Component:
    id: str
    shape: Shape

    @property
    def is_trivial(self) -> bool:
        return self.shape.diam() == 0.0

    def to_json(self) -> dict:
        return {"id": self.id, "shape": self.shape.to_json()}


@dataclass(frozen=True)
class DomainSpec:
    components: tuple[Component, ...] = ()

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    @property
    def ids(self) -> list[str]:
        return [c.id for c in self.components]

    def get(self, cid: str) -> Component:
        for c in self.components:
            if c.id == cid:
                return c
        raise UnknownComponent(f"no component {cid!r}")

    def subset(self, ids: Iterable[str]) -> "DomainSpec":
        keep = set(ids)
        for cid in keep:
            self.get(cid)
        return DomainSpec(tuple(c for c in self.components if c.id in keep))

    def bbox(self) -> tuple[float, float, float, float]:
        if not self.components:
            return (-1.0, -1.0, 1.0, 1.0)
        boxes = np.array([c.shape.bbox() for c in self.components])
        return (boxes[:, 0].min(), boxes[:, 1].min(), boxes[:, 2].max(), boxes[:, 3].max())

    def to_json(self) -> dict:
        return {"components": [c.to_json() for c in self.components]}


@dataclass(frozen=True)
class NondegeneracyReport:
    kappas: dict[str, float]
    kappa_min: float | None
    trivial: tuple[str, ...]
    nontrivial: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "kappa": dict(self.kappas),
            "kappa_min": self.kappa_min,
            "trivial": list(self.trivial),
            "nontrivial": list(self.nontrivial),
        }


@dataclass(frozen=True)
class TauFatness:
    verdict: bool
    worst_ratio: float
    witness: tuple[complex, float] | None = field(default=None)


def component_area(c: Component | Shape) -> float:
    return _shape(c).area()


def component_diam(c: Component | Shape) -> float:
    return _shape(c).diam()


def kappa(c: Component | Shape) -> float:
    """area / diam**2 of a non-trivial component."""
    s = _shape(c)
    if s.diam() == 0:
        raise TrivialComponent("kappa is undefined for a point")
    return s.area() / s.diam() ** 2


def _shape(c) -> Shape:
    return c.shape if isinstance(c, Component) else c


def _disk_points(n: int, rotation: float) -> np.ndarray:
    """Sunflower lattice of ``n`` nearly uniform points in the unit disk."""
    k = np.arange(n)
    return np.sqrt((k + 0.5) / n) * np.exp(1j * (k * _GOLDEN_ANGLE + rotation))


def is_tau_fat(
    c: Component | Shape,
    tau: float,
    n_centers: int = 64,
    n_radii: int = 8,
    n_mc: int = 4096,
    seed: int = 0,
) -> TauFatness:
    """Seeded search for a disk B centered in A with area(A∩B) < tau·area(B).

    Centers are drawn half from the boundary and half from the interior;
    radii range up to the distance of the farthest point of A, where the
    disk would swallow A.  Area ratios use a randomly rotated sunflower
    point set of size ``n_mc``.
    """
    if not 0 < tau <= 1:
        raise InvalidParameter(f"tau must lie in (0, 1], got {tau}")
    if min(n_centers, n_radii, n_mc) < 1:
        raise InvalidParameter("sample counts must be positive")
    s = _shape(c)
    if s.diam() == 0:
        return TauFatness(True, 1.0, None)
    rng = np.random.default_rng(seed)
    n_edge = n_centers // 2
    boundary = s.sample_boundary(4096)
    centers = np.concatenate(
        [boundary[rng.integers(0, len(boundary), n_edge)], s.sample_interior(rng, n_centers - n_edge)]
    )
    worst, witness = math.inf, None
    for x in centers:
        far = s.distance_range(x)[1]
        u = np.concatenate([[1.0 - 1e-6], (np.arange(1, n_radii) + rng.uniform(size=n_radii - 1)) / n_radii])
        u = np.clip(u, 1e-3, 1.0 - 1e-6)
        base = _disk_points(n_mc, rng.uniform(0, 2 * np.pi))
        for r in far * u:
            ratio = float(np.mean(s.contains(x + r * base)))
            if ratio < worst:
                worst, witness = ratio, (complex(x), float(r))
    return TauFatness(bool(worst >= tau), worst, witness)


# ---------------------------------------------------------------- distances


def _piece_distance(p: tuple, q: tuple) -> float:
    kinds = (p[0], q[0])
    if kinds == ("point", "point"):
        return abs(p[1] - q[1])
    if kinds[0] != "circle" and kinds[1] == "circle":
        return _piece_distance(q, p)
    if kinds[0] == "point" and kinds[1] == "polyline":
        return _piece_distance(q, p)
    if p[0] == "circle":
        c, r = p[1], p[2]
        if q[0] == "circle":
            d = abs(c - q[1])
            return max(d - r - q[2], abs(r - q[2]) - d, 0.0)
        if q[0] == "point":
            return abs(abs(q[1] - c) - r)
        starts, ends = polyline_edges(q[1])
        lo = float(np.min(_pseg(np.full(len(starts), c), starts, ends)))
        hi = float(np.max(np.abs(q[1] - c)))
        if lo <= r <= hi:
            return 0.0
        return min(abs(r - lo), abs(r - hi))
    # polyline against polyline or point
    starts, ends = polyline_edges(p[1])
    if q[0] == "point":
        return float(np.min(_pseg(np.full(len(starts), q[1]), starts, ends)))
    s2, e2 = polyline_edges(q[1])
    return float(np.min(segment_segment_distance(starts[:, None], ends[:, None], s2[None, :], e2[None, :])))


def _piece_anchor(piece: tuple) -> complex:
    if piece[0] == "circle":
        return piece[1] + piece[2]
    if piece[0] == "point":
        return piece[1]
    return piece[1][0]


def shape_distance(A: Shape, B: Shape) -> float:
    """Euclidean distance between two closed shapes (0 when they meet)."""
    pa, pb = A.boundary_pieces(), B.boundary_pieces()
    if np.any(A.contains(np.array([_piece_anchor(p) for p in pb]))):
        return 0.0
    if np.any(B.contains(np.array([_piece_anchor(p) for p in pa]))):
        return 0.0
    return min(_piece_distance(p, q) for p in pa for q in pb)


# ---------------------------------------------------------------- ingestion

_FIELDS = {
    "point": {"type", "at"},
    "disk": {"type", "center", "radius"},
    "polygon": {"type", "vertices"},
    "annulus": {"type", "center", "r_in", "r_out"},
}


def _number(v, what: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InvalidShape(f"{what} must be a number, got {v!r}")
    x = float(v)
    if math.isnan(x):
        raise InvalidShape(f"{what} is NaN")
    if math.isinf(x):
        raise UnboundedComplement(f"{what} is infinite")
    return x


def _pair(v, what: str) -> complex:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise InvalidShape(f"{what} must be an [x, y] pair")
    return complex(_number(v[0], what), _number(v[1], what))


def parse_shape(raw) -> Shape:
    if isinstance(raw, Shape):
        return _check_shape(raw)
    if not isinstance(raw, dict) or "type" not in raw:
        raise InvalidShape("shape must be an object with a 'type'")
    kind = raw["type"]
    if kind not in _FIELDS:
        raise InvalidShape(f"unknown shape type {kind!r}")
    extra = set(raw) - _FIELDS[kind]
    missing = _FIELDS[kind] - set(raw)
    if extra:
        raise InvalidShape(f"unknown fields {sorted(extra)} for {kind}")
    if missing:
        raise InvalidShape(f"missing fields {sorted(missing)} for {kind}")
    if kind == "point":
        shape = PointShape(_pair(raw["at"], "at"))
    elif kind == "disk":
        shape = DiskShape(_pair(raw["center"], "center"), _number(raw["radius"], "radius"))
    elif kind == "annulus":
        shape = AnnulusShape(_pair(raw["center"], "center"), _number(raw["r_in"], "r_in"), _number(raw["r_out"], "r_out"))
    else:
        verts = raw["vertices"]
        if not isinstance(verts, list):
            raise InvalidShape("vertices must be a list")
        shape = make_polygon([_pair(v, "vertex") for v in verts])
    return _check_shape(shape)


def _check_shape(shape: Shape) -> Shape:
    if isinstance(shape, DiskShape) and not shape.radius > 0:
        raise InvalidShape("disk radius must be positive")
    if isinstance(shape, AnnulusShape) and not 0 < shape.r_in < shape.r_out:
        raise InvalidShape("annulus needs 0 < r_in < r_out")
    if isinstance(shape, PolygonShape):
        v = shape.array
        if not np.all(np.isfinite(v)):
            raise UnboundedComplement("polygon has an infinite vertex")
        if len(v) < 3 or polygon_signed_area(v) <= 0:
            raise InvalidShape("polygon must have >= 3 counter-clockwise vertices and positive area")
        if not polygon_is_simple(v):
            raise InvalidShape("polygon is not simple")
    return shape


def validate_domain(raw) -> DomainSpec:
    """Check and normalize a domain given as parsed JSON or as a ``DomainSpec``.

    Components are sorted by id; any two must be at least ``DISJOINT_TOL``
    apart.
    """
    if isinstance(raw, DomainSpec):
        items = [(c.id, c.shape) for c in raw.components]
    else:
        if not isinstance(raw, dict) or set(raw) != {"components"}:
            raise InvalidShape("domain must be an object with exactly one field 'components'")
        if not isinstance(raw["components"], list):
            raise InvalidShape("'components' must be a list")
        items = []
        for entry in raw["components"]:
            if not isinstance(entry, dict) or set(entry) != {"id", "shape"}:
                raise InvalidShape("each component needs exactly the fields 'id' and 'shape'")
            items.append((entry["id"], entry["shape"]))
    comps = []
    for cid, shape in items:
        if not isinstance(cid, str) or not cid:
            raise InvalidShape(f"component id must be a non-empty string, got {cid!r}")
        comps.append(Component(cid, parse_shape(shape)))
    comps.sort(key=lambda c: c.id)
    for a, b in zip(comps, comps[1:]):
        if a.id == b.id:
            raise InvalidShape(f"duplicate component id {a.id!r}")
    for i, a in enumerate(comps):
        for b in comps[i + 1 :]:
            d = shape_distance(a.shape, b.shape)
            if d < DISJOINT_TOL:
                raise OverlappingComponents(a.id, b.id, d)
    return DomainSpec(tuple(comps))


def load_domain(path) -> DomainSpec:
    with open(path, encoding="utf-8") as fh:
        return validate_domain(json.load(fh))


def classify(spec: DomainSpec) -> NondegeneracyReport:
    kappas = {c.id: kappa(c) for c in spec if not c.is_trivial}
    return NondegeneracyReport(
        kappas=kappas,
        kappa_min=min(kappas.values()) if kappas else None,
        trivial=tuple(c.id for c in spec if c.is_trivial),
        nontrivial=tuple(kappas),
    )


def transform_spec(spec: DomainSpec, T: MobiusTransform, density: int = 64) -> DomainSpec:
    """Image of every component under ``T`` (polygons are densified for non-affine maps)."""
    return DomainSpec(tuple(Component(c.id, c.shape.transformed(T, density)) for c in spec))

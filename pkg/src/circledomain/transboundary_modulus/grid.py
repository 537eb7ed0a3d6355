"""Cell grids over a window of the domain with every component collapsed
to a single node.

Two charts are supported.  ``cartesian`` uses square cells in the plane.
``logpolar`` uses square cells in (log|z - c|, arg(z - c)), periodic in the
angle; since extremal length is conformally invariant, moduli computed in
that chart are moduli of the physical domain, and radially graded
geometry (nested annuli, shrinking ladders) is resolved evenly.

Node numbering: cell (i, j) is node ``i * nv + j``; component k is node
``n_cells + k``.  Cells covered by a component are inert.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..domain_model import DomainSpec, PointShape
from ..errors import InvalidParameter, NoSeparatingCycle, UnknownComponent

log = logging.getLogger(__name__)

OMEGA = -1
# stencil offsets used for undirected edges: two axial, two diagonal
HALF_STENCIL = ((1, 0), (0, 1), (1, 1), (1, -1))


@dataclass
class QuotientGrid:
    spec: DomainSpec
    chart: str
    center: complex  # log-polar pole; unused for cartesian
    u0: float  # chart coordinate of the left edge of column 0
    v0: float  # chart coordinate of the bottom edge of row 0
    h: float
    nu: int
    nv: int
    cell_class: np.ndarray  # (nu, nv) int, OMEGA or component index
    comp_ids: list[str]
    comp_pos: np.ndarray  # chart position used for bare component nodes
    bare: np.ndarray  # bool per component: no cell footprint
    core: np.ndarray  # (nv,) component index hidden below column 0, or OMEGA
    warnings: list[str] = field(default_factory=list)

    # ------------------------------------------------------------ geometry
    @property
    def periodic(self) -> bool:
        return self.chart == "logpolar"

    @property
    def n_cells(self) -> int:
        return self.nu * self.nv

    @property
    def n_nodes(self) -> int:
        return self.n_cells + len(self.comp_ids)

    def node_of_component(self, cid: str) -> int:
        try:
            return self.n_cells + self.comp_ids.index(cid)
        except ValueError:
            raise UnknownComponent(f"component {cid!r} has no node in this grid") from None

    def component_of_node(self, node: int) -> str | None:
        return self.comp_ids[node - self.n_cells] if node >= self.n_cells else None

    def cell_centers(self) -> np.ndarray:
        """Chart coordinates of all cell centers as complex u + iv, shape (nu, nv)."""
        u = self.u0 + (np.arange(self.nu) + 0.5) * self.h
        v = self.v0 + (np.arange(self.nv) + 0.5) * self.h
        return u[:, None] + 1j * v[None, :]

    def to_physical(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        if self.chart == "cartesian":
            return zeta
        return self.center + np.exp(zeta)

    def to_chart(self, z):
        z = np.asarray(z, dtype=complex)
        if self.chart == "cartesian":
            return z
        return np.log(z - self.center)

    def cell_of_point(self, z: complex) -> tuple[int, int] | None:
        """Indices of the cell containing physical point ``z`` (None outside)."""
        zeta = complex(self.to_chart(np.array([z]))[0])
        i = int(math.floor((zeta.real - self.u0) / self.h))
        j = int(math.floor((zeta.imag - self.v0) / self.h))
        if self.periodic:
            j %= self.nv
        if 0 <= i < self.nu and 0 <= j < self.nv:
            return i, j
        return None

    def node_of_point(self, z: complex) -> int:
        """Node of E(Omega) containing ``z``: a cell or the covering component."""
        for k, cid in enumerate(self.comp_ids):
            if self.spec.get(cid).shape.contains(np.array([z]))[0]:
                return self.n_cells + k
        cell = self.cell_of_point(z)
        if cell is None:
            raise InvalidParameter(f"point {z} is outside the grid window")
        return cell[0] * self.nv + cell[1]

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    def sigma(self) -> np.ndarray:
        """Cell area on Omega cells, counting measure on component nodes."""
        s = np.zeros(self.n_nodes)
        s[: self.n_cells] = np.where(self.cell_class.ravel() == OMEGA, self.h * self.h, 0.0)
        s[self.n_cells :] = 1.0
        return s

    def window(self) -> tuple[float, float, float, float]:
        if self.chart == "cartesian":
            return (self.u0, self.v0, self.u0 + self.nu * self.h, self.v0 + self.nv * self.h)
        return (self.center.real, self.center.imag, math.exp(self.u0), math.exp(self.u0 + self.nu * self.h))

    def physical_bbox(self) -> tuple[float, float, float, float]:
        if self.chart == "cartesian":
            return self.window()
        r = math.exp(self.u0 + self.nu * self.h)
        c = self.center
        return (c.real - r, c.imag - r, c.real + r, c.imag + r)


def build_quotient_grid(
    spec: DomainSpec,
    window,
    n: int,
    chart: str = "cartesian",
) -> QuotientGrid:
    """Classify cells by their centers and collapse components to nodes.

    ``window`` is ``(xmin, ymin, xmax, ymax)`` for the cartesian chart and
    ``(cx, cy, r_min, r_max)`` for the log-polar chart.  ``n`` is the number
    of cells along the longer chart side; cells are always square.
    """
    if n < 16:
        raise InvalidParameter("resolution must be at least 16")
    if chart == "cartesian":
        xmin, ymin, xmax, ymax = map(float, window)
        if not (xmax > xmin and ymax > ymin):
            raise InvalidParameter("empty window")
        width, height = xmax - xmin, ymax - ymin
        h = max(width, height) / n
        nu, nv = max(1, round(width / h)), max(1, round(height / h))
        u0 = 0.5 * (xmin + xmax) - 0.5 * nu * h
        v0 = 0.5 * (ymin + ymax) - 0.5 * nv * h
        center = 0j
    elif chart == "logpolar":
        cx, cy, r_min, r_max = map(float, window)
        if not 0 < r_min < r_max:
            raise InvalidParameter("log-polar window needs 0 < r_min < r_max")
        span = math.log(r_max / r_min)
        if span >= 2 * math.pi:
            nu = n
            h = span / nu
            nv = max(1, round(2 * math.pi / h))
        else:
            nv = n
            h = 2 * math.pi / nv
            nu = max(1, round(span / h))
        h = 2 * math.pi / nv
        u0, v0 = math.log(r_min), -math.pi
        center = complex(cx, cy)
    else:
        raise InvalidParameter(f"unknown chart {chart!r}")

    grid = QuotientGrid(
        spec=spec,
        chart=chart,
        center=center,
        u0=u0,
        v0=v0,
        h=h,
        nu=nu,
        nv=nv,
        cell_class=np.full((nu, nv), OMEGA, dtype=np.int32),
        comp_ids=[],
        comp_pos=np.zeros(0, dtype=complex),
        bare=np.zeros(0, dtype=bool),
        core=np.full(nv, OMEGA, dtype=np.int32),
    )
    centers = grid.to_physical(grid.cell_centers())
    below = None
    if chart == "logpolar":
        v = v0 + (np.arange(nv) + 0.5) * h
        below = grid.to_physical(u0 - 0.5 * h + 1j * v)

    bbox = grid.physical_bbox()
    ids, pos, bare = [], [], []
    for comp in spec:
        s = comp.shape
        bx = s.bbox()
        if bx[0] > bbox[2] or bx[2] < bbox[0] or bx[1] > bbox[3] or bx[3] < bbox[1]:
            continue
        k = len(ids)
        mask = np.zeros((nu, nv), dtype=bool)
        if not isinstance(s, PointShape):
            mask = s.contains(centers) & (grid.cell_class == OMEGA)
        hidden = below is not None and not isinstance(s, PointShape) and bool(np.any(s.contains(below)))
        anchor = s.reference_point
        if chart == "logpolar" and abs(anchor - center) == 0:
            anchor = center + math.exp(u0) * 0.5
        inside_window = _point_in_window(grid, anchor)
        if not mask.any() and not hidden and not inside_window:
            # the shape may still clip the window between cell centers
            if not np.any(s.contains(centers, tol=0.75 * h * _scale(grid, centers))):
                continue
        ids.append(comp.id)
        grid.cell_class[mask] = k
        if hidden:
            grid.core[(grid.core == OMEGA) & s.contains(below)] = k
        pieces = _count_pieces(mask, grid.periodic)
        is_bare = not mask.any() and not hidden
        if not isinstance(s, PointShape) and (is_bare or (_too_thin(mask) and not hidden)):
            grid.warnings.append(f"component {comp.id!r} is under-resolved at this resolution")
        if pieces > 1:
            grid.warnings.append(f"component {comp.id!r} splits into {pieces} pieces on the grid")
        pos.append(complex(grid.to_chart(np.array([anchor]))[0]) if inside_window else np.nan)
        bare.append(is_bare)
    grid.comp_ids = ids
    grid.comp_pos = np.array(pos, dtype=complex)
    grid.bare = np.array(bare, dtype=bool)
    for w in grid.warnings:
        log.warning(w)
    return grid


def _scale(grid: QuotientGrid, centers: np.ndarray):
    if grid.chart == "cartesian":
        return 1.0
    return np.abs(centers - grid.center)


def _count_pieces(mask: np.ndarray, periodic: bool) -> int:
    if not mask.any():
        return 0
    labels, count = ndimage.label(mask, structure=np.ones((3, 3)))
    if not periodic or count < 2:
        return count
    # glue pieces that meet across the angular seam
    parent = list(range(count + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    last, first = labels[:, -1], labels[:, 0]
    for di in (-1, 0, 1):
        a = last[max(0, -di) : len(last) - max(0, di)]
        b = first[max(0, di) : len(first) - max(0, -di)]
        for x, y in zip(a[(a > 0) & (b > 0)], b[(a > 0) & (b > 0)]):
            parent[find(int(x))] = find(int(y))
    return len({find(k) for k in range(1, count + 1)})


def _too_thin(mask: np.ndarray) -> bool:
    if not mask.any():
        return False
    ii, jj = np.nonzero(mask)
    return (ii.max() - ii.min() + 1) < 2 or (jj.max() - jj.min() + 1) < 2


def _point_in_window(grid: QuotientGrid, z: complex) -> bool:
    return grid.cell_of_point(z) is not None


# ---------------------------------------------------------------- beta


@dataclass
class Enclosure:
    """A cycle of Omega cells around a component plus the cells it encloses."""

    cycle: list[int]
    region: np.ndarray  # (nu, nv) bool, the cycle and the cells it encloses

    def polygon(self, grid: QuotientGrid) -> np.ndarray:
        centers = grid.to_physical(grid.cell_centers()).ravel()
        return centers[np.array(self.cycle)]


def component_cells(grid: QuotientGrid, cid: str) -> np.ndarray:
    """Cells (i, j) covered by the component, or the cell holding a bare node."""
    k = grid.node_of_component(cid) - grid.n_cells
    ii, jj = np.nonzero(grid.cell_class == k)
    if len(ii):
        return np.column_stack([ii, jj])
    if grid.core is not None and np.any(grid.core == k):
        jj = np.nonzero(grid.core == k)[0]
        return np.column_stack([np.full(len(jj), -1), jj])
    cell = grid.cell_of_point(complex(grid.to_physical(np.array([grid.comp_pos[k]]))[0]))
    if cell is None:
        raise NoSeparatingCycle(f"component {cid!r} lies outside the window")
    return np.array([cell])


def beta_curve(grid: QuotientGrid, b: str, min_offset: int = 1) -> Enclosure:
    """Smallest all-Omega cell ring around ``b``, grown outward.

    In the cartesian chart this is the boundary of an index rectangle.  In
    the log-polar chart, when ``b`` hides the pole, it is the first full
    column of Omega cells to the right of ``b``.
    """
    cells = component_cells(grid, b)
    k = grid.node_of_component(b) - grid.n_cells
    omega = grid.cell_class == OMEGA
    if grid.chart == "logpolar" and np.any(grid.core == k):
        start = int(cells[:, 0].max()) + min_offset
        for i in range(max(start, 0), grid.nu):
            if omega[i].all():
                region = np.zeros_like(omega)
                region[: i + 1] = True
                return Enclosure([i * grid.nv + j for j in range(grid.nv)], region)
        raise NoSeparatingCycle(f"no all-Omega column encloses {b!r}")
    i0, j0 = cells.min(axis=0)
    i1, j1 = cells.max(axis=0)
    off = min_offset
    while True:
        a0, a1, c0, c1 = i0 - off, i1 + off, j0 - off, j1 + off
        if a0 < 0 or c0 < 0 or a1 >= grid.nu or c1 >= grid.nv:
            raise NoSeparatingCycle(f"every enclosing ring around {b!r} leaves the window")
        ring = _rectangle_ring(a0, a1, c0, c1)
        if all(omega[i, j] for i, j in ring):
            region = np.zeros_like(omega)
            region[a0 : a1 + 1, c0 : c1 + 1] = True
            return Enclosure([i * grid.nv + j for i, j in ring], region)
        off += 1


def _rectangle_ring(a0: int, a1: int, c0: int, c1: int) -> list[tuple[int, int]]:
    """Cells on the boundary of an index rectangle, counter-clockwise."""
    ring = [(i, c0) for i in range(a0, a1 + 1)]
    ring += [(a1, j) for j in range(c0 + 1, c1 + 1)]
    ring += [(i, c1) for i in range(a1 - 1, a0 - 1, -1)]
    ring += [(a0, j) for j in range(c1 - 1, c0, -1)]
    return ring


def enclosure_from_polygon(grid: QuotientGrid, polygon: np.ndarray) -> Enclosure:
    """Cells whose centers lie inside a physical Jordan polygon."""
    from ..domain_model import points_in_polygon

    poly = np.asarray(polygon, dtype=complex)
    for cid in grid.comp_ids:
        if np.any(grid.spec.get(cid).shape.contains(poly)):
            raise InvalidParameter(f"enclosing curve meets component {cid!r}")
    centers = grid.to_physical(grid.cell_centers())
    region = points_in_polygon(centers, poly)
    return Enclosure([], region)

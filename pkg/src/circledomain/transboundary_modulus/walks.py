"""Discrete curves on a quotient grid and shortest family curves.

Walks move between cells along an 8-neighbour stencil (axial steps of
length h, diagonal steps of length h*sqrt(2); a diagonal may not squeeze
between two non-Omega cells).  A cell visited by a walk is charged half of
each of its two steps, a component node is charged its full weight.

Whether a closed walk winds around a point is decided by the parity of
its crossings with a ray from that point.  Shortest walks with prescribed
parities are found by Dijkstra on a cover of the graph whose sheets record
the parities accumulated so far.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from ..errors import EmptyFamily, InvalidParameter, InvalidWalk
from .grid import HALF_STENCIL, OMEGA, Enclosure, QuotientGrid, beta_curve, enclosure_from_polygon

_JITTER = complex(0.1234, 0.3071)
_TWO_PI_I = 2j * math.pi

# ---------------------------------------------------------------- families


@dataclass(frozen=True)
class SeparatingFamily:
    """Closed walks in the enclosed region, avoiding ``q``, that either wind
    around both ``q`` and ``b``, or pass through ``b`` and wind around ``q``.

    ``q`` is a component id or a point of the domain.  ``beta`` is a closed
    physical polygon around ``b``; ``None`` selects the canonical cell ring.
    """

    q: str | complex
    b: str
    beta: tuple[complex, ...] | None = None


@dataclass(frozen=True)
class EnclosingFamily:
    """Closed walks in the enclosed region that wind around ``b``."""

    b: str
    beta: tuple[complex, ...] | None = None


# ---------------------------------------------------------------- geometry


@dataclass
class Adjacency:
    """Metric-independent edges of a grid.

    Every edge joins an Omega cell ``a`` to a cell or component node ``b``.
    ``start`` and ``disp`` give the straight chart segment used for the
    crossing tests (for component edges it ends at the component site
    ``site``).  ``wrap`` marks segments across the angular seam.
    """

    a: np.ndarray
    b: np.ndarray
    length: np.ndarray
    start: np.ndarray
    disp: np.ndarray
    wrap: np.ndarray
    site: np.ndarray  # -1 for cell-cell edges, site index otherwise
    # component sites: real cells, hidden cells below column 0, bare anchors
    site_comp: np.ndarray
    site_pos: np.ndarray
    site_links: tuple[np.ndarray, np.ndarray, np.ndarray]  # (s1, s2, wrap) pairs inside a component
    table: tuple = ()  # (sorted edge keys, shortest length per key)

    def _table(self):
        if not self.table:
            keys = np.minimum(self.a, self.b).astype(np.int64) * (1 << 32) + np.maximum(self.a, self.b)
            order = np.lexsort((self.length, keys))
            uniq, first = np.unique(keys[order], return_index=True)
            self.table = (uniq, self.length[order][first])
        return self.table

    def step_lengths(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        keys, lengths = self._table()
        q = np.minimum(u, v).astype(np.int64) * (1 << 32) + np.maximum(u, v)
        pos = np.minimum(np.searchsorted(keys, q), len(keys) - 1)
        bad = keys[pos] != q
        if bad.any():
            k = int(np.argmax(bad))
            raise InvalidWalk(f"nodes {int(u[k])} and {int(v[k])} are not adjacent")
        return lengths[pos]

    def edge_length(self, u: int, v: int) -> float:
        return float(self.step_lengths(np.array([u]), np.array([v]))[0])


def adjacency(grid: QuotientGrid) -> Adjacency:
    cached = getattr(grid, "_adjacency", None)
    if cached is not None:
        return cached
    adj = _build_adjacency(grid)
    grid._adjacency = adj
    return adj


def _neighbour(grid: QuotientGrid, i: np.ndarray, j: np.ndarray, di: int, dj: int):
    ii, jj = i + di, j + dj
    wrap = np.zeros(len(i), dtype=bool)
    if grid.periodic:
        wrap = (jj < 0) | (jj >= grid.nv)
        jj = jj % grid.nv
        ok = (ii >= 0) & (ii < grid.nu)
    else:
        ok = (ii >= 0) & (ii < grid.nu) & (jj >= 0) & (jj < grid.nv)
    return ii, jj, wrap, ok


def _build_adjacency(grid: QuotientGrid) -> Adjacency:
    cls = grid.cell_class
    nv, h = grid.nv, grid.h
    centers = grid.cell_centers()
    omega = cls == OMEGA
    oi, oj = np.nonzero(omega)

    A, B, L, S, D, W, SITE = [], [], [], [], [], [], []

    # component sites: one per component cell, hidden cell, or bare anchor
    site_comp, site_pos, site_key = [], [], {}
    ci, cj = np.nonzero(cls >= 0)
    for i, j in zip(ci.tolist(), cj.tolist()):
        site_key[(i, j)] = len(site_comp)
        site_comp.append(int(cls[i, j]))
        site_pos.append(centers[i, j])
    for j in np.nonzero(grid.core >= 0)[0].tolist():
        site_key[(-1, j)] = len(site_comp)
        site_comp.append(int(grid.core[j]))
        site_pos.append(grid.u0 - 0.5 * h + 1j * (grid.v0 + (j + 0.5) * h))
    anchor_site = {}
    for k in np.nonzero(grid.bare)[0].tolist():
        if not np.isnan(grid.comp_pos[k]):
            anchor_site[k] = len(site_comp)
            site_comp.append(k)
            site_pos.append(grid.comp_pos[k])

    def cls_at(i, j):
        """Class with hidden cells below column 0 and nothing outside."""
        out = np.full(len(i), -2, dtype=np.int64)
        inside = (i >= 0) & (i < grid.nu)
        out[inside] = cls[i[inside], j[inside]]
        if grid.periodic:
            below = i == -1
            out[below] = grid.core[j[below]]
            out[below & (out == OMEGA)] = -2
        return out

    offsets = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)]
    for di, dj in offsets:
        diagonal = di != 0 and dj != 0
        ii, jj = oi + di, oj + dj
        wrap = np.zeros(len(oi), dtype=bool)
        if grid.periodic:
            wrap = (jj < 0) | (jj >= nv)
            jj = jj % nv
        valid = (ii >= -1) & (ii < grid.nu) & (jj >= 0) & (jj < nv)
        target = np.full(len(oi), -2, dtype=np.int64)
        target[valid] = cls_at(ii[valid], jj[valid])
        if diagonal:
            s1 = cls_at(ii, oj) if True else None
            j2 = (oj + dj) % nv if grid.periodic else np.clip(oj + dj, 0, nv - 1)
            s2 = cls_at(oi, j2)
            pinched = (s1 != OMEGA) & (s2 != OMEGA)
            valid &= ~pinched
        length = h * math.hypot(di, dj)
        start = centers[oi, oj]
        disp = complex(di * h, dj * h)
        # cell-cell edges: keep each undirected pair once
        if (di, dj) in HALF_STENCIL:
            sel = valid & (target == OMEGA)
            A.append(oi[sel] * nv + oj[sel])
            B.append(ii[sel] * nv + jj[sel])
            L.append(np.full(sel.sum(), length))
            S.append(start[sel])
            D.append(np.full(sel.sum(), disp))
            W.append(wrap[sel])
            SITE.append(np.full(sel.sum(), -1))
        sel = valid & (target >= 0)
        if sel.any():
            sites = np.array([site_key[(a, b)] for a, b in zip(ii[sel].tolist(), jj[sel].tolist())], dtype=np.int64)
            A.append(oi[sel] * nv + oj[sel])
            B.append(grid.n_cells + target[sel])
            L.append(np.full(sel.sum(), length))
            S.append(start[sel])
            D.append(np.full(sel.sum(), disp))
            W.append(wrap[sel])
            SITE.append(sites)

    # bare components: attach to the cells whose centers are near the shape
    phys = grid.to_physical(centers)
    scale = 1.0 if grid.chart == "cartesian" else np.abs(phys - grid.center)
    for k in np.nonzero(grid.bare)[0].tolist():
        shape = grid.spec.get(grid.comp_ids[k]).shape
        reach = 0.75 * h * scale
        near = shape.contains(phys, tol=float(np.max(reach))) & omega
        if np.ndim(reach):
            # the log-polar tolerance varies per cell; recheck the candidates
            for i, j in zip(*np.nonzero(near)):
                near[i, j] = shape.distance_range(complex(phys[i, j]))[0] <= reach[i, j]
        if k not in anchor_site or not near.any():
            continue
        ni, nj = np.nonzero(near)
        start = centers[ni, nj]
        disp = grid.comp_pos[k] - start
        A.append(ni * nv + nj)
        B.append(np.full(len(ni), grid.n_cells + k))
        L.append(np.abs(disp))
        S.append(start)
        D.append(disp)
        W.append(np.zeros(len(ni), dtype=bool))
        SITE.append(np.full(len(ni), anchor_site[k]))

    # links between sites of the same component, for parity labels
    l1, l2, lw = [], [], []
    for (i, j), s in site_key.items():
        for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
            i2, j2 = i + di, j + dj
            wr = False
            if grid.periodic and not 0 <= j2 < nv:
                wr, j2 = True, j2 % nv
            s2 = site_key.get((i2, j2))
            if s2 is not None and site_comp[s2] == site_comp[s]:
                l1.append(s)
                l2.append(s2)
                lw.append(wr)

    cat = lambda parts, dt: np.concatenate(parts).astype(dt) if parts else np.zeros(0, dtype=dt)  # noqa: E731
    return Adjacency(
        a=cat(A, np.int64),
        b=cat(B, np.int64),
        length=cat(L, float),
        start=cat(S, complex),
        disp=cat(D, complex),
        wrap=cat(W, bool),
        site=cat(SITE, np.int64),
        site_comp=np.array(site_comp, dtype=np.int64),
        site_pos=np.array(site_pos, dtype=complex),
        site_links=(np.array(l1, dtype=np.int64), np.array(l2, dtype=np.int64), np.array(lw, dtype=bool)),
    )


# ---------------------------------------------------------------- cuts


@dataclass(frozen=True)
class RayCut:
    """Half-line from ``origin`` in direction ``direction`` (chart coordinates)."""

    origin: complex
    direction: complex

    def crosses(self, start: np.ndarray, disp: np.ndarray, wrap: np.ndarray, periodic: bool) -> np.ndarray:
        hit = _ray_hits(self.origin, self.direction, start, disp)
        if periodic and wrap.any():
            for shift in (_TWO_PI_I, -_TWO_PI_I):
                hit[wrap] ^= _ray_hits(self.origin, self.direction, start[wrap] + shift, disp[wrap])
        return hit

    def side(self, points: np.ndarray) -> np.ndarray:
        d = points - self.origin
        return (self.direction.real * d.imag - self.direction.imag * d.real) > 0


@dataclass(frozen=True)
class SeamCut:
    """The angular seam of a log-polar chart (a ray from its pole)."""

    def crosses(self, start, disp, wrap, periodic):
        return wrap.copy()

    def side(self, points: np.ndarray) -> np.ndarray:
        return points.imag > 0


def _ray_hits(o: complex, r: complex, p: np.ndarray, d: np.ndarray) -> np.ndarray:
    denom = d.real * r.imag - d.imag * r.real
    q = o - p
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (q.real * r.imag - q.imag * r.real) / denom
        t = (q.real * d.imag - q.imag * d.real) / denom
    return (denom != 0) & (s >= 0) & (s <= 1) & (t > 0)


# ---------------------------------------------------------------- family context


@dataclass
class FamilyGraph:
    """Walk graph of one family: active nodes, lifted edges and sources."""

    grid: QuotientGrid
    family: object
    enclosure: Enclosure
    cuts: list
    target: int  # parity bitmask a closed walk must reach
    nodes: np.ndarray  # active base node ids (compact index -> node)
    index: np.ndarray  # node -> compact index or -1
    free_nodes: set  # component nodes charged nothing
    removed: set
    edge_a: np.ndarray  # compact endpoints of the base edges
    edge_b: np.ndarray
    edge_len: np.ndarray
    edge_kind: np.ndarray  # 0 cell-cell, 1 cell-component
    lifted: sp.csr_matrix  # data holds base edge index + 1
    sources: np.ndarray  # compact indices
    heuristic: bool = False

    @property
    def n_sheets(self) -> int:
        return 1 << len(self.cuts)

    def weights(self, m: np.ndarray) -> np.ndarray:
        """Per base edge weight under the node metric ``m``."""
        ma = m[self.nodes[self.edge_a]]
        mb = m[self.nodes[self.edge_b]]
        charge = mb.copy()
        for node in self.free_nodes:
            charge[self.nodes[self.edge_b] == node] = 0.0
        cell = (ma + mb) * 0.5 * self.edge_len
        comp = ma * 0.5 * self.edge_len + 0.5 * charge
        return np.where(self.edge_kind == 0, cell, comp)


def _point_chart(grid: QuotientGrid, z: complex) -> complex:
    if grid.periodic and z == grid.center:
        return complex(grid.u0 - grid.h, 0.0)
    return complex(grid.to_chart(np.array([z]))[0])


def _resolve_point(grid: QuotientGrid, where) -> tuple[int, complex]:
    """Node of a component id or physical point, and a generic ray origin near it."""
    h = grid.h
    if isinstance(where, str):
        node = grid.node_of_component(where)
        k = node - grid.n_cells
        ii, jj = np.nonzero(grid.cell_class == k)
        shape = grid.spec.get(where).shape
        if len(ii):
            ref = _point_chart(grid, shape.reference_point)
            centers = grid.cell_centers()[ii, jj]
            c = centers[np.argmin(np.abs(centers - ref))]
            return node, c + _JITTER * h
        if np.any(grid.core == k):
            return node, grid.u0 - 0.5 * h + 1j * 0.0 + _JITTER * h
        return node, grid.comp_pos[k] + _JITTER * 1e-6 * h
    z = complex(where)
    node = grid.node_of_point(z)
    if node >= grid.n_cells:
        raise InvalidParameter(f"point {z} lies in a component; pass its id instead")
    i, j = divmod(node, grid.nv)
    return node, grid.cell_centers()[i, j] + _JITTER * h


def _component_labels(grid: QuotientGrid, adj: Adjacency, cut) -> tuple[np.ndarray, np.ndarray]:
    """Crossing parity of each component site relative to a reference site.

    Returns per-site labels and per-component flags that are True when the
    labels are not well defined (the cut starts inside the component, or
    the component falls apart into several pieces on the grid).
    """
    n_sites = len(adj.site_comp)
    ncomp = len(grid.comp_ids)
    s1, s2, lw = adj.site_links
    pos = adj.site_pos
    flip = cut.crosses(pos[s1], pos[s2] - pos[s1] + np.where(lw, 0, 0), lw, grid.periodic) if len(s1) else np.zeros(0, bool)
    if len(s1) and grid.periodic:
        # wrapped links: the second site sits one period away
        d = pos[s2] - pos[s1]
        d = np.where(lw, d - np.sign(d.imag) * _TWO_PI_I, d)
        flip = cut.crosses(pos[s1], d, lw, True)
    graph = sp.coo_matrix((flip.astype(np.int8) + 1, (s1, s2)), shape=(n_sites, n_sites)).tocsr()
    graph = graph + graph.T
    labels = np.full(n_sites, -1, dtype=np.int64)
    free = np.zeros(ncomp, dtype=bool)
    seen_comp = np.zeros(ncomp, dtype=bool)
    indptr, indices, data = graph.indptr, graph.indices, graph.data
    for s in range(n_sites):
        if labels[s] >= 0:
            continue
        k = adj.site_comp[s]
        if seen_comp[k]:
            free[k] = True
        seen_comp[k] = True
        labels[s] = 0
        stack = [s]
        while stack:
            x = stack.pop()
            for p in range(indptr[x], indptr[x + 1]):
                y, f = indices[p], data[p] - 1
                want = labels[x] ^ f
                if labels[y] < 0:
                    labels[y] = want
                    stack.append(y)
                elif labels[y] != want:
                    free[k] = True
    return np.maximum(labels, 0), free


def prepare_family(grid: QuotientGrid, family) -> FamilyGraph:
    adj = adjacency(grid)
    if isinstance(family, SeparatingFamily):
        b = family.b
    elif isinstance(family, EnclosingFamily):
        b = family.b
    else:
        raise InvalidParameter(f"unsupported family {family!r}")
    b_node = grid.node_of_component(b)
    if family.beta is None:
        enclosure = beta_curve(grid, b)
    else:
        enclosure = enclosure_from_polygon(grid, np.array(family.beta, dtype=complex))
    region = enclosure.region.ravel()

    # b's ray: the seam when b hides the log-polar pole
    bk = b_node - grid.n_cells
    _, b_origin = _resolve_point(grid, b)
    removed: set[int] = set()
    free_nodes: set[int] = set()
    if grid.periodic and np.any(grid.core == bk):
        b_cut = SeamCut()
    else:
        b_cut = None
    if isinstance(family, SeparatingFamily):
        q_node, q_origin = _resolve_point(grid, family.q)
        if q_node == b_node:
            raise InvalidParameter("q and b must differ")
        removed.add(q_node)
        free_nodes.add(b_node)
        if grid.periodic:
            q_cut = RayCut(q_origin, 1 + 0j)
        else:
            direction = q_origin - b_origin
            q_cut = RayCut(q_origin, direction / abs(direction) * np.exp(0.0123j))
        if b_cut is None:
            direction = -1 + 0j if grid.periodic else (b_origin - q_origin) / abs(b_origin - q_origin)
            b_cut = RayCut(b_origin, direction * np.exp(0.0123j) if not grid.periodic else direction)
            if grid.periodic:
                b_cut = RayCut(b_origin, 1 + 0j)
        cuts = [q_cut, b_cut]
        target = 0b11
        if q_node < grid.n_cells and not region[q_node]:
            raise EmptyFamily("q lies outside the enclosing curve")
    else:
        removed.add(b_node)
        if b_cut is None:
            b_cut = RayCut(b_origin, 1 + 0j if grid.periodic else np.exp(0.0123j))
        cuts = [b_cut]
        target = 0b1

    # active nodes
    cell_ok = (grid.cell_class.ravel() == OMEGA) & region
    comp_ok = np.zeros(len(grid.comp_ids), dtype=bool)
    cls = grid.cell_class.ravel()
    for k in range(len(grid.comp_ids)):
        cells = np.nonzero(cls == k)[0]
        if len(cells):
            comp_ok[k] = bool(region[cells].any())
        elif np.any(grid.core == k):
            comp_ok[k] = bool(enclosure.region[0].any())
        else:
            near = adj.a[adj.b == grid.n_cells + k]
            comp_ok[k] = bool(len(near)) and bool(region[near].any())
    ok = np.concatenate([cell_ok, comp_ok])
    for node in removed:
        ok[node] = False
    ok[b_node] = ok[b_node] or isinstance(family, SeparatingFamily)
    if isinstance(family, SeparatingFamily):
        ok[b_node] = True

    keep = ok[adj.a] & ok[adj.b]
    ea, eb = adj.a[keep], adj.b[keep]
    elen, start, disp, wrap, site = adj.length[keep], adj.start[keep], adj.disp[keep], adj.wrap[keep], adj.site[keep]

    # parity of every edge for every cut, plus freedom on component transits
    parity = np.zeros(len(ea), dtype=np.int64)
    freedom = np.zeros(len(ea), dtype=np.int64)
    for bit, cut in enumerate(cuts):
        labels, free = _component_labels(grid, adj, cut)
        cross = cut.crosses(start, disp, wrap, grid.periodic).astype(np.int64)
        is_comp = site >= 0
        cross[is_comp] ^= labels[site[is_comp]]
        parity |= cross << bit
        comp_index = np.where(is_comp, eb - grid.n_cells, 0)
        fr = is_comp & free[comp_index]
        freedom |= fr.astype(np.int64) << bit

    # expand free bits into parity variants
    variants_a, variants_b, variants_len, variants_par, variants_kind = [], [], [], [], []
    kind = (eb >= grid.n_cells).astype(np.int8)
    for sub in range(1 << len(cuts)):
        sel = (freedom & sub) == sub
        variants_a.append(ea[sel])
        variants_b.append(eb[sel])
        variants_len.append(elen[sel])
        variants_par.append(parity[sel] ^ sub)
        variants_kind.append(kind[sel])
    ea = np.concatenate(variants_a)
    eb = np.concatenate(variants_b)
    elen = np.concatenate(variants_len)
    par = np.concatenate(variants_par)
    kind = np.concatenate(variants_kind)

    nodes = np.nonzero(ok)[0]
    index = np.full(grid.n_nodes, -1, dtype=np.int64)
    index[nodes] = np.arange(len(nodes))
    ca, cb = index[ea], index[eb]

    # collapse duplicates (same endpoints and parity): keep the shortest
    n = len(nodes)
    key = (ca * n + cb) * (1 << len(cuts)) + par
    order = np.lexsort((elen, key))
    first = np.ones(len(order), dtype=bool)
    first[1:] = key[order][1:] != key[order][:-1]
    sel = order[first]
    ca, cb, elen, par, kind = ca[sel], cb[sel], elen[sel], par[sel], kind[sel]

    S = 1 << len(cuts)
    rows, cols, data = [], [], []
    eid = np.arange(len(ca)) + 1
    for s in range(S):
        u = ca + s * n
        v = cb + (s ^ par) * n
        rows += [u, v]
        cols += [v, u]
        data += [eid, eid]
    lifted = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(S * n, S * n)
    )
    lifted.sort_indices()

    # sources: one endpoint of every edge that can change the chosen cut's parity
    best = None
    for bit, cut in enumerate(cuts):
        flips = ((par >> bit) & 1) == 1
        fa, fb = ca[flips], cb[flips]
        pts = _node_chart_positions(grid, nodes[fa])
        left = cut.side(pts)
        chosen = np.where(left | (nodes[fb] >= grid.n_cells), fa, fb)
        chosen = np.where(nodes[fb] >= grid.n_cells, fb, chosen)
        srcs = np.unique(chosen)
        if best is None or len(srcs) < len(best):
            best = srcs
    sources = best if best is not None else np.zeros(0, dtype=np.int64)
    if isinstance(family, SeparatingFamily):
        sources = np.union1d(sources, [index[b_node]])
    if len(sources) == 0:
        raise EmptyFamily("no admissible closed walk at this resolution")
    return FamilyGraph(
        grid=grid,
        family=family,
        enclosure=enclosure,
        cuts=cuts,
        target=target,
        nodes=nodes,
        index=index,
        free_nodes=free_nodes,
        removed=removed,
        edge_a=ca,
        edge_b=cb,
        edge_len=elen,
        edge_kind=kind,
        lifted=lifted,
        sources=sources.astype(np.int64),
    )


def _node_chart_positions(grid: QuotientGrid, nodes: np.ndarray) -> np.ndarray:
    centers = grid.cell_centers().ravel()
    out = np.empty(len(nodes), dtype=complex)
    cell = nodes < grid.n_cells
    out[cell] = centers[nodes[cell]]
    out[~cell] = grid.comp_pos[nodes[~cell] - grid.n_cells]
    return out


# ---------------------------------------------------------------- lengths


def walk_is_closed(walk) -> bool:
    return len(walk) > 1 and walk[0] == walk[-1]


def visit_lengths(grid: QuotientGrid, walk) -> tuple[dict, set]:
    """Length element per visited Omega cell and the set of visited components.

    Each visit of a cell contributes half of its incoming and half of its
    outgoing step; an open walk's end cells get half a cell width for the
    missing step.
    """
    walk = np.asarray(walk, dtype=np.int64)
    closed = walk_is_closed(walk.tolist())
    seq = walk[:-1] if closed else walk
    n = len(seq)
    if n == 0:
        return {}, set()
    adj = adjacency(grid)
    if closed:
        steps = adj.step_lengths(seq, np.roll(seq, -1)) if n > 1 else np.zeros(1)
        before, after = np.roll(steps, 1), steps
    else:
        steps = adj.step_lengths(seq[:-1], seq[1:])
        before = np.concatenate([[grid.h], steps])
        after = np.concatenate([steps, [grid.h]])
    is_cell = seq < grid.n_cells
    comps = set(seq[~is_cell].tolist())
    cell_nodes = seq[is_cell]
    if np.any(grid.cell_class.ravel()[cell_nodes] != OMEGA):
        bad = cell_nodes[grid.cell_class.ravel()[cell_nodes] != OMEGA][0]
        raise InvalidWalk(f"node {int(bad)} is a covered cell")
    uniq, inv = np.unique(cell_nodes, return_inverse=True)
    ell = np.bincount(inv, weights=0.5 * (before + after)[is_cell], minlength=len(uniq))
    return dict(zip(uniq.tolist(), ell.tolist())), comps


def curve_length(grid: QuotientGrid, m: np.ndarray, walk, free=()) -> float:
    """m-length of a walk: cell weights times length elements, plus each
    distinct component's weight once."""
    cells, comps = visit_lengths(grid, walk)
    m = np.asarray(m, dtype=float)
    total = float(np.dot(m[list(cells)], list(cells.values()))) if cells else 0.0
    total += sum(float(m[c]) for c in comps if c not in free)
    return total


# ---------------------------------------------------------------- shortest walks


@dataclass
class FoundWalk:
    nodes: tuple[int, ...]  # closed node walk (first == last)
    cost: float  # path cost with per-entry component charges
    length: float  # m-length with set semantics
    main: bool = True  # shortest walk through its source, not a detour through another node

    @property
    def repeats_component(self) -> bool:
        comps = [v for v in self.nodes[:-1] if v >= 0]
        return False if not comps else len(comps) != len(set(comps))


def _tree_path(pred_row: np.ndarray, s: int, t: int) -> list[int]:
    path = [t]
    while path[-1] != s:
        path.append(int(pred_row[path[-1]]))
    return path[::-1]


def scan_sources(
    fg: FamilyGraph,
    m: np.ndarray,
    sources: np.ndarray,
    limit: float = np.inf,
    batch: int = 16,
    through: int = 0,
    below: float = np.inf,
) -> list[FoundWalk]:
    """Shortest admissible closed walk through each source.

    With ``through > 0`` each source also yields up to that many walks
    through the source and some other node x, shortest among those through
    both, for x spread over the nodes where such a walk costs less than
    ``below``.  One search gives them all: the two halves of the walk are
    the tree paths to x on the start sheet and on the target sheet.
    """
    w = fg.weights(m)
    G = fg.lifted.copy()
    G.data = w[G.data - 1]
    n = len(fg.nodes)
    found: list[FoundWalk] = []
    free = set(fg.free_nodes)
    off = fg.target * n

    def emit(base_lifted, cost, main=True):
        base = [int(fg.nodes[p % n]) for p in base_lifted]
        found.append(FoundWalk(tuple(base), float(cost), curve_length(fg.grid, m, base, free), main))

    for k in range(0, len(sources), batch):
        chunk = sources[k : k + batch]
        dist, pred = dijkstra(G, directed=True, indices=chunk, return_predecessors=True, limit=limit)
        for row, s in enumerate(chunk.tolist()):
            d = dist[row, s + off]
            if not np.isfinite(d):
                continue
            emit(_tree_path(pred[row], s, s + off), d)
            if through <= 0:
                continue
            total = dist[row, :n] + dist[row, off : off + n]
            cand = np.nonzero(np.isfinite(total) & (total < below) & (total > d * (1 + 1e-9)))[0]
            if len(cand) == 0:
                continue
            pick = cand[np.argsort(total[cand], kind="stable")]
            pick = pick[np.linspace(0, len(pick) - 1, min(through, len(pick))).astype(int)]
            for x in np.unique(pick).tolist():
                first = _tree_path(pred[row], s, x)
                second = _tree_path(pred[row], s, x + off)
                emit(first + second[::-1][1:], total[x], main=False)
    return found


def shortest_family_curve(grid: QuotientGrid, m: np.ndarray, family) -> tuple[list[int], float]:
    """Minimum m-length closed walk of ``family`` (exhaustive over sources)."""
    fg = family if isinstance(family, FamilyGraph) else prepare_family(grid, family)
    found = scan_sources(fg, np.asarray(m, dtype=float), fg.sources)
    if not found:
        raise EmptyFamily("no admissible closed walk at this resolution")
    best = min(found, key=lambda f: (f.length, f.nodes))
    return list(best.nodes), best.length

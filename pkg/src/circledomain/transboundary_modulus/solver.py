"""Discrete transboundary extremal length by constraint generation.

The modulus of a curve family is min A(m) = sum sigma m^2 over metrics
whose every family curve has m-length at least 1; extremal length is its
reciprocal.  Curves are added as linear constraints as shortest-walk scans
find them violated, and the quadratic program over the accumulated
constraints is solved in its dual form, a non-negative least squares
problem.

Every iterate carries a certified bracket for the discrete extremal
length: the current metric gives L_min^2 / A(m) from below (the sup
form), and any dual vector gives 1 / g(mu) from above because the
restricted program's optimum can only grow as constraints are added.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from ..domain_model import transform_spec
from ..errors import EmptyFamily, InvalidParameter, MaxIterExceeded
from ..sphere_geom import MobiusTransform, mobius_apply
from .grid import QuotientGrid, build_quotient_grid
from .walks import EnclosingFamily, FamilyGraph, SeparatingFamily, prepare_family, scan_sources, visit_lengths

log = logging.getLogger(__name__)


@dataclass
class ELResult:
    modulus: float
    el: float
    metric: np.ndarray  # weight per grid node
    binding_curves: list[list[int]]
    iterations: int
    residual: float
    bracket: tuple[float, float]
    converged: bool = True
    heuristic: bool = False
    n_constraints: int = 0
    seconds: float = 0.0
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "el": self.el,
            "modulus": self.modulus,
            "iterations": self.iterations,
            "residual": self.residual,
            "bracket": list(self.bracket),
            "converged": self.converged,
            "heuristic": self.heuristic,
            "constraints": self.n_constraints,
        }


def metric_area(grid: QuotientGrid, m: np.ndarray) -> float:
    return float(np.dot(grid.sigma(), np.asarray(m, dtype=float) ** 2))


class _Constraints:
    """Rows of the constraint matrix over a compact set of variables."""

    def __init__(self, sigma: np.ndarray):
        self.sigma_all = sigma
        self.rows: list[tuple[np.ndarray, np.ndarray]] = []  # (sorted nodes, coefficients)
        self.walks: list[tuple[int, ...]] = []
        self.row_keys: list[bytes] = []
        self.keys: set = set()

    def add(self, walk: tuple[int, ...], coeffs: dict[int, float]) -> bool:
        if not coeffs:
            return False
        idx = np.fromiter(coeffs.keys(), dtype=np.int64, count=len(coeffs))
        val = np.fromiter(coeffs.values(), dtype=float, count=len(coeffs))
        order = np.argsort(idx)
        idx, val = idx[order], val[order]
        key = idx.tobytes() + np.round(val, 12).tobytes()
        if key in self.keys:
            return False
        self.keys.add(key)
        self.rows.append((idx, val))
        self.walks.append(walk)
        self.row_keys.append(key)
        return True

    def drop(self, keep: np.ndarray):
        self.rows = [r for r, k in zip(self.rows, keep) if k]
        self.walks = [w for w, k in zip(self.walks, keep) if k]
        self.row_keys = [r for r, k in zip(self.row_keys, keep) if k]
        self.keys = set(self.row_keys)

    def matrix(self):
        ci = np.concatenate([r[0] for r in self.rows])
        val = np.concatenate([r[1] for r in self.rows])
        ri = np.repeat(np.arange(len(self.rows)), [len(r[0]) for r in self.rows])
        vars_, col = np.unique(ci, return_inverse=True)
        A = sp.csr_matrix((val, (ri, col)), shape=(len(self.rows), len(vars_)))
        return A, vars_


def _pdas_qp(H: np.ndarray, start: np.ndarray, tol: float, max_iter: int = 25) -> np.ndarray | None:
    """Primal-dual active set iteration for the same problem.

    Converges in a handful of factorizations from a warm start but has no
    global guarantee; returns None when it does not settle.
    """
    k = H.shape[0]
    ones = np.ones(k)
    mu = np.maximum(np.asarray(start, dtype=float), 0.0)
    lam = H @ mu - ones
    c = float(np.abs(np.diag(H)).mean()) if k else 1.0
    inactive = None
    for _ in range(max_iter):
        nxt = (mu - lam / c) > 0
        if inactive is not None and np.array_equal(nxt, inactive):
            break
        inactive = nxt
        idx = np.nonzero(inactive)[0]
        mu = np.zeros(k)
        if len(idx):
            fac = la.cho_factor(H[np.ix_(idx, idx)], lower=True, check_finite=False)
            mu[idx] = la.cho_solve(fac, ones[idx], check_finite=False)
        lam = H @ mu - ones
        lam[idx] = 0.0
    else:
        return None
    if mu.min(initial=0.0) < 0 or lam.min(initial=0.0) < -tol * max(1.0, c):
        return None
    return mu


def _active_set_qp(H: np.ndarray, start: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """min mu' H mu / 2 - sum(mu) over mu >= 0, from a feasible ``start``.

    Lawson-Hanson with block pivoting: all violated multipliers join the
    free set at once and the free block is solved exactly.  Newcomers that
    come out non-positive are dropped again; older ones are handled by the
    usual step back along the segment.  If a whole block is rejected the
    next pivot adds only the most violated index, which always makes
    progress.  From the previous optimum this usually costs one or two
    factorizations.
    """
    k = H.shape[0]
    ones = np.ones(k)
    mu = np.maximum(np.asarray(start, dtype=float), 0.0)
    free = mu > 0
    thr = tol * max(1.0, float(np.abs(np.diag(H)).max(initial=0.0)))
    single = False
    for _ in range(4 * k + 100):
        grad = ones - H @ mu
        viol = ~free & (grad > thr)
        if not viol.any():
            break
        added = np.nonzero(viol)[0]
        if single:
            added = added[[int(np.argmax(grad[added]))]]
        free[added] = True
        while free.any():
            idx = np.nonzero(free)[0]
            block = H[np.ix_(idx, idx)]
            z = la.cho_solve(la.cho_factor(block, lower=True, check_finite=False), ones[idx], check_finite=False)
            if np.all(z > 0):
                mu[:] = 0.0
                mu[idx] = z
                break
            cur = mu[idx]
            fresh = (cur <= 0) & (z <= 0)
            if fresh.any():
                free[idx[fresh]] = False
                continue
            neg = z <= 0
            alpha = float(np.min(cur[neg] / (cur[neg] - z[neg])))
            mu[idx] = cur + alpha * (z - cur)
            gone = neg & (mu[idx] <= 1e-14 * cur.max())
            gone[np.argmin(np.where(neg, cur / (cur - z), np.inf))] = True
            free[idx[gone]] = False
            mu[~free] = 0.0
        single = not free[added].any()
    return mu


def _solve_qp(A: sp.csr_matrix, sigma: np.ndarray, start: np.ndarray | None = None):
    """min m' S m subject to A m >= 1 via its dual, a bounded QP in mu >= 0.

    Returns (m, mu, lower) where ``lower`` = 2 sum(mu) - mu' H mu is a
    certified lower bound for the optimum.
    """
    inv = sp.diags(1.0 / sigma)
    H = (A @ inv @ A.T).toarray()
    k = H.shape[0]
    H[np.diag_indices(k)] += 1e-10 * max(float(np.trace(H)) / max(k, 1), 1e-300)
    if start is None or len(start) != k:
        start = np.zeros(k)
    mu = _pdas_qp(H, start, 1e-10)
    if mu is None:
        mu = _active_set_qp(H, start)
    m = inv @ (A.T @ mu)
    lower = 2.0 * mu.sum() - float(mu @ H @ mu)
    return m, mu, lower


def solve_modulus(
    grid: QuotientGrid,
    family,
    tol: float = 0.02,
    max_iter: int = 200,
    batch: int = 64,
    through: int = 16,
    max_new: int = 128,
    seed: int = 0,
    stabilize: float = 0.25,
) -> ELResult:
    """Extremal length of a walk family on ``grid``.

    Cutting planes with in-out separation.  The restricted program over
    the walks collected so far gives a metric ``m_out`` whose area bounds
    the modulus from below; the best rescaled metric seen so far,
    ``m_in``, is admissible and bounds it from above.  Each round searches
    for short walks at the blend ``stabilize * m_out + (1 - stabilize) *
    m_in``: a walk shorter than 1 there is also shorter than 1 under
    ``m_out``, so it is a valid cut, and blending keeps successive cuts
    from zig-zagging.  When the blend admits no short walk it becomes the
    new ``m_in``.  The run stops once the two areas agree to within a
    factor ``(1 - tol)**2``.

    ``batch`` is the number of sources per shortest-path call; every round
    scans all sources.
    """
    if not 0 < tol <= 0.1:
        raise InvalidParameter("tol must be in (0, 0.1]")
    if max_iter < 1:
        raise InvalidParameter("max_iter must be at least 1")
    if not 0 < stabilize <= 1:
        raise InvalidParameter("stabilize must be in (0, 1]")
    t0 = time.perf_counter()
    fg = family if isinstance(family, FamilyGraph) else prepare_family(grid, family)
    sigma = grid.sigma()
    free = fg.free_nodes
    cons = _Constraints(sigma)
    order = np.random.default_rng(seed).permutation(fg.sources)

    # uniform start: every active cell and component weighs the same per unit length
    m = np.zeros(grid.n_nodes)
    m[fg.nodes] = 1.0
    m[fg.nodes[fg.nodes >= grid.n_cells]] = grid.h
    for node in free:
        m[node] = 0.0

    heuristic = False

    def absorb(found, below=math.inf) -> int:
        nonlocal heuristic
        added = 0
        for f in sorted(found, key=lambda f: (f.length, f.nodes)):
            if added >= max_new or f.length >= below:
                break
            heuristic |= f.repeats_component
            cells, comps = visit_lengths(grid, f.nodes)
            coeffs = dict(cells)
            coeffs.update({c: 1.0 for c in comps if c not in free})
            added += cons.add(f.nodes, coeffs)
        return added

    def scan(metric):
        # walks of length >= 1 are never cuts, and if none is shorter the
        # metric is already admissible, so the search can stop at 1
        found = scan_sources(fg, metric, order, limit=1.0, batch=batch, through=through, below=1.0)
        mains = [f.length for f in found if f.main]
        return found, min(mains, default=1.0)

    found = scan_sources(fg, m, order, batch=batch, through=through, below=math.inf)
    absorb(found)
    if not cons.rows:
        raise EmptyFamily("no admissible closed walk at this resolution")
    target = (1 - tol) ** 2
    m_in, area_in = None, math.inf
    L = min(f.length for f in found if f.main)
    if L > 0:
        m_in, area_in = m / L, metric_area(grid, m) / (L * L)
    mu, lower_dual, area_out = np.zeros(0), 0.0, 0.0
    iterations, resolve = 0, True
    while True:
        if resolve:
            if iterations == max_iter:
                result = _finish(grid, cons, m, mu, lower_dual, area_in, iterations, heuristic, False, t0)
                raise MaxIterExceeded(
                    f"no convergence after {max_iter} iterations; extremal length in "
                    f"[{result.bracket[0]:.6g}, {result.bracket[1]:.6g}]",
                    result,
                )
            iterations += 1
            A, vars_ = cons.matrix()
            warm = np.concatenate([mu, np.zeros(len(cons.rows) - len(mu))])
            mv, mu, lower_dual = _solve_qp(A, sigma[vars_], warm)
            m = np.zeros(grid.n_nodes)
            m[vars_] = mv
            area_out = metric_area(grid, m)
            keep = mu > 0
            if not keep.all():
                cons.drop(keep)
                mu = mu[keep]
        if m_in is not None and area_out >= target * area_in:
            break
        probe = m if m_in is None else stabilize * m + (1 - stabilize) * m_in
        found, L = scan(probe)
        heuristic |= any(f.repeats_component for f in found)
        if L > 0:
            area = metric_area(grid, probe) / (L * L)
            if area < area_in:
                m_in, area_in = probe / L, area
        added = absorb(found, below=1.0)
        log.debug(
            "iteration %d: %d constraints, area in [%.6g, %.6g], %d cuts",
            iterations, len(cons.rows), area_out, area_in, added,
        )
        if added:
            resolve = True
        elif probe is m:
            break  # nothing shorter than 1 under m_out itself: m_out is admissible
        else:
            resolve = False
    return _finish(grid, cons, m, mu, lower_dual, area_in, iterations, heuristic, True, t0)


def _finish(grid, cons, m, mu, lower_dual, area_in, iterations, heuristic, converged, t0) -> ELResult:
    area = metric_area(grid, m)
    lo = 1.0 / area_in if area_in > 0 else math.inf
    hi = 1.0 / lower_dual if lower_dual > 0 else math.inf
    binding = [list(w) for w, u in zip(cons.walks, mu) if u > 0] if len(mu) == len(cons.walks) else []
    return ELResult(
        modulus=area,
        el=1.0 / area if area > 0 else math.inf,
        metric=m,
        binding_curves=binding,
        iterations=iterations,
        residual=max(0.0, 1.0 - math.sqrt(area / area_in)) if math.isfinite(area_in) and area_in > 0 else 1.0,
        bracket=(lo, hi),
        converged=converged,
        heuristic=heuristic,
        n_constraints=len(cons.rows),
        seconds=time.perf_counter() - t0,
        warnings=list(grid.warnings),
    )


# ---------------------------------------------------------------- invariance


def _map_family(family, T: MobiusTransform, grid: QuotientGrid):
    def beta_image(beta):
        if beta is None:
            from .grid import beta_curve

            enc = beta_curve(grid, family.b)
            poly = enc.polygon(grid)
        else:
            poly = np.asarray(beta, dtype=complex)
        dense = _densify(poly, 16)
        return tuple(mobius_apply(T, dense).tolist())

    if isinstance(family, SeparatingFamily):
        q = family.q if isinstance(family.q, str) else complex(mobius_apply(T, complex(family.q)))
        return SeparatingFamily(q, family.b, beta_image(family.beta))
    if isinstance(family, EnclosingFamily):
        return EnclosingFamily(family.b, beta_image(family.beta))
    raise InvalidParameter(f"unsupported family {family!r}")


def _densify(poly: np.ndarray, k: int) -> np.ndarray:
    nxt = np.roll(poly, -1)
    t = np.arange(k) / k
    return (poly[:, None] + (nxt - poly)[:, None] * t[None, :]).ravel()


def _window_image(grid: QuotientGrid, T: MobiusTransform, spec2, family) -> tuple:
    if grid.chart == "logpolar":
        # re-center on the image of the component hiding the pole
        cx, cy, r0, r1 = grid.window()
        core = spec2.get(family.b).shape
        c = complex(getattr(core, "center", core.reference_point))
        inner = np.abs(core.sample_boundary(2048) - c).min()
        ring = mobius_apply(T, complex(cx, cy) + r1 * np.exp(2j * np.pi * np.arange(2048) / 2048))
        if not np.all(np.isfinite(ring)):
            raise InvalidParameter("the transform sends the window to an unbounded set")
        return (c.real, c.imag, inner, float(np.abs(ring - c).max()))
    x0, y0, x1, y1 = grid.window()
    t = np.linspace(0, 1, 400, endpoint=False)
    edge = np.concatenate(
        [
            x0 + (x1 - x0) * t + 1j * y0,
            x1 + 1j * (y0 + (y1 - y0) * t),
            x1 - (x1 - x0) * t + 1j * y1,
            x0 + 1j * (y1 - (y1 - y0) * t),
        ]
    )
    img = mobius_apply(T, edge)
    if not np.all(np.isfinite(img)):
        raise InvalidParameter("the transform sends the window to an unbounded set")
    return (img.real.min(), img.imag.min(), img.real.max(), img.imag.max())


def verify_conformal_invariance(
    spec,
    family,
    T: MobiusTransform,
    n: int,
    tol: float = 0.02,
    window=None,
    chart: str = "cartesian",
) -> dict:
    """Extremal length before and after mapping the domain and family by ``T``."""
    return invariance_sweep(spec, family, [T], n, tol, window, chart)[0]


def invariance_sweep(
    spec,
    family,
    transforms,
    n: int,
    tol: float = 0.02,
    window=None,
    chart: str = "cartesian",
) -> list[dict]:
    """Like ``verify_conformal_invariance`` for several transforms, solving
    the untransformed problem only once."""
    if window is None:
        x0, y0, x1, y1 = spec.bbox()
        pad = 0.25 * max(x1 - x0, y1 - y0)
        window = (x0 - pad, y0 - pad, x1 + pad, y1 + pad)
    grid = build_quotient_grid(spec, window, n, chart)
    before = solve_modulus(grid, family, tol=tol)
    out = []
    for T in transforms:
        if T == MobiusTransform(1, 0, 0, 1):
            after = before
        else:
            spec2 = transform_spec(spec, T)
            grid2 = build_quotient_grid(spec2, _window_image(grid, T, spec2, family), n, chart)
            after = solve_modulus(grid2, _map_family(family, T, grid), tol=tol)
        rel = abs(after.el - before.el) / before.el
        out.append({"el_before": before.el, "el_after": after.el, "rel_diff": rel})
    return out

"""Points of the extended plane, Möbius maps and Hausdorff distance.

Points are Python/numpy complex numbers; ``INF`` stands for the point at
infinity.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptySet, InvalidParameter

INF = complex(np.inf, 0.0)

_DET_FLOOR = 1e-12


def is_inf(z) -> bool:
    return cmath.isinf(complex(z))


def as_point(value) -> complex:
    """Coerce ``(x, y)``, ``"inf"`` or a complex number to a point."""
    if isinstance(value, str):
        if value.strip().lower() in {"inf", "infinity", "∞"}:
            return INF
        raise InvalidParameter(f"cannot read point {value!r}")
    if isinstance(value, (tuple, list, np.ndarray)):
        if len(value) != 2:
            raise InvalidParameter(f"point needs two coordinates, got {value!r}")
        z = complex(float(value[0]), float(value[1]))
    else:
        z = complex(value)
    if cmath.isnan(z):
        raise InvalidParameter("NaN coordinate")
    return INF if cmath.isinf(z) else z


@dataclass(frozen=True)
class MobiusTransform:
    """z -> (a z + b) / (c z + d), stored with a d - b c = 1."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        a, b, c, d = (complex(v) for v in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        if not np.isfinite(abs(det)) or abs(det) <= _DET_FLOOR:
            raise InvalidParameter(f"degenerate Möbius transform (det={det})")
        s = cmath.sqrt(det)
        # fix the sign ambiguity of the square root so equal maps compare equal
        vals = [a / s, b / s, c / s, d / s]
        lead = next(v for v in vals if abs(v) > 1e-15)
        if lead.real < 0 or (lead.real == 0 and lead.imag < 0):
            vals = [-v for v in vals]
        for name, v in zip("abcd", vals):
            object.__setattr__(self, name, v)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @property
    def is_affine(self) -> bool:
        return abs(self.c) <= 1e-15

    @property
    def is_similarity(self) -> bool:
        return self.is_affine

    def __call__(self, z):
        return mobius_apply(self, z)


def identity() -> MobiusTransform:
    return MobiusTransform(1, 0, 0, 1)


def affine(scale: complex, shift: complex = 0) -> MobiusTransform:
    """z -> scale * z + shift (a similarity when scale != 0)."""
    return MobiusTransform(scale, shift, 0, 1)


def similarity(factor: float, angle: float, shift: complex = 0) -> MobiusTransform:
    return affine(factor * cmath.exp(1j * angle), shift)


def inversion(center: complex = 0) -> MobiusTransform:
    """z -> 1 / (z - center)."""
    return MobiusTransform(0, 1, 1, -complex(center))


def mobius_apply(T: MobiusTransform, z):
    """Apply ``T`` to a point or an array of points; poles map to ``INF``."""
    if np.ndim(z) == 0:
        z = complex(z)
        if cmath.isinf(z):
            return INF if T.c == 0 else T.a / T.c
        den = T.c * z + T.d
        if den == 0:
            return INF
        return (T.a * z + T.b) / den
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    infinite = np.isinf(z)
    den = T.c * np.where(infinite, 0, z) + T.d
    pole = (den == 0) & ~infinite
    ok = ~infinite & ~pole
    out[ok] = (T.a * z[ok] + T.b) / den[ok]
    out[pole] = INF
    out[infinite] = INF if T.c == 0 else T.a / T.c
    return out


def mobius_compose(T1: MobiusTransform, T2: MobiusTransform) -> MobiusTransform:
    """The map z -> T1(T2(z))."""
    m = T1.matrix @ T2.matrix
    return MobiusTransform(m[0, 0], m[0, 1], m[1, 0], m[1, 1])


def mobius_inverse(T: MobiusTransform) -> MobiusTransform:
    return MobiusTransform(T.d, -T.b, -T.c, T.a)


def cross_ratio(z1: complex, z2: complex, z3: complex, z4: complex) -> complex:
    """(z1, z2; z3, z4) = (z1-z3)(z2-z4) / ((z2-z3)(z1-z4)), finite points only."""
    return (z1 - z3) * (z2 - z4) / ((z2 - z3) * (z1 - z4))


def _as_xy(points) -> np.ndarray:
    arr = np.asarray(points)
    if np.iscomplexobj(arr) or arr.ndim == 1:
        arr = np.asarray(arr, dtype=complex).ravel()
        return np.column_stack([arr.real, arr.imag])
    return np.asarray(arr, dtype=float).reshape(-1, 2)


def directed_hausdorff(A, B) -> float:
    """max over a in A of the distance from a to B."""
    a, b = _as_xy(A), _as_xy(B)
    if len(a) == 0 or len(b) == 0:
        raise EmptySet("Hausdorff distance of an empty sample")
    dist, _ = cKDTree(b).query(a)
    return float(np.max(dist))


def hausdorff_distance(A, B) -> float:
    """Symmetric Hausdorff distance between two finite samples."""
    return max(directed_hausdorff(A, B), directed_hausdorff(B, A))

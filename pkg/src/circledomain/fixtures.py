"""Reference domains used by the tests, the README and the command line.

Each function returns the raw JSON form accepted by ``validate_domain``.
"""

from __future__ import annotations

import math

import numpy as np


def _xy(z) -> list[float]:
    return [float(z.real), float(z.imag)]


def _disk(cid: str, center: complex, radius: float) -> dict:
    return {"id": cid, "shape": {"type": "disk", "center": _xy(complex(center)), "radius": float(radius)}}


def _polygon(cid: str, vertices) -> dict:
    return {"id": cid, "shape": {"type": "polygon", "vertices": [_xy(complex(v)) for v in vertices]}}


def _square(cid: str, corner: complex, side: float) -> dict:
    return _polygon(cid, [corner, corner + side, corner + side + 1j * side, corner + 1j * side])


def disk_pair() -> dict:
    """Unit disks centered at 0 and 4."""
    return {"components": [_disk("a", 0, 1.0), _disk("b", 4, 1.0)]}


def two_squares() -> dict:
    """Unit squares [0,1]^2 and [1.5,2.5] x [0,1]."""
    return {"components": [_square("A", 0, 1.0), _square("B", 1.5, 1.0)]}


def ellipse_curve(a: float = 2.0, b: float = 1.0, samples: int = 256) -> np.ndarray:
    t = 2 * np.pi * np.arange(samples) / samples
    return a * np.cos(t) + 1j * b * np.sin(t)


def annulus_core() -> dict:
    """The unit disk; with an outer window radius R it bounds the annulus 1 < |z| < R."""
    return {"components": [_disk("b", 0, 1.0)]}


def rings() -> dict:
    """Central unit disk ``b``, six squares of decreasing size on a ring of
    radius 2.8 (every other one turned by 45 degrees) and a point ``p``
    between them."""
    comps = [_disk("b", 0, 1.0)]
    for j in range(6):
        c = 2.8 * np.exp(2j * np.pi * (j + 0.25) / 6)
        s = 0.9 - 0.08 * j
        turn = np.pi / 4 * (j % 2) + np.pi / 4
        corners = c + s / 2 * np.exp(1j * (turn + np.pi / 2 * np.arange(4)))
        comps.append(_polygon(f"q{j}", corners))
    comps.append({"id": "p", "shape": {"type": "point", "at": [0.3, 1.6]}})
    return {"components": comps}


def _sector(r0: float, r1: float, mid: float, width: float = math.pi / 2, k: int = 24) -> np.ndarray:
    a = mid - width / 2 + width * np.arange(k + 1) / k
    return np.concatenate([r1 * np.exp(1j * a), r0 * np.exp(1j * a[::-1])])


LADDER_RATIO = 0.41


def sector_ladder(levels: int = 9) -> dict:
    """Quarter-annulus sectors shrinking geometrically toward a tiny disk ``b``.

    Sector k spans radii [0.41, 1.05] * 0.41^k and alternates between the
    right and left half-planes, so each ladder level holds one sector and
    successive radii shrink by a fixed factor.
    """
    comps = [_disk("b", 0, 5e-5)]
    for k in range(levels):
        s = LADDER_RATIO**k
        comps.append(_polygon(f"s{k}", _sector(0.41 * s, 1.05 * s, 0.0 if k % 2 == 0 else math.pi)))
    return {"components": comps}


ALL = {
    "disk_pair": disk_pair,
    "two_squares": two_squares,
    "annulus_core": annulus_core,
    "rings": rings,
    "sector_ladder": sector_ladder,
}


def main(argv=None) -> int:
    import argparse
    import json

    p = argparse.ArgumentParser(prog="python -m circledomain.fixtures", description="Print a reference domain as JSON.")
    p.add_argument("name", choices=sorted(ALL))
    args = p.parse_args(argv)
    print(json.dumps(ALL[args.name](), indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

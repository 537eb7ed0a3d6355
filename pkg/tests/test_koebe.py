import math

import numpy as np
import pytest

from circledomain import fixtures, validate_domain
from circledomain.errors import InvalidParameter, MaxRoundsExceeded, OutsideDomain
from circledomain.exhaustion_driver import spec_contains
from circledomain.koebe_uniformizer import (
    POINTLIKE,
    CircleDomain,
    exterior_map,
    koebe_iterate,
    map_apply,
    roundness,
)

from conftest import circle

# logarithmic capacity of the unit square, Gamma(1/4)^2 / (4 pi^(3/2))
SQUARE_CAPACITY = math.gamma(0.25) ** 2 / (4 * math.pi**1.5)


def square_samples(k=256):
    t = np.arange(k) / k
    return np.concatenate([t, 1 + 1j * t, 1 - t + 1j, 1j * (1 - t)])


def test_roundness_of_circle_and_point():
    r = roundness(circle(2 - 1j, 3.0, 400))
    assert r.value < 1e-12
    assert r.center == pytest.approx(2 - 1j)
    assert r.radius == pytest.approx(3.0)
    assert roundness([1 + 1j, 1 + 1j]).flag == POINTLIKE


def test_roundness_of_square_matches_definition():
    z = square_samples()
    d = np.abs(z - (0.5 + 0.5j))
    r = roundness(z)
    assert r.center == pytest.approx(0.5 + 0.5j, abs=1e-12)
    assert r.value == pytest.approx((d.max() - d.min()) / d.mean(), rel=1e-12)


@pytest.mark.parametrize("a, b", [(2.0, 1.0), (1.0, 0.25), (3.0, 2.5)])
def test_ellipse_exterior_radius(a, b):
    stage = exterior_map(fixtures.ellipse_curve(a, b, 512))
    c, r = stage.image_circle
    assert r == pytest.approx((a + b) / 2, abs=1e-4)
    assert abs(c) < 1e-4


def test_circle_exterior_map_is_identity():
    stage = exterior_map(circle(1 + 2j, 0.5, 256))
    z = np.array([3 + 0j, 1 + 4j, -2 - 2j])
    assert np.allclose(stage.forward(z), z, atol=1e-8)


def test_square_capacity_and_roundtrip():
    stage = exterior_map(square_samples())
    assert stage.image_circle[1] == pytest.approx(SQUARE_CAPACITY, rel=1e-3)
    z = 0.5 + 0.5j + np.array([1.5, 2j, -1 - 1j, 10 + 3j])
    assert np.allclose(stage.inverse(stage.forward(z)), z, atol=1e-8)
    # far away the map is z + O(1/z)
    w = stage.forward(np.array([1e6 + 0j]))
    assert abs(w[0] - 1e6) < 1e-3 * 1e6


def test_exterior_map_needs_samples():
    with pytest.raises(InvalidParameter):
        exterior_map(circle(0, 1, 16))


def test_two_squares_converge(two_squares):
    cd, F, trace = koebe_iterate(two_squares)
    assert trace.converged
    assert len(trace.rounds) <= 101
    assert max(cd.roundness.values()) <= 1e-3
    assert cd.is_disjoint() and len(cd.disks) == 2
    rng = np.random.default_rng(0)
    z = rng.uniform(-2, 4, 400) + 1j * rng.uniform(-2, 3, 400)
    z = z[~spec_contains(two_squares, z)][:100]
    assert len(z) == 100
    back = map_apply(F, map_apply(F, z), inverse=True)
    assert np.max(np.abs(back - z)) <= 1e-5
    with pytest.raises(OutsideDomain):
        map_apply(F, 0.5 + 0.5j)


def test_single_disk_needs_no_rounds():
    spec = validate_domain(fixtures.disk_pair()).subset(["a"])
    cd, F, trace = koebe_iterate(spec)
    assert trace.stages == 0
    (_, c, r), = cd.disks
    assert abs(c) < 1e-12 and r == pytest.approx(1.0)


def test_annulus_and_bad_parameters_rejected(two_squares):
    with pytest.raises(InvalidParameter):
        koebe_iterate(validate_domain({"components": [{"id": "r", "shape": {"type": "annulus", "center": [0, 0], "r_in": 1, "r_out": 2}}]}))
    for kwargs in ({"roundness_target": 0}, {"max_rounds": 0}, {"samples": 8}):
        with pytest.raises(InvalidParameter):
            koebe_iterate(two_squares, **kwargs)


def test_max_rounds_carries_iterate(two_squares):
    with pytest.raises(MaxRoundsExceeded) as err:
        koebe_iterate(two_squares, roundness_target=1e-12, max_rounds=1)
    cd = err.value.circle_domain
    assert len(cd.disks) == 2 and len(err.value.trace.rounds) == 2


def test_circle_domain_json_roundtrip(two_squares):
    cd, _, _ = koebe_iterate(two_squares, roundness_target=1e-2)
    again = CircleDomain.from_json(cd.to_json())
    assert again.to_json() == cd.to_json()
    with pytest.raises(InvalidParameter):
        CircleDomain.from_json({"disks": [{"id": "x"}]})

import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circledomain.errors import EmptySet, InvalidParameter
from circledomain.sphere_geom import (
    INF,
    MobiusTransform,
    affine,
    as_point,
    cross_ratio,
    hausdorff_distance,
    identity,
    inversion,
    is_inf,
    mobius_apply,
    mobius_compose,
    mobius_inverse,
    similarity,
)

coord = st.floats(-50, 50, allow_nan=False)
point = st.builds(complex, coord, coord)


def mobius_strategy():
    def build(a, b, c, d):
        if abs(a * d - b * c) < 1e-2:
            return None
        return MobiusTransform(a, b, c, d)

    return st.builds(build, point, point, point, point).filter(lambda t: t is not None)


def test_normalized_determinant():
    T = MobiusTransform(2, 0, 0, 8)
    assert abs(T.a * T.d - T.b * T.c - 1) < 1e-12


def test_equal_maps_compare_equal():
    assert MobiusTransform(2, 4, 0, 2) == MobiusTransform(-1, -2, 0, -1)


def test_degenerate_rejected():
    with pytest.raises(InvalidParameter):
        MobiusTransform(1, 2, 2, 4)


def test_poles_and_infinity():
    T = inversion(3)
    assert is_inf(mobius_apply(T, 3))
    assert mobius_apply(T, INF) == 0
    assert is_inf(mobius_apply(affine(2, 1), INF))
    out = mobius_apply(T, np.array([3, INF, 4]))
    assert is_inf(out[0]) and out[1] == 0 and out[2] == 1


def test_as_point():
    assert as_point((1, 2)) == 1 + 2j
    assert is_inf(as_point("inf"))
    with pytest.raises(InvalidParameter):
        as_point((1, 2, 3))
    with pytest.raises(InvalidParameter):
        as_point(complex("nan"))


def test_similarity_scales_distances():
    T = similarity(3.0, 0.7, 1 - 2j)
    z, w = 0.3 + 1j, -2 + 0.5j
    assert abs(abs(T(z) - T(w)) - 3 * abs(z - w)) < 1e-12
    assert T.is_similarity and not inversion().is_similarity


@settings(max_examples=60, deadline=None)
@given(mobius_strategy(), mobius_strategy(), point)
def test_compose_matches_sequential_application(S, T, z):
    direct = mobius_apply(S, mobius_apply(T, z))
    composed = mobius_apply(mobius_compose(S, T), z)
    if is_inf(direct) or is_inf(composed) or abs(direct) > 1e6:
        return
    assert abs(direct - composed) <= 1e-8 * max(1.0, abs(direct))


@settings(max_examples=60, deadline=None)
@given(mobius_strategy())
def test_inverse(T):
    assert np.allclose(mobius_compose(T, mobius_inverse(T)).matrix, identity().matrix, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(mobius_strategy(), point, point, point, point)
def test_cross_ratio_invariant(T, z1, z2, z3, z4):
    pts = [z1, z2, z3, z4]
    if min(abs(p - q) for i, p in enumerate(pts) for q in pts[i + 1 :]) < 0.5:
        return
    imgs = [mobius_apply(T, p) for p in pts]
    if any(is_inf(w) or abs(w) > 1e4 for w in imgs):
        return
    if min(abs(p - q) for i, p in enumerate(imgs) for q in imgs[i + 1 :]) < 1e-3:
        return
    before, after = cross_ratio(*pts), cross_ratio(*imgs)
    assert abs(before - after) <= 1e-6 * max(1.0, abs(before))


def test_hausdorff_of_concentric_circles():
    t = np.exp(2j * np.pi * np.arange(1000) / 1000)
    assert abs(hausdorff_distance(t, 1.5 * t) - 0.5) < 1e-12
    assert hausdorff_distance(t, t) == 0.0


def test_hausdorff_accepts_xy_and_rejects_empty():
    assert hausdorff_distance([[0, 0], [1, 0]], [[0, 1]]) == pytest.approx(cmath.sqrt(2).real)
    with pytest.raises(EmptySet):
        hausdorff_distance([], [1j])

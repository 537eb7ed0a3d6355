import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circledomain.domain_model import (
    AnnulusShape,
    DiskShape,
    PointShape,
    PolygonShape,
    classify,
    is_tau_fat,
    kappa,
    load_domain,
    shape_distance,
    transform_spec,
    validate_domain,
)
from circledomain.errors import (
    InvalidParameter,
    InvalidShape,
    OverlappingComponents,
    TrivialComponent,
    UnboundedComplement,
    UnknownComponent,
)
from circledomain.sphere_geom import inversion, similarity


def disk(cid, c, r):
    return {"id": cid, "shape": {"type": "disk", "center": c, "radius": r}}


def square(cid, x, y, s=1.0):
    return {"id": cid, "shape": {"type": "polygon", "vertices": [[x, y], [x + s, y], [x + s, y + s], [x, y + s]]}}


def test_components_sorted_by_id():
    spec = validate_domain({"components": [disk("z", [0, 0], 1), disk("a", [5, 0], 1)]})
    assert spec.ids == ["a", "z"]
    assert isinstance(spec.get("a").shape, DiskShape)


@pytest.mark.parametrize(
    "raw",
    [
        [],
        {"components": [], "extra": 1},
        {"components": {}},
        {"components": [{"id": "a"}]},
        {"components": [{"id": "", "shape": {"type": "point", "at": [0, 0]}}]},
        {"components": [{"id": "a", "shape": {"type": "blob"}}]},
        {"components": [{"id": "a", "shape": {"type": "disk", "center": [0, 0]}}]},
        {"components": [{"id": "a", "shape": {"type": "disk", "center": [0, 0], "radius": -1}}]},
        {"components": [{"id": "a", "shape": {"type": "disk", "center": [0, "x"], "radius": 1}}]},
        {"components": [{"id": "a", "shape": {"type": "annulus", "center": [0, 0], "r_in": 2, "r_out": 1}}]},
        {"components": [{"id": "a", "shape": {"type": "polygon", "vertices": [[0, 0], [1, 1], [1, 0], [0, 1]]}}]},
        {"components": [disk("a", [0, 0], 1), disk("a", [5, 0], 1)]},
    ],
)
def test_invalid_inputs(raw):
    with pytest.raises(InvalidShape):
        validate_domain(raw)


def test_clockwise_polygon_is_reoriented():
    cw = {"components": [{"id": "a", "shape": {"type": "polygon", "vertices": [[0, 0], [0, 1], [1, 1], [1, 0]]}}]}
    v = validate_domain(cw).get("a").shape.array
    assert np.sum(v.real * np.roll(v.imag, -1) - np.roll(v.real, -1) * v.imag) > 0


def test_infinite_coordinate_is_unbounded():
    with pytest.raises(UnboundedComplement):
        validate_domain({"components": [disk("a", [0, 0], math.inf)]})


def test_overlap_detected():
    with pytest.raises(OverlappingComponents) as err:
        validate_domain({"components": [disk("a", [0, 0], 1), square("b", 0.5, 0.5)]})
    assert "'a'" in str(err.value) and "'b'" in str(err.value)


def test_unknown_component():
    spec = validate_domain({"components": [disk("a", [0, 0], 1)]})
    with pytest.raises(UnknownComponent):
        spec.get("nope")


def test_empty_domain_is_valid():
    spec = validate_domain({"components": []})
    assert len(spec) == 0
    assert classify(spec).kappa_min is None


def test_load_domain(tmp_path):
    path = tmp_path / "d.json"
    path.write_text(json.dumps({"components": [disk("a", [0, 0], 1)]}))
    assert load_domain(path).ids == ["a"]


def test_kappa_values():
    assert kappa(DiskShape(0, 3.0)) == pytest.approx(math.pi / 4, abs=1e-12)
    sq = validate_domain({"components": [square("s", 0, 0)]}).get("s")
    assert kappa(sq) == pytest.approx(0.5, abs=1e-12)
    # a 2 x 1 rectangle: area 2, diameter sqrt 5
    rect = PolygonShape((0, 2, 2 + 1j, 1j))
    assert kappa(rect) == pytest.approx(2 / 5, abs=1e-12)
    with pytest.raises(TrivialComponent):
        kappa(PointShape(0))


def test_annulus_kappa():
    a = AnnulusShape(0, 1.0, 2.0)
    assert kappa(a) == pytest.approx(math.pi * 3 / 16, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 10), st.floats(0, 2 * math.pi), st.floats(-5, 5), st.floats(-5, 5))
def test_kappa_similarity_invariant(factor, angle, x, y):
    spec = validate_domain({"components": [square("s", 0, 0), disk("d", [4, 0], 1)]})
    moved = transform_spec(spec, similarity(factor, angle, complex(x, y)))
    for cid in ("s", "d"):
        assert kappa(moved.get(cid)) == pytest.approx(kappa(spec.get(cid)), rel=1e-9)


def test_classify_splits_trivial():
    spec = validate_domain({"components": [disk("a", [0, 0], 1), {"id": "p", "shape": {"type": "point", "at": [3, 0]}}]})
    rep = classify(spec)
    assert rep.trivial == ("p",) and rep.nontrivial == ("a",)
    assert rep.kappa_min == pytest.approx(math.pi / 4)


def test_shape_distance():
    assert shape_distance(DiskShape(0, 1), DiskShape(4, 1)) == pytest.approx(2)
    sq = PolygonShape((0, 1, 1 + 1j, 1j))
    assert shape_distance(sq, PointShape(3 + 0.5j)) == pytest.approx(2)
    assert shape_distance(sq, DiskShape(3 + 0.5j, 1)) == pytest.approx(1)


def test_inversion_maps_disk_to_disk():
    spec = validate_domain({"components": [disk("a", [3, 0], 1)]})
    img = transform_spec(spec, inversion(0)).get("a").shape
    assert isinstance(img, DiskShape)
    # |z - 3| = 1 meets the real axis at 2 and 4, whose images are 1/2 and 1/4
    assert img.center == pytest.approx(0.375)
    assert img.radius == pytest.approx(0.125)


def test_inversion_turns_disk_around_pole_into_complement():
    spec = validate_domain({"components": [disk("a", [0, 0], 1)]})
    with pytest.raises((InvalidParameter, InvalidShape, UnboundedComplement)):
        transform_spec(spec, inversion(0.5))


def test_tau_fatness():
    assert is_tau_fat(DiskShape(0, 1), 0.2).verdict
    needle = PolygonShape((0, 10, 10 + 0.01j, 0.01j))
    verdict = is_tau_fat(needle, 0.2)
    assert not verdict.verdict and verdict.worst_ratio < 0.2
    with pytest.raises(InvalidParameter):
        is_tau_fat(needle, 0)


def test_sample_boundary_on_shape():
    for shape in (DiskShape(1j, 2), PolygonShape((0, 1, 1 + 1j, 1j)), AnnulusShape(0, 1, 2)):
        pts = shape.sample_boundary(256)
        assert np.all(shape.contains(pts, tol=1e-9))

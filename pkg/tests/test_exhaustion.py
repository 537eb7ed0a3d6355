import json
import math

import numpy as np
import pytest

from circledomain import fixtures, validate_domain
from circledomain.errors import InsufficientStages, InvalidParameter
from circledomain.exhaustion_driver import (
    default_beta,
    kernel_report,
    plan_exhaustion,
    run_exhaustion,
    witness_metric,
)
from circledomain.koebe_uniformizer import CircleDomain

from conftest import circle


def test_plan_orders_by_diameter(rings):
    plan = plan_exhaustion(rings, 2)
    assert plan.order == ("b", "q0", "q1", "q2", "q3", "q4", "q5")
    assert plan.stages == (
        ("b", "q0"),
        ("b", "q0", "q1", "q2"),
        ("b", "q0", "q1", "q2", "q3", "q4"),
        plan.order,
    )
    assert "p" not in plan.order
    assert plan_exhaustion(rings, 100).stages == (plan.order,)


def test_plan_rejects_zero_batch(rings):
    with pytest.raises(InvalidParameter):
        plan_exhaustion(rings, 0)


def test_default_beta_halfway(disk_pair):
    beta = default_beta(disk_pair, "b")
    assert np.allclose(np.abs(beta - 4), 2.0)
    with pytest.raises(InvalidParameter):
        default_beta(validate_domain(fixtures.rings()), "p")


def test_run_two_squares(two_squares):
    trace = run_exhaustion(plan_exhaustion(two_squares, 1), tracked=["A"], witness_n=64)
    assert trace.failure is None and len(trace.stages) == 2
    assert trace.stages[0].B == ("A",) and trace.stages[1].B == ("A", "B")
    assert all(r <= 1e-3 for r in trace.roundness_of("A"))
    assert trace.hausdorff_deltas[0] > 0
    lines = trace.to_jsonl().splitlines()
    assert [json.loads(x)["n"] for x in lines] == [1, 2]
    w = trace.stages[-1].witness
    assert w.holds and w.area <= w.bound
    report = kernel_report(trace, "A", p_star=10.0)
    assert report.stages == 2 and report.final_roundness <= 1e-3
    assert report.clearance > 0 and report.delta_star is not None


def test_failed_stage_is_recorded(two_squares):
    trace = run_exhaustion(plan_exhaustion(two_squares, 1), 1e-12, tracked=["A"], max_rounds=1, witness=False)
    # one component is round after a single map; the pair is not
    assert len(trace.stages) == 1 and trace.failure.startswith("MaxRoundsExceeded")
    last = json.loads(trace.to_jsonl().splitlines()[-1])
    assert last["n"] == 2 and last["failure"].startswith("MaxRoundsExceeded")


def test_kernel_report_needs_two_stages(two_squares):
    trace = run_exhaustion(plan_exhaustion(two_squares, 2), tracked=["A"], witness=False)
    with pytest.raises(InsufficientStages):
        kernel_report(trace, "A")


def test_witness_metric_on_single_disk():
    cd = CircleDomain([("b", 0j, 1.0)], [], {"b": 0.0})
    w = witness_metric(cd, circle(0, 2.0), math.pi / 4, n=128, curves=20)
    assert w.R == pytest.approx(2.1)
    assert w.bound == pytest.approx((1 + 4 / math.pi) * math.pi * 2.1**2)
    assert w.holds and w.curves == 20
    assert w.min_excess >= 0
    with pytest.raises(InvalidParameter):
        witness_metric(cd, circle(0, 2.0), 0.0)

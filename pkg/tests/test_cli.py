import json
import math

import numpy as np
import pytest

from circledomain import fixtures, validate_domain
from circledomain.cli_render import main, render_svg
from circledomain.domain_model import DomainSpec
from circledomain.koebe_uniformizer import CircleDomain
from circledomain.transboundary_modulus import OMEGA, build_quotient_grid


@pytest.fixture
def write(tmp_path):
    def _write(name, obj):
        path = tmp_path / name
        path.write_text(json.dumps(obj))
        return str(path)

    return _write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_circle_domain(capsys, write):
    code, out, _ = run(capsys, "analyze", "--in", write("d.json", fixtures.disk_pair()), "--b", "b", "--delta", "0.5")
    assert code == 0
    report = json.loads(out)
    assert report["nondegeneracy"]["kappa_min"] == pytest.approx(math.pi / 4)
    assert "rho_estimate" in report


def test_overlap_is_exit_2(capsys, write):
    bad = {"components": [fixtures._disk("a", 0, 1.0), fixtures._disk("b", 1, 1.0)]}
    code, out, err = run(capsys, "analyze", "--in", write("bad.json", bad))
    assert code == 2 and out == ""
    assert err.startswith("OverlappingComponents") and err.count("\n") == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", "--n", "4"],
        ["analyze", "--batch", "0"],
        ["analyze", "--seed", "-1"],
        ["analyze", "--delta", "0.5"],
        ["modulus", "--q", "1,1"],
    ],
)
def test_bad_flags_are_exit_2(capsys, write, argv):
    argv = argv[:1] + ["--in", write("d.json", fixtures.disk_pair())] + argv[1:]
    assert run(capsys, *argv)[0] == 2


def test_missing_file_is_exit_4(capsys, tmp_path):
    code, _, err = run(capsys, "analyze", "--in", str(tmp_path / "nope.json"))
    assert code == 4 and err.startswith("IOError")


def test_unwritable_output_is_exit_4(capsys, write, tmp_path):
    out = str(tmp_path / "missing-dir" / "x.json")
    assert run(capsys, "analyze", "--in", write("d.json", fixtures.disk_pair()), "--out", out)[0] == 4


def test_modulus_annulus(capsys, write, tmp_path):
    svg = tmp_path / "m.svg"
    code, out, _ = run(
        capsys, "modulus", "--in", write("a.json", fixtures.annulus_core()), "--b", "b",
        "--r-out", str(math.exp(2 * math.pi)), "--n", "64", "--svg", str(svg),
    )
    assert code == 0
    res = json.loads(out)
    assert {"el", "modulus", "iterations", "residual"} <= set(res)
    assert res["el"] == pytest.approx(1.0, rel=0.05)
    assert "<polygon" in svg.read_text()


def test_modulus_not_converged_is_exit_3(capsys, write):
    code, out, err = run(
        capsys, "modulus", "--in", write("d.json", fixtures.disk_pair()), "--b", "b", "--q", "a",
        "--r-out", "6.5", "--n", "32", "--max-iter", "1",
    )
    assert code == 3 and err.startswith("MaxIterExceeded")
    res = json.loads(out)
    assert not res["converged"] and res["bracket"][0] <= res["bracket"][1]


def test_uniformize_two_squares(capsys, write, tmp_path):
    svg = tmp_path / "u.svg"
    code, out, _ = run(capsys, "uniformize", "--in", write("s.json", fixtures.two_squares()), "--svg", str(svg))
    assert code == 0
    cd = CircleDomain.from_json(json.loads(out))
    assert len(cd.disks) == 2 and cd.is_disjoint()
    text = svg.read_text()
    assert text.count("<circle") == 2 and text.count("<polygon") == 2


def test_uniformize_not_converged_is_exit_3(capsys, write):
    code, out, _ = run(
        capsys, "uniformize", "--in", write("s.json", fixtures.two_squares()),
        "--max-rounds", "1", "--roundness-target", "1e-12",
    )
    assert code == 3 and len(json.loads(out)["disks"]) == 2


def test_exhaust_rings(capsys, write):
    code, out, _ = run(capsys, "exhaust", "--in", write("r.json", fixtures.rings()), "--b", "b", "--no-witness")
    assert code == 0
    lines = [json.loads(x) for x in out.splitlines()]
    assert len(lines) >= 2 and [x["n"] for x in lines] == list(range(1, len(lines) + 1))


def test_render_roundtrip(capsys, write, tmp_path):
    code, out, _ = run(capsys, "uniformize", "--in", write("s.json", fixtures.two_squares()))
    svg = tmp_path / "r.svg"
    assert run(capsys, "render", "--in", write("cd.json", json.loads(out)), "--svg", str(svg))[0] == 0
    assert svg.read_text().count("<circle") == 2


def test_svg_empty_and_disk():
    empty = render_svg(DomainSpec(()))
    assert "<svg" in empty and "<circle" not in empty and "<polygon" not in empty
    one = render_svg(validate_domain({"components": [fixtures._disk("a", 0, 1.0)]}))
    assert one.count("<circle") == 1


def test_svg_metric_one_rect_per_cell(disk_pair):
    grid = build_quotient_grid(disk_pair, (-2, -2, 6, 2), 32)
    rng = np.random.default_rng(1)
    m = np.zeros(grid.n_nodes)
    omega = np.nonzero(grid.cell_class.ravel() == OMEGA)[0]
    chosen = rng.choice(omega, 40, replace=False)
    m[chosen] = rng.uniform(0.1, 2.0, 40)
    text = render_svg(disk_pair, metric=m, grid=grid)
    assert text.count("<rect") == 1 + 40  # background plus cells
    assert 'fill-opacity="1"' in text


def test_outputs_are_deterministic(capsys, write, tmp_path):
    src = write("s.json", fixtures.two_squares())
    texts = []
    for k in range(2):
        svg = tmp_path / f"{k}.svg"
        _, out, _ = run(capsys, "uniformize", "--in", src, "--svg", str(svg), "--seed", "7")
        texts.append((out, svg.read_bytes()))
    assert texts[0] == texts[1]

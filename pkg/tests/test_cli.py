import json

import pytest
from click.testing import CliRunner

from specnet import cli
from specnet.covering import FormulaMismatch


def run(*args):
    res = CliRunner().invoke(cli.main, [str(a) for a in args])
    return res.exit_code, res.output


@pytest.fixture
def torus_file(tmp_path):
    path = tmp_path / "torus.json"
    code, _ = run("sympl-reconstruct", "--random", "--surface", "torus1", "--algebra", "R",
                  "--mode", "full", "--seed", 3, "--out", path)
    assert code == 0
    return path


def test_cover_reports_topology():
    code, out = run("cover", "torus1")
    rep = json.loads(out)
    assert code == 0 and rep["genus_cover"] == 2 and rep["pi1_rank"] == 5
    code, out = run("cover", "S3")
    assert code == 0 and json.loads(out)["genus_cover"] == 0


def test_malformed_surface_file_exits_invalid(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("cover", bad)[0] == cli.EXIT_INVALID
    bad.write_text(json.dumps({"triangles": [[1, 2, 3]]}))
    assert run("cover", bad)[0] == cli.EXIT_INVALID


def test_formula_mismatch_exit_code(monkeypatch):
    def boom(c):
        raise FormulaMismatch("euler characteristic disagrees")
    monkeypatch.setattr(cli, "topology_report", boom)
    assert run("cover", "S4")[0] == cli.EXIT_FORMULA


def test_holonomy_words(torus_file):
    code, out = run("holonomy", torus_file, "@1")
    m = json.loads(out)["matrix"]
    assert code == 0 and m == [[[1.0], [0.0]], [[0.0], [1.0]]]
    code, out = run("holonomy", torus_file, "@1,F+")
    m = json.loads(out)["matrix"]
    assert code == 0 and m == [[[-1.0], [0.0]], [[0.0], [-1.0]]]


def test_missing_edge_value_exit_code(torus_file, tmp_path):
    doc = json.loads(torus_file.read_text())
    del doc["framed"]
    del doc["abelian"]["edges"]["2"], doc["abelian"]["edges"]["-2"]
    path = tmp_path / "holey.json"
    path.write_text(json.dumps(doc))
    code, _ = run("holonomy", path, "@2,@-2")
    assert code == cli.EXIT_MISSING


def test_sympl_check_and_report(torus_file):
    code, out = run("sympl-check", torus_file)
    assert code == 0 and json.loads(out)["ok"]
    code, out = run("maximality-report", torus_file)
    assert code == 0 and json.loads(out)["coherent"]


def test_parameter_count_mismatch_exits_invalid(tmp_path):
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"surface": "torus1", "algebra": "R", "mode": "theorem",
                             "symmetric": [[1.0], [1.0]], "units": [[1.0], [1.0]]}))
    assert run("sympl-reconstruct", p)[0] == cli.EXIT_INVALID


def test_verify_is_deterministic():
    a = run("verify", "lifting", "--seed", 7)
    b = run("verify", "lifting", "--seed", 7)
    assert a[0] == 0 and a[1] == b[1]


def test_verify_laurent_hexagon():
    code, out = run("verify", "laurent", "--n", 6)
    rep = json.loads(out)
    assert code == 0 and rep["max_residual"] < 1e-9


def test_verify_rejects_bad_options():
    assert run("verify", "laurent", "--tol", -1)[0] == cli.EXIT_INVALID


def test_maximality_fixture_reports_counterexample(tmp_path):
    p = tmp_path / "mixed.json"
    p.write_text(json.dumps({"surface": "S5", "algebra": "M2", "mode": "full",
                             "symmetric": [[2, 0, 0, 3], [1, 0, 0, -1], [1, 0.2, 0.2, 1]]}))
    code, out = run("verify", "maximality", "--fixture", p)
    rep = json.loads(out)
    assert code == cli.EXIT_FAIL
    assert rep["failures"][0]["counterexample_faces"] == [1]


def test_expand_square():
    code, out = run("expand", 4, 3, 1)
    assert code == 0 and out.strip()

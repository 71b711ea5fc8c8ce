import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unduloid_lab.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, run_command
from unduloid_lab.config import RunConfig
from unduloid_lab.errors import ParameterError
from unduloid_lab.io import (Record, auto_center, build_report, dumps, emit_report, export_obj, read_obj_vertices,
                             stereographic)


def _run(tmp_path, *argv):
    return run_command([*argv, "--out", str(tmp_path)])


def test_gen_vertex_count(tmp_path):
    assert _run(tmp_path, "gen", "--necksize", "1.0", "--grid", "200x100") == EXIT_OK
    assert read_obj_vertices(tmp_path / "mesh_n1.obj").shape == (20000, 3)
    rep = json.loads((tmp_path / "gen.json").read_text())
    assert rep["pass"] and rep["meta"]["config"]["grid"] == [200, 100]


def test_gen_cylinder_radius(tmp_path):
    assert _run(tmp_path, "gen", "--necksize", str(np.pi), "--grid", "40x16") == EXIT_OK
    (obj,) = tmp_path.glob("mesh_*.obj")
    V = read_obj_vertices(obj)
    assert np.allclose(np.hypot(V[:, 1], V[:, 2]), 0.5, atol=1e-12)


def test_modes_csv(tmp_path):
    assert _run(tmp_path, "modes", "--necksize", "1.0", "--m-max", "5") == EXIT_OK
    lines = [ln for ln in (tmp_path / "modes_n1.csv").read_text().splitlines() if not ln.startswith("#")]
    assert len(lines) == 1 + 6
    assert lines[0].startswith("m,")
    assert json.loads((tmp_path / "modes.json").read_text())["pass"]


def test_dims(tmp_path):
    assert _run(tmp_path, "dims", "--necksize", "1.0", "--k-max", "4") == EXIT_OK
    rows = (tmp_path / "dims.csv").read_text().splitlines()
    assert rows[1] == "2,4,1,6,0"


def test_cousin_hemisphere_like_export(tmp_path):
    # S^3 vertices land in R^3 via the recorded center; inverse projection has |q| = 1
    rng = np.random.default_rng(1)
    Q = rng.normal(size=(6, 5, 4))
    Q /= np.linalg.norm(Q, axis=-1, keepdims=True)
    path = tmp_path / "s3.obj"
    export_obj(path, Q)
    c = auto_center(Q)
    y = read_obj_vertices(path)
    s = np.sum(y * y, 1)
    q0 = np.column_stack([(1 - s) / (1 + s), 2 * y / (1 + s)[:, None]])
    assert np.allclose(np.linalg.norm(q0, axis=1), 1, atol=1e-12)
    from unduloid_lab.quat import qmul
    back = qmul(np.broadcast_to(c, q0.shape), -q0)
    assert np.allclose(back, Q.reshape(-1, 4), atol=1e-10)


def test_stereographic_rejects_center():
    with pytest.raises(ParameterError):
        stereographic(np.array([1.0, 0, 0, 0]), center=(1.0, 0, 0, 0))


def test_byte_identical_export(tmp_path):
    V = np.random.default_rng(0).normal(size=(5, 4, 3))
    export_obj(tmp_path / "a.obj", V)
    export_obj(tmp_path / "b.obj", V)
    assert (tmp_path / "a.obj").read_bytes() == (tmp_path / "b.obj").read_bytes()
    assert np.array_equal(read_obj_vertices(tmp_path / "a.obj"), V.reshape(-1, 3))


def test_empty_report():
    r = build_report([])
    assert r["pass"] is True and r["count"] == 0


def test_failing_record_fails_report():
    assert build_report([Record("a", "b", 1, 0, 0, False)])["pass"] is False
    assert build_report([Record("a", "b", 1, 0, 0, False, informational=True)])["pass"] is True


@settings(max_examples=50)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), max_size=6))
def test_round_trip(xs):
    text = emit_report([Record("x", "y", xs, None, None, True)])
    back = json.loads(text)
    assert back["records"][0]["value"] == xs
    assert dumps(back) == text


def test_nonfinite_become_strings():
    back = json.loads(emit_report([Record("x", "y", float("nan"), float("inf"), None, True)]))
    assert back["records"][0]["value"] == "nan" and back["records"][0]["target"] == "inf"


def test_exit_codes(tmp_path):
    assert _run(tmp_path, "gen", "--grid", "bogus") == EXIT_USAGE
    assert _run(tmp_path, "gen", "--necksize", "4.0") == EXIT_USAGE
    assert _run(tmp_path, "gen", "--necksize", "1.0", "--tol", "-1") == EXIT_USAGE
    assert run_command(["nonsense"]) == EXIT_USAGE


def test_failure_exit(tmp_path, monkeypatch):
    import unduloid_lab.cli as cli
    monkeypatch.setattr(cli, "consistency_report",
                        lambda P, m: {"n": P.n, "computed_even": 5, "predicted": 4, "consistent": False})
    assert _run(tmp_path, "dims", "--necksize", "1.0") == EXIT_FAIL
    assert json.loads((tmp_path / "dims.json").read_text())["pass"] is False


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"necksizes": [0.9, 1.5], "m_max": 4, "grid": [32, 16]}))
    c = RunConfig.from_json(cfg).override(m_max=6, grid=None)
    assert c.necksizes == (0.9, 1.5) and c.m_max == 6 and c.grid == (32, 16)
    assert RunConfig.from_dict(c.as_dict()) == c
    assert _run(tmp_path, "modes", "--config", str(cfg), "--m-max", "3") == EXIT_OK
    rep = json.loads((tmp_path / "modes.json").read_text())
    assert rep["meta"]["config"]["m_max"] == 3 and rep["meta"]["config"]["necksizes"] == [0.9, 1.5]


def test_config_validation(tmp_path):
    with pytest.raises(ParameterError):
        RunConfig(grid=(4, 4))
    with pytest.raises(ParameterError):
        RunConfig.from_dict({"colour": 1})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _run(tmp_path, "gen", "--config", str(bad)) == EXIT_USAGE


def test_cousin_command(tmp_path):
    assert _run(tmp_path, "cousin", "--necksize", "1.5") == EXIT_OK
    assert json.loads((tmp_path / "cousin.json").read_text())["pass"]
    assert read_obj_vertices(tmp_path / "cousin_n1.5.obj").shape == (40000, 3)


def test_cousin_coarse_grid_reports_failure(tmp_path):
    # identity residual tolerances are pinned at 400x100; a coarse grid must not pass silently
    assert _run(tmp_path, "cousin", "--necksize", "1.5", "--grid", "200x50") == EXIT_FAIL
    failed = {r["name"] for r in json.loads((tmp_path / "cousin.json").read_text())["records"] if not r["passed"]}
    assert failed == {"cousin.left_killing_i[n=1.5]", "cousin.rotation_identity_i[n=1.5]"}


def test_classify_deterministic(tmp_path):
    out = []
    for _ in range(2):
        assert _run(tmp_path, "classify", "--necksize", "1.5", "--grid", "200x50") == EXIT_OK
        out.append(((tmp_path / "classify.json").read_bytes(), (tmp_path / "classify.csv").read_bytes()))
    assert out[0] == out[1]

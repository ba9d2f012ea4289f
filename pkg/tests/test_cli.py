import json

import numpy as np
import pytest

from conjugen import artifacts
from conjugen.cli import main

GRID9 = "1:2:9,1:2:9,1:2:9"


@pytest.fixture(scope="module")
def linear_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("linear")
    out = d / "run.json"
    code = main(["solve", "--n", "3", "--f", "phi1", "--grid", GRID9, "--out", str(out),
                 "--csv", str(d / "run.csv"), "--plotdata", str(d / "run.dat")])
    return code, out, d


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_solve_linear_exit_zero_with_729_cells(linear_run):
    code, out, _ = linear_run
    assert code == 0
    data = json.loads(out.read_text())
    assert len(data["cells"]) == 729
    assert set(data) == {"manifest", "grid", "cells", "report"}
    assert set(data["cells"][0]) >= {"index", "x", "phi", "residual", "iters", "grad_h", "h"}
    assert data["report"]["within_tolerance"] is True


def test_solve_matches_linear_oracle(linear_run):
    from conjugen.nullrep import GeneralQuadratic
    from conjugen.solver import linear_f_oracle

    data = json.loads(linear_run[1].read_text())
    for rec in data["cells"]:
        phi = np.array([complex(*p) for p in rec["phi"]])
        np.testing.assert_allclose(phi, linear_f_oracle([1, 0], GeneralQuadratic(3), rec["x"]), atol=1e-10)


def test_manifest_contents(linear_run):
    m = json.loads(linear_run[1].read_text())["manifest"]
    assert m["rng_seed"] == 0xC0FFEE
    assert m["f"] == "phi1" and m["n"] == 3 and m["backend"] == "general"
    assert m["grid"] == "1.0:2.0:9,1.0:2.0:9,1.0:2.0:9"
    assert m["base_cell"] == [0, 0, 0]
    assert "numpy" in m and "version" in m


def test_csv_and_plotdata(linear_run):
    d = linear_run[2]
    rows = (d / "run.csv").read_text().splitlines()
    assert len(rows) == 730
    assert rows[0].startswith("i1,i2,i3,x1,x2,x3,status,phi1_re")
    lines = [l for l in (d / "run.dat").read_text().splitlines() if l and not l.startswith("#")]
    assert len(lines) == 81
    assert len(lines[0].split()) == 4


def test_verify_round_trip(linear_run, capsys):
    solve_lines = [l for l in _report_lines(linear_run[1])]
    code, out, _ = run(["verify", str(linear_run[1])], capsys)
    assert code == 0
    assert out.splitlines() == solve_lines
    for line in out.splitlines():
        assert "e-" in line or "e+" in line


def _report_lines(path):
    from conjugen.cli import format_report
    from conjugen.field import verify_conjugate

    return format_report(verify_conjugate(artifacts.field_from(artifacts.load(path))))


def test_solve_prints_same_report_as_verify(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, solve_out, _ = run(["solve", "--n", "3", "--f", "phi1", "--grid", "1:2:5,1:2:5,1:2:5", "--out", str(out)], capsys)
    _, verify_out, _ = run(["verify", str(out)], capsys)
    fields = [l for l in solve_out.splitlines() if l.startswith("max_")]
    assert fields == verify_out.splitlines()


def test_verify_truncated_and_missing(linear_run, tmp_path, capsys):
    data = json.loads(linear_run[1].read_text())
    data["cells"] = data["cells"][:-5]
    bad = tmp_path / "trunc.json"
    bad.write_text(json.dumps(data))
    assert run(["verify", str(bad)], capsys)[0] == 2
    assert run(["verify", str(tmp_path / "missing.json")], capsys)[0] == 2
    garbage = tmp_path / "garbage.json"
    garbage.write_text('{"manifest": {}, "grid": ')
    assert run(["verify", str(garbage)], capsys)[0] == 2


def test_verify_flags_corrupted_h(linear_run, tmp_path, capsys):
    data = json.loads(linear_run[1].read_text())
    data["cells"][364]["h"][0] += 1.0
    bad = tmp_path / "corrupt.json"
    bad.write_text(json.dumps(data))
    code, out, _ = run(["verify", str(bad)], capsys)
    assert code == 1
    loop = next(l for l in out.splitlines() if l.startswith("max_loop_residual"))
    assert float(loop.split()[1]) >= 0.99


def test_solve_n2_is_config_error(capsys):
    code, _, err = run(["solve", "--n", "2", "--f", "phi1", "--grid", "1:2:3,1:2:3"], capsys)
    assert code == 2
    assert "n must be ≥ 3" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--n", "3", "--f", "conj(phi1)", "--grid", GRID9],
        ["solve", "--n", "3", "--f", "phi3", "--grid", GRID9],
        ["solve", "--n", "3", "--f", "phi1", "--grid", "1:2:2,1:2:9,1:2:9"],
        ["solve", "--n", "3", "--f", "phi1", "--grid", "1:2:9,1:2:9"],
        ["solve", "--n", "4", "--backend", "trilinear5", "--f", "phi1", "--grid", "1:2:3,1:2:3,1:2:3,1:2:3"],
        ["solve", "--n", "3", "--f", "phi1", "--grid", GRID9, "--seed-phi", "1,2,3"],
        ["solve", "--n", "3"],
    ],
)
def test_config_errors_exit_2(argv, capsys, tmp_path):
    assert run(argv + ["--out", str(tmp_path / "x.json")], capsys)[0] == 2


def test_bad_thread_env_exit_2(monkeypatch, capsys, tmp_path):
    monkeypatch.setenv("CONJUGEN_THREADS", "zero")
    assert run(["solve", "--n", "3", "--f", "phi1", "--grid", GRID9, "--out", str(tmp_path / "x.json")], capsys)[0] == 2


def test_anchor_failure_exit_3(tmp_path, capsys):
    argv = ["solve", "--n", "3", "--f", "exp(phi1) + phi2^4", "--grid", "1:2:3,1:2:3,1:2:3",
            "--max-iters", "1", "--out", str(tmp_path / "x.json")]
    code, _, err = run(argv, capsys)
    assert code == 3
    assert "no grid cell solved" in err


def test_tolerance_breach_still_writes_artifact(tmp_path, capsys):
    out = tmp_path / "strict.json"
    code, _, _ = run(["solve", "--n", "3", "--f", "phi1", "--grid", GRID9, "--tol-conjugacy", "1e-9", "--out", str(out)], capsys)
    assert code == 1
    assert json.loads(out.read_text())["report"]["within_tolerance"] is False


def test_threads_produce_identical_bytes(linear_run, monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("CONJUGEN_THREADS", "3")
    out = tmp_path / "threads.json"
    code, _, _ = run(["solve", "--n", "3", "--f", "phi1", "--grid", GRID9, "--out", str(out)], capsys)
    assert code == 0
    assert out.read_bytes() == linear_run[1].read_bytes()


def test_trilinear_solve_runs(tmp_path, capsys):
    out = tmp_path / "tri.json"
    code, _, _ = run(["solve", "--n", "5", "--backend", "trilinear5", "--f", "phi5*phi6",
                      "--grid", "1:2:3,1:2:3,1:2:3,1:2:3,1:2:3", "--out", str(out)], capsys)
    assert code in (0, 1)
    data = json.loads(out.read_text())
    assert len(data["cells"]) == 243
    assert all(rec["residual"] <= 1e-12 for rec in data["cells"] if rec["status"] == "ok")
    assert run(["hypersurface", str(out)], capsys)[0] == 2


def test_hypersurface_n3_and_n4(linear_run, tmp_path, capsys):
    code, out, _ = run(["hypersurface", str(linear_run[1])], capsys)
    assert code == 0 and "M3 equation 1" in out
    art = tmp_path / "n4.json"
    main(["solve", "--n", "4", "--f", "phi1", "--grid", "1:2:5,1:2:5,1:2:5,1:2:5", "--out", str(art)])
    capsys.readouterr()
    code, out, _ = run(["hypersurface", str(art)], capsys)
    assert code == 0
    assert "M4 equation 1" in out and "M4 equation 2" in out


def test_oracle_command(capsys):
    code, out, _ = run(["oracle", "--n", "4", "--f", "phi1 + 2*phi2 - i*phi3", "--grid", "1:2:4,1:2:4,1:2:4,1:2:4"], capsys)
    assert code == 0
    assert "compared 256 cells" in out
    assert run(["oracle", "--n", "3", "--f", "phi1^2", "--grid", "1:2:4,1:2:4,1:2:4"], capsys)[0] == 2


def test_artifact_loads_losslessly(linear_run):
    data = artifacts.load(linear_run[1])
    fg = artifacts.field_from(data)
    assert fg.base_cell == (0, 0, 0)
    rec = data["cells"][100]
    assert fg.h[tuple(rec["index"])] == complex(*rec["h"])

import json

import numpy as np
import pytest

from coastwaves.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from coastwaves.export import read_binary


def run(*argv):
    return main([str(a) for a in argv])


def test_list_fixtures(capsys):
    assert run("--list-fixtures") == EXIT_OK
    assert "example1" in capsys.readouterr().out.split()


def test_quantize_example3_case2(tmp_path, capsys):
    assert run("quantize", "--config", "example3_case2_unperturbed", "--out", tmp_path) == EXIT_OK
    out = capsys.readouterr().out
    values = dict(line.split(" = ", 1) for line in out.splitlines() if " = " in line)
    assert float(values["kappa"]) == pytest.approx(-2.029449909118645, rel=1e-6)
    assert float(values["1/h"]) == pytest.approx(33.0692001800103, rel=1e-6)


def test_quantize_example1_report(tmp_path):
    assert run("quantize", "--config", "example1", "--out", tmp_path) == EXIT_OK
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["torus"]["omega"] == pytest.approx([2.533, 1.7306], abs=5e-3)
    assert rep["mode"]["q_over_h"] == pytest.approx([-0.8, -0.492], abs=2e-2)


def test_reports_are_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert run("field", "--config", "example3_case1", "--grid", "64x32", "--out", tmp_path / d) == EXIT_OK
    for name in ("report.json", "field.json", "field.csv", "field.bin", "field_re.png"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert "elapsed_seconds" in json.loads((tmp_path / "a" / "timing.json").read_text())


def test_field_exports(tmp_path):
    assert run("field", "--config", "example3_case1", "--grid", "40x16", "--out", tmp_path) == EXIT_OK
    rec = read_binary(tmp_path / "field.bin")
    assert rec.shape == (640, 4)
    assert (tmp_path / "field_physical.png").exists()
    meta = json.loads((tmp_path / "field.json").read_text())
    assert meta["shape"] == [40, 16]
    assert np.all(np.isfinite(rec))


def test_no_plots(tmp_path):
    assert run("field", "--config", "example3_case1", "--grid", "16x8", "--no-plots", "--out", tmp_path) == EXIT_OK
    assert not list(tmp_path.glob("*.png"))


def test_resonances_flag_exact_resonance(tmp_path, capsys):
    assert run("resonances", "--omega", "1,1", "--order", "4", "--out", tmp_path) == EXIT_OK
    assert "RESONANT" in capsys.readouterr().out
    assert run("resonances", "--omega", "1,1", "--order", "4", "--check", "--out", tmp_path) == EXIT_CHECK


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[torus]\nE = 1\nkappa = from-nu\n[mode]\nnu = 1, 1\nh = from-quantization\n")
    out = tmp_path / "out"
    assert run("run", "--config", bad, "--out", out) == EXIT_CONFIG
    assert not out.exists()
    assert run("run", "--config", "nowhere.cfg", "--out", out) == EXIT_CONFIG
    assert run("run", "--out", out) == EXIT_CONFIG
    assert run("run", "--config", "example1", "--grid", "5", "--out", out) == EXIT_CONFIG
    assert run("run", "--config", "example1", "--window-band", "3", "--out", out) == EXIT_CONFIG


def test_numerical_failure_leaves_nothing(tmp_path, capsys):
    out = tmp_path / "ex2"
    assert run("run", "--config", "example2", "--out", out) == EXIT_NUMERICAL
    assert "multi-well" in capsys.readouterr().err
    assert not out.exists()


def test_resonant_divisor_floor_is_numerical(tmp_path):
    assert run("field", "--config", "example1", "--divisor-floor", "10", "--out", tmp_path / "x") == EXIT_NUMERICAL


def test_existing_directory_is_kept(tmp_path):
    (tmp_path / "keep.txt").write_text("x")
    assert run("run", "--config", "example2", "--out", tmp_path) == EXIT_NUMERICAL
    assert [p.name for p in tmp_path.iterdir()] == ["keep.txt"]


def test_verify_stage(tmp_path, capsys):
    assert run("verify", "--config", "example3_case1", "--check", "--no-plots", "--grid", "64x64", "--out", tmp_path) == EXIT_OK
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["residual"]["grid_limited"] is False
    assert rep["residual"]["relative_residual"] < 0.1
    assert rep["transport"]["check_passed"] is True
    assert "relative residual" in capsys.readouterr().out


def test_study_stage(tmp_path):
    code = run("study", "--config", "example3_case1_unperturbed", "--ray", "10,11", "--ray-count", "3", "--out", tmp_path)
    rep = json.loads((tmp_path / "report.json").read_text())
    assert code == EXIT_OK
    assert rep["slope"] >= 1.7 and rep["passed"] is True
    assert [m["nu"] for m in rep["members"]] == [[10, 11], [20, 22], [30, 33]]


def test_study_needs_three(tmp_path):
    assert run("study", "--config", "example3_case1_unperturbed", "--ray-count", "1", "--out", tmp_path / "s") == EXIT_NUMERICAL

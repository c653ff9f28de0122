import importlib.util
import json
import math
import shutil

import pytest

from chshcheck.cli import main
from chshcheck.formats import parse_counts_file

from conftest import FIXTURES


def load_fixture_builder():
    spec = importlib.util.spec_from_file_location("make_fixtures", FIXTURES / "make_fixtures.py")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


# --- analyze ------------------------------------------------------------------------


def test_analyze_constructed_fixture(capsys):
    data = run_json(capsys, "analyze", FIXTURES / "asymmetric_counts.csv")
    assert data["schema"] == "chshcheck.analysis/1"
    assert data["S"]["value"] == pytest.approx(2.0732, abs=1e-12)
    assert data["delta"]["total"] == pytest.approx(0.0305, abs=1e-12)
    assert data["rough_bound"] == pytest.approx(2.0305, abs=1e-12)
    assert data["sigmas_above_2"] == pytest.approx(244.0, abs=0.5)
    assert data["violation_ratio"] == pytest.approx(2.40, abs=0.01)
    assert data["verdict"] == "VIOLATION"
    assert data["eta"] is None and data["corrected_bound"] is None


def test_analyze_text_mentions_ratio(capsys):
    code, out, _ = run(capsys, "analyze", FIXTURES / "asymmetric_counts.csv", "--format", "text")
    assert code == 0
    assert "(S - 2) / delta = 2.40" in out
    assert "Verdict: VIOLATION" in out


def test_analyze_with_eta_file(capsys):
    data = run_json(capsys, "analyze", FIXTURES / "asymmetric_counts.csv", "--eta", FIXTURES / "eta_small.txt")
    assert data["corrected_bound"] == pytest.approx(2.04)
    assert data["verdict_bound"] == "corrected"
    assert data["verdict"] == "VIOLATION"


def test_analyze_uniform_counts(tmp_path, capsys):
    path = tmp_path / "u.csv"
    rows = "".join(f"{x},{y},250,250,250,250\n" for x in ("a", "a_prime") for y in ("b", "b_prime"))
    path.write_text("setting_x,setting_y,n_pp,n_pm,n_mp,n_mm\n" + rows, encoding="utf-8")
    data = run_json(capsys, "analyze", path)
    assert data["S"]["value"] == 0.0
    assert data["delta"]["total"] == 0.0
    assert data["verdict"] == "NO_VIOLATION"
    code, out, _ = run(capsys, "analyze", path, "--format", "text")
    assert "no crosstalk signature detected" in out


def test_analyze_is_byte_identical(capsys):
    first = run(capsys, "analyze", FIXTURES / "asymmetric_counts.csv")
    second = run(capsys, "analyze", FIXTURES / "asymmetric_counts.csv")
    assert first == second


# --- simulate ------------------------------------------------------------------------


def test_simulate_singlet(tmp_path, capsys):
    out = tmp_path / "singlet.csv"
    run_json(capsys, "simulate", FIXTURES / "singlet_none.cfg", "-o", out)
    sidecar = json.loads(out.with_suffix(".exact.json").read_text(encoding="utf-8"))
    assert all(v["eta"] == 0.0 for v in sidecar["exact"].values())
    assert sidecar["eta_total"] == 0.0
    assert sidecar["S_true"] == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    report = run_json(capsys, "analyze", out, "--sidecar", out.with_suffix(".exact.json"))
    assert abs(report["S"]["value"] - 2 * math.sqrt(2)) <= 5 * report["S"]["stderr"]
    assert all(report["delta"][lab]["noise_dominated"] for lab in ("a", "a_prime", "b", "b_prime"))
    assert report["crosstalk_signature"] is False
    assert report["corrected_bound"] == 2.0


def test_simulate_is_byte_identical(tmp_path, capsys):
    outputs = []
    for name in ("one", "two"):
        out = tmp_path / f"{name}.csv"
        side = tmp_path / f"{name}.json"
        run(capsys, "simulate", FIXTURES / "measurement_crosstalk.cfg", "-o", out, "--sidecar", side)
        outputs.append((out.read_bytes(), side.read_bytes()))
    assert outputs[0] == outputs[1]


def test_simulated_readout_crosstalk_shows_up(tmp_path, capsys):
    out = tmp_path / "mc.csv"
    run_json(capsys, "simulate", FIXTURES / "measurement_crosstalk.cfg", "-o", out)
    sidecar = json.loads(out.with_suffix(".exact.json").read_text(encoding="utf-8"))
    assert sidecar["delta"]["total"] == pytest.approx(0.03, abs=1e-3)
    report = run_json(capsys, "analyze", out)
    for lab in ("a", "a_prime", "b", "b_prime"):
        d = report["delta"][lab]
        assert abs(d["value"] - sidecar["delta"][lab]) <= 5 * d["stderr"]
    assert report["crosstalk_signature"] is True
    assert report["delta"]["total"] == pytest.approx(0.03, abs=0.01)


def test_simulate_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("state = singlet\nshotz = 10\nmodle = none\n", encoding="utf-8")
    code, _, err = run(capsys, "simulate", cfg, "-o", tmp_path / "x.csv")
    assert code == 1
    assert "modle, shotz" in err


# --- optimize, bias-study, bound -------------------------------------------------------


def test_optimize_command(tmp_path, capsys):
    cfg = tmp_path / "opt.cfg"
    cfg.write_text("state = singlet\nrestarts = 2\nseed = 1\n", encoding="utf-8")
    data = run_json(capsys, "optimize", cfg)
    assert data["S_best"] >= 2 * math.sqrt(2) - 1e-6
    assert data["restarts"] == 2
    code, out, _ = run(capsys, "optimize", cfg, "--format", "text")
    assert out.startswith("best S = 2.82842")


def test_bias_study_command(tmp_path, capsys):
    cfg = tmp_path / "bias.cfg"
    cfg.write_text("state = singlet\nmodel = measurement_crosstalk\np_ab = 0.02\nrestarts = 2\n", encoding="utf-8")
    data = run_json(capsys, "bias-study", cfg)
    assert data["rough_estimate_holds"] is False
    assert data["delta"]["b"] == pytest.approx(0.0, abs=1e-12)
    code, out, _ = run(capsys, "bias-study", cfg, "--format", "text")
    assert "rough estimate fails" in out


def test_bias_study_rejects_none_model(tmp_path, capsys):
    cfg = tmp_path / "none.cfg"
    cfg.write_text("state = singlet\n", encoding="utf-8")
    assert run(capsys, "bias-study", cfg)[0] == 1


def test_bound_command(capsys):
    data = run_json(capsys, "bound", "--delta", FIXTURES / "asymmetric_delta.txt")
    assert data["kind"] == "rough"
    assert data["bound"] == pytest.approx(2.0305, abs=1e-12)
    assert data["asymmetry_index"] == pytest.approx(0.987, abs=1e-3)
    data = run_json(capsys, "bound", "--eta", FIXTURES / "eta_small.txt")
    assert data["bound"] == pytest.approx(2.04, abs=1e-12)
    code, out, _ = run(capsys, "bound", "--eta", FIXTURES / "eta_small.txt", "--format", "text")
    assert "2.040000" in out


# --- exit codes and fixtures ------------------------------------------------------------


def test_exit_codes(tmp_path, capsys):
    assert run(capsys, "analyze", tmp_path / "missing.csv")[0] == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("setting_x,setting_y,n_pp,n_pm,n_mp,n_mm\na,b,-1,0,0,1\n", encoding="utf-8")
    code, _, err = run(capsys, "analyze", bad)
    assert code == 1
    assert "line 2" in err and "negative count" in err
    assert run(capsys, "simulate", FIXTURES / "singlet_none.cfg", "-o", tmp_path / "no" / "dir.csv")[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_tolerance_flag(tmp_path, capsys):
    from chshcheck.formats import format_density
    import numpy as np

    cfg = tmp_path / "rho.cfg"
    rho = np.eye(4) / 4 + np.diag([1e-7, 0, 0, 0])
    cfg.write_text(f"rho = {format_density(rho)}\nshots = 10\n", encoding="utf-8")
    assert run(capsys, "simulate", cfg, "-o", tmp_path / "r.csv")[0] == 1
    assert run(capsys, "simulate", cfg, "-o", tmp_path / "r.csv", "--tolerance", "1e-6")[0] == 0


def test_committed_counts_fixture_is_reproducible():
    builder = load_fixture_builder()
    assert builder.asymmetric_counts_text() == (FIXTURES / "asymmetric_counts.csv").read_text(encoding="utf-8")
    assert parse_counts_file(FIXTURES / "asymmetric_counts.csv") == builder.exact_rows()


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "chshcheck", "bound", "--eta", str(FIXTURES / "eta_small.txt")],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["kind"] == "corrected"

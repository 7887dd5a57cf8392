import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import darkmodes
from darkmodes import io
from darkmodes.cli import main
from darkmodes.scenarios import optomechanical

DATA = Path(darkmodes.__file__).parent / "data"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _edited(tmp_path, name, edit):
    doc = json.loads((DATA / name).read_text())
    edit(doc)
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_analyze_optomech(capsys):
    code, out, _ = run(capsys, "analyze", DATA / "optomech.json", "--json", "--oracle")
    assert code == io.EXIT_DARK
    report = json.loads(out)
    assert report["dark_candidate_count"] == 2
    assert report["dark_condition"]["verdict"] == "dark"
    dark = [m for m in report["modes"] if m["label"] == "dark-candidate"]
    coeffs = np.array([m["coefficients"] for m in dark])
    expected = np.array([[2, 0, -1, 0], [0, 2, 0, -1]]) / np.sqrt(5)
    np.testing.assert_allclose(np.abs(coeffs), np.abs(expected), atol=1e-11)
    assert report["oracle"]["consistent"] and report["oracle"]["dimension"] == 2


def test_analyze_detuned_cavity(capsys, tmp_path):
    def detune(doc):
        doc["G_summands"]["G_D"][2][2] = 6.25  # omega2 = 2.5

    code, out, _ = run(capsys, "analyze", _edited(tmp_path, "optomech.json", detune), "--json")
    assert code == io.EXIT_NOT_DARK
    rep = json.loads(out)["dark_condition"]
    a, b, e, f = 2 / np.sqrt(5), -1 / np.sqrt(5), 1 / np.sqrt(5), 2 / np.sqrt(5)
    assert rep["residual"] == pytest.approx(abs(a * e * 4 + b * f * 6.25), rel=1e-10)
    assert rep["threshold"] > 0


def test_analyze_text_report(capsys):
    code, out, _ = run(capsys, "analyze", DATA / "optomech.json")
    assert code == 0
    assert "[bright-direct]" in out and "residual" in out


def test_analyze_truncated_file(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text((DATA / "optomech.json").read_text()[:200])
    code, _, err = run(capsys, "analyze", path)
    assert code == io.EXIT_INPUT
    assert "line" in err and "column" in err


def test_analyze_schema_violation_names_field(capsys, tmp_path):
    path = _edited(tmp_path, "optomech.json", lambda doc: doc["G_summands"].update(G_N=[[1, 2]]))
    code, _, err = run(capsys, "analyze", path)
    assert code == io.EXIT_INPUT and "G_summands/G_N" in err


def test_analyze_no_candidates(capsys, tmp_path):
    doc = {"n": 1, "n1": 1, "G": [[1, 0], [0, 1]], "couplings": [[[1, 0], [0, 1]]]}
    path = tmp_path / "single.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "analyze", path, "--json")
    assert code == io.EXIT_NO_CANDIDATES
    assert json.loads(out)["dark_candidate_count"] == 0


def test_env_tolerance(capsys, monkeypatch):
    monkeypatch.setenv("DMK_TOL_ZERO", "1e-6")
    _, out, _ = run(capsys, "analyze", DATA / "optomech.json", "--json")
    assert json.loads(out)["tolerances"]["zero_abs"] == 1e-6


def test_synthesize_cross_feedback(capsys, tmp_path):
    target = tmp_path / "ex1.json"
    code, _, _ = run(capsys, "synthesize", DATA / "example1_crossfeedback.json", "-o", target)
    assert code == 0
    code, out, _ = run(capsys, "analyze", target, "--json")
    assert code == io.EXIT_DARK
    dark = [m["coefficients"] for m in json.loads(out)["modes"] if m["label"] == "dark-candidate"]
    expected = np.array([[1, 0, -1, 0], [0, 1, 0, -1]]) / np.sqrt(2)
    np.testing.assert_allclose(np.abs(dark), np.abs(expected), atol=1e-11)


def test_synthesize_cascade(capsys, tmp_path):
    target = tmp_path / "cascade.json"
    run(capsys, "synthesize", DATA / "cascade_identical.json", "-o", target)
    code, out, _ = run(capsys, "analyze", target, "--json")
    report = json.loads(out)
    assert report["dark_candidate_count"] == 2 * report["n"] - report["rank"] == 2
    assert code == io.EXIT_NOT_DARK


def test_synthesize_direct_coupling_full_rank(capsys, tmp_path):
    osc = {"n": 1, "G": [[1.0, 0.2], [0.2, 2.0]], "couplings": [[[0.8, 0.1], [0.3, 0.9]]]}
    recipe = {"kind": "direct", "operands": [osc, osc],
              "G_int": [[0, 0, 0.5, 0], [0, 0, 0, 0.3], [0.5, 0, 0, 0], [0, 0.3, 0, 0]]}
    path = tmp_path / "direct.json"
    path.write_text(json.dumps(recipe))
    target = tmp_path / "out.json"
    run(capsys, "synthesize", path, "-o", target)
    code, out, _ = run(capsys, "analyze", target, "--json")
    assert code == io.EXIT_NO_CANDIDATES
    assert json.loads(out)["dark_candidate_count"] == 0


def test_synthesize_bundled_direct_recipe(capsys):
    code, out, _ = run(capsys, "synthesize", DATA / "optomech_direct.json")
    assert code == 0
    sys_ = io.SystemDescription.from_dict(json.loads(out)).to_system()
    np.testing.assert_allclose(sys_.A, optomechanical().A, atol=1e-15)


def test_synthesize_port_mismatch(capsys, tmp_path):
    recipe = json.loads((DATA / "example1_crossfeedback.json").read_text())
    recipe["ports"] = {"sys1": [[0, 1], []], "sys2": [[0], [1]]}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(recipe))
    code, _, err = run(capsys, "synthesize", path)
    assert code == io.EXIT_INPUT
    assert "port" in err


def test_recipe_with_operand_files(capsys, tmp_path):
    osc = {"n": 1, "G": [[1, 0], [0, 1]], "couplings": [[[0.5, 0], [0, 0.5]]]}
    (tmp_path / "osc.json").write_text(json.dumps(osc))
    (tmp_path / "r.json").write_text(json.dumps({"kind": "cascade", "operands": ["osc.json", "osc.json"]}))
    code, out, _ = run(capsys, "synthesize", tmp_path / "r.json")
    assert code == 0 and json.loads(out)["n"] == 2


def test_simulate_transformed_sweep(capsys):
    code, out, _ = run(capsys, "simulate", DATA / "optomech.json", "--transformed",
                       "--noise-scale", 1, "--noise-scale", 10, "--t-end", 5, "--dt", 1e-3)
    assert code == 0
    summary = json.loads(out)
    assert summary["dark_dimension"] == 2
    assert summary["max_dark_mean_deviation"] <= 1e-8
    assert summary["max_dark_covariance_deviation"] <= 1e-8


def test_simulate_closed_system_csv(capsys, tmp_path):
    doc = {"n": 1, "G": [[0, 0], [0, 0]], "couplings": []}
    path = tmp_path / "closed.json"
    path.write_text(json.dumps(doc))
    csv_path = tmp_path / "traj.csv"
    code, _, _ = run(capsys, "simulate", path, "--t-end", 1, "--dt", 0.25, "--csv", csv_path)
    assert code == 0
    rows = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    assert rows.shape == (5, 6)
    np.testing.assert_array_equal(rows[:, 1:], np.tile([1, 1, 0.5, 0, 0.5], (5, 1)))


def test_simulate_zero_step(capsys):
    code, _, err = run(capsys, "simulate", DATA / "optomech.json", "--dt", 0)
    assert code == io.EXIT_INPUT and "dt" in err


def test_simulate_unstable_keeps_partial_csv(capsys, tmp_path):
    doc = {"n": 1, "G": [[1, 0], [0, -1]], "couplings": []}
    path = tmp_path / "inverted.json"
    path.write_text(json.dumps(doc))
    csv_path = tmp_path / "traj.csv"
    code, _, _ = run(capsys, "simulate", path, "--t-end", 100, "--dt", 0.01, "--csv", csv_path)
    assert code == io.EXIT_UNSTABLE
    assert len(csv_path.read_text().splitlines()) > 2


def test_description_round_trip(tmp_path):
    desc = io.load_description(DATA / "optomech.json")
    text = io.write_description(desc)
    again = io.SystemDescription.from_dict(json.loads(text))
    assert io.write_description(again) == text
    for key in desc.summands:
        np.testing.assert_array_equal(again.summands[key], desc.summands[key])
    np.testing.assert_array_equal(again.couplings, desc.couplings)


def test_description_from_system_round_trip(rng):
    sys_ = optomechanical(gamma1=float(rng.uniform(0.5, 2)))
    desc = io.SystemDescription.from_system(sys_)
    back = io.SystemDescription.from_dict(json.loads(io.write_description(desc))).to_system()
    np.testing.assert_array_equal(back.A, sys_.A)
    np.testing.assert_array_equal(back.G_int, sys_.G_int)


def test_description_checks_dimensions():
    doc = {"n": 2, "G": np.eye(4).tolist(), "couplings": [[[1, 0], [0, 1]]]}
    with pytest.raises(io.DescriptionError, match="couplings/0"):
        io.SystemDescription.from_dict(doc)


def test_num_rounds_to_twelve_digits():
    assert io.num(np.float64(1 / 3)) == 0.333333333333
    assert io.num({"a": np.array([2 / 3])}) == {"a": [0.666666666667]}


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "darkmodes", "analyze", str(DATA / "optomech.json")],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "dark-modes-verified" in res.stdout

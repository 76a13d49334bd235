import csv
import io
import json
import shutil
import subprocess
import sys

import pytest

from mortality_riskmin.cli import main

BAD_MODEL = """
version: 1
market: {family: binomial, horizon: 2}
death:
  family: hazard
  hazard: "(1/2 if move_next == 'u' else 1/4) if t < N else 1/4"
claim: {term: 2, survival: "1"}
"""


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_cb1(capsys, scenario_dir):
    code, out, _ = run(capsys, "validate", scenario_dir / "cb1.yaml")
    assert code == 0
    assert out.count("PASS") == 5 and "FAIL" not in out


def test_hedge_cb1_rows(capsys, scenario_dir):
    code, out, err = run(capsys, "hedge", scenario_dir / "cb1.yaml")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    xi = [r for r in rows if r["process"] == "xi" and r["t"] == "1"]
    assert xi == [{"process": "xi", "t": "1", "atom": "root|alive", "value": "0.25", "exact": "1"}]
    assert "R_0 = 1/8 (oracle 1/8)" in err


def test_hedge_json_output(capsys, scenario_dir, tmp_path):
    target = tmp_path / "out.json"
    code, out, _ = run(capsys, "hedge", scenario_dir / "cb1.yaml", "--format", "json",
                       "--out", target, "--emit", "xi,G")
    assert code == 0 and "H_0 = 1/4" in out
    doc = json.loads(target.read_text())
    # the closed form rides along whenever a special case applies
    assert {r["process"] for r in doc["rows"]} == {"xi", "G", "xi[independent]"}
    by_name = {}
    for r in doc["rows"]:
        by_name.setdefault(r["process"], []).append((r["t"], r["atom"], r["value"]))
    assert by_name["xi"] == by_name["xi[independent]"]


def test_represent_and_securitize(capsys, scenario_dir):
    code, out, err = run(capsys, "represent", scenario_dir / "cb1.yaml")
    assert code == 0 and "reconstruction residual = 0" in err
    assert "pure_mortality" in out
    code, out, err = run(capsys, "securitize", scenario_dir / "cb1.yaml", "--instruments", "endowment")
    assert code == 0 and "R_0 = 1/16 (oracle 1/16)" in err


def test_correlated_securitization(capsys, scenario_dir):
    code, _, err = run(capsys, "securitize", scenario_dir / "correlated.yaml")
    assert code == 0 and "R_0 = 119/1152 (oracle 119/1152)" in err


def test_oracle_check(capsys, scenario_dir):
    assert run(capsys, "oracle-check", scenario_dir / "cs1.yaml")[0] == 0
    code, out, _ = run(capsys, "oracle-check", "--random", 2)
    assert code == 0 and "max deviation 0" in out


def test_explicit_round_trip(capsys, scenario_dir, tmp_path):
    target = tmp_path / "explicit.yaml"
    assert run(capsys, "explicit", scenario_dir / "correlated.yaml", "--out", target)[0] == 0
    _, first, _ = run(capsys, "hedge", scenario_dir / "correlated.yaml")
    _, second, _ = run(capsys, "hedge", target)
    assert first == second


def test_model_violation_exit_code(capsys, tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(BAD_MODEL)
    code, _, err = run(capsys, "hedge", path)
    assert code == 1 and "<S, m> vanishes" in err
    code, out, _ = run(capsys, "validate", path)
    assert code == 1 and "FAIL" in out


def test_input_error_exit_code(capsys, tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("version: 1\nmarket: {family: binomial, horizon: 0}\ndeath: {family: independent, probs: []}\n")
    code, _, err = run(capsys, "validate", path)
    assert code == 2 and "input error" in err
    code, _, err = run(capsys, "hedge", tmp_path / "missing.yaml")
    assert code == 2


def test_unknown_emit_name_is_input_error(capsys, scenario_dir):
    code, _, err = run(capsys, "hedge", scenario_dir / "cb1.yaml", "--emit", "nonsense")
    assert code == 2 and "nonsense" in err


@pytest.mark.skipif(shutil.which("mortality-riskmin") is None, reason="console script not installed")
def test_console_script(scenario_dir):
    proc = subprocess.run(["mortality-riskmin", "validate", str(scenario_dir / "cs1.yaml")],
                          capture_output=True, text=True)
    assert proc.returncode == 0


def test_module_entry_point(scenario_dir):
    proc = subprocess.run([sys.executable, "-m", "mortality_riskmin.cli", "validate",
                           str(scenario_dir / "cb1.yaml")], capture_output=True, text=True)
    assert proc.returncode == 0

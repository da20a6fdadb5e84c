import csv
import io
import json
import subprocess
import sys

import pytest

from qsis.bounds import thm32_constants
from qsis.cli import main
from qsis.harness import ExperimentConfig, build_context

from conftest import REF_CONFIG


def test_bounds_csv_row(capsys):
    argv = ["bounds", "--config", str(REF_CONFIG), "--gamma", "0.5", "--zeta", "1.0",
            "--n", "4", "--m", "4"]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "\r\n" in out
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1
    row = rows[0]
    ctx = build_context(ExperimentConfig())
    want = thm32_constants(ctx.bound_inputs, 1.0, 0.5, 4, 4)
    assert set(row) == set(want.to_dict())
    assert float(row["A_tilde"]) == pytest.approx(want.A_tilde, rel=1e-12)
    assert int(row["n"]) == 4 and row["vacuous"] == str(want.vacuous)


def test_bounds_json(capsys):
    assert main(["bounds", "--config", str(REF_CONFIG), "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert "thm32" in data and "p_min" in data["all"]


def test_reconstruct_to_file(tmp_path):
    out = tmp_path / "rep.json"
    assert main(["reconstruct", "--config", str(REF_CONFIG), "--seed", "7", "--trials", "5",
                 "--out", str(out)]) == 0
    rep = json.loads(out.read_text(encoding="utf-8"))
    assert rep["kind"] == "reconstruct" and rep["seed"] == 7 and rep["trials"] == 5
    assert rep["summary"]["injectivity_failures"] == 0
    assert len(rep["outcomes"]) == 5


def test_report_subcommand(tmp_path, capsys):
    out = tmp_path / "rep.json"
    assert main(["sample-ineq", "--config", str(REF_CONFIG), "--variant", "33", "--trials", "4",
                 "--n", "8", "--m", "8", "--out", str(out)]) == 0
    assert main(["report", str(out)]) == 0
    row = next(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert row["kind"] == "sampling-inequality-33" and row["trials"] == "4"
    assert main(["report", str(out), "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["vacuous"] in (True, False)


def test_csv_outcomes(capsys):
    assert main(["verify-lemmas", "--config", str(REF_CONFIG), "--trials", "3",
                 "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["trial"] for r in rows] == ["0", "1", "2"]


def test_montecarlo_uses_config_kind(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(ExperimentConfig(kind="sampling-inequality-32", trials=2, n=8, m=8).to_json())
    assert main(["montecarlo", "--config", str(cfg)]) == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "sampling-inequality-32"


def test_missing_config(capsys):
    assert main(["reconstruct", "--config", "/nonexistent/cfg.json"]) == 1
    assert "/nonexistent/cfg.json" in capsys.readouterr().err


def test_missing_report(capsys):
    assert main(["report", "/nonexistent/rep.json"]) == 1


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    [],
    ["bounds"],
    ["bounds", "--config", str(REF_CONFIG), "--bogus"],
    ["reconstruct", "--config", str(REF_CONFIG), "--trials", "many"],
    ["bounds", "--config", str(REF_CONFIG), "--gamma", "2"],
    ["sample-ineq", "--config", str(REF_CONFIG), "--variant", "33", "--eta", "5"],
    ["reconstruct", "--config", str(REF_CONFIG), "--p", "0.5"],
])
def test_usage_and_validation_errors(argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err


def test_invalid_json_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["bounds", "--config", str(bad)]) == 1


def test_runtime_error_exit_2(tmp_path, capsys):
    out = tmp_path / "missing-dir" / "rep.json"
    assert main(["reconstruct", "--config", str(REF_CONFIG), "--trials", "1", "--out", str(out)]) == 2
    assert "runtime error" in capsys.readouterr().err


def test_help_exits_zero():
    assert main(["--help"]) == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qsis", "bounds", "--config", str(REF_CONFIG)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("zeta,")
    proc = subprocess.run([sys.executable, "-m", "qsis", "nope"], capture_output=True, text=True)
    assert proc.returncode == 1 and "usage" in proc.stderr

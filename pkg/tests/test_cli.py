"""Command-line interface: exit codes, deterministic JSON reports, jet-file
schema validation, and the far-field CSV table."""

from __future__ import annotations

import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from ale_lab import cli, jets

BLOCK0 = [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]


def _write_jet(path, **extra):
    jet = jets.jet2_with_block(np.array(BLOCK0), seed=3)
    payload = {
        "k": 1,
        "lambda": 1.0,
        "H": jet.H.tolist(),
        "H2": jets.random_jet4(0).H2.tolist(),
        "gauge_project": True,
    }
    payload.update(extra)
    path.write_text(json.dumps(payload))
    return path


# --- verify -----------------------------------------------------------------

def test_verify_quadrature_passes(tmp_path, capsys):
    report = tmp_path / "report.json"
    rc = cli.main(["verify", "--suite", "quadrature", "--report", str(report)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "verify: PASS" in out
    payload = json.loads(report.read_text())
    assert payload["schema_version"] == 1
    assert payload["passed"] is True
    assert payload["suites"][0]["suite"] == "quadrature"
    # no timing data may leak into the report
    assert "duration" not in report.read_text()


def test_verify_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["verify", "--suite", "quadrature", "--report", str(a)]) == 0
    assert cli.main(["verify", "--suite", "quadrature", "--report", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_verify_tiny_tolerance_fails(capsys):
    rc = cli.main(["verify", "--suite", "quadrature", "--tol", "1e-14"])
    assert rc == 1
    assert "verify: FAIL" in capsys.readouterr().out


def test_verify_rejects_bad_configuration(capsys):
    assert cli.main(["verify", "--k", "0"]) == 2
    assert "--k" in capsys.readouterr().err
    assert cli.main(["verify", "--lambda", "-1.0"]) == 2
    assert "--lambda" in capsys.readouterr().err


# --- obstruct ---------------------------------------------------------------

def test_obstruct_canonical_jet(tmp_path, capsys):
    jet_path = _write_jet(tmp_path / "jet.json")
    report = tmp_path / "report.json"
    rc = cli.main(["obstruct", "--jet", str(jet_path), "--report", str(report)])
    assert rc == 0
    assert "wall side: on_wall" in capsys.readouterr().out
    payload = json.loads(report.read_text())
    assert payload["schema_version"] == 1
    assert payload["command"] == "obstruct"
    assert payload["mu1"] == pytest.approx(4.0, abs=1e-8)
    assert payload["wall_side"] == "on_wall"
    assert max(abs(v) for v in payload["lambda"]) < 1e-7


def test_obstruct_reports_are_byte_identical(tmp_path):
    jet_path = _write_jet(tmp_path / "jet.json")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["obstruct", "--jet", str(jet_path), "--report", str(a)]) == 0
    assert cli.main(["obstruct", "--jet", str(jet_path), "--report", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_obstruct_rejects_asymmetric_jet(tmp_path, capsys):
    h = np.zeros((4, 4, 4, 4))
    h[0, 1, 2, 3] = 1.0  # breaks the pair symmetry
    jet_path = tmp_path / "jet.json"
    jet_path.write_text(json.dumps({"H": h.tolist()}))
    assert cli.main(["obstruct", "--jet", str(jet_path)]) == 2
    err = capsys.readouterr().err
    assert "schema error" in err and "H:" in err


def test_obstruct_rejects_bad_shape(tmp_path, capsys):
    jet_path = tmp_path / "jet.json"
    jet_path.write_text(json.dumps({"H": [[0.0] * 4] * 4}))
    assert cli.main(["obstruct", "--jet", str(jet_path)]) == 2
    assert "H:" in capsys.readouterr().err


def test_obstruct_rejects_unknown_override(tmp_path, capsys):
    jet_path = _write_jet(tmp_path / "jet.json",
                          constants_override={"volsigma": 1.0})
    assert cli.main(["obstruct", "--jet", str(jet_path)]) == 2
    assert "constants_override.volsigma" in capsys.readouterr().err


def test_obstruct_accepts_explicit_constants(tmp_path):
    # overrides replace the (k, lambda) model constants entirely
    jet_path = _write_jet(
        tmp_path / "jet.json",
        constants_override={"volSigma": 4 * np.pi, "omegaNorm2": 8 * np.pi**2,
                            "intMomega": 8 * np.pi, "mP1": 2.0},
    )
    report = tmp_path / "r.json"
    assert cli.main(["obstruct", "--jet", str(jet_path),
                     "--report", str(report)]) == 0
    payload = json.loads(report.read_text())
    assert payload["mu1"] == pytest.approx(4.0, abs=1e-8)


def test_obstruct_missing_file(tmp_path, capsys):
    assert cli.main(["obstruct", "--jet", str(tmp_path / "nope.json")]) == 2
    assert "schema error" in capsys.readouterr().err


# --- asympt -----------------------------------------------------------------

def test_asympt_csv_table(tmp_path):
    out = tmp_path / "table.csv"
    rc = cli.main(["asympt", "--k", "1", "--lambda", "1.0",
                   "--radii", "8,12", "--out", str(out)])
    assert rc == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == ["r", "metric_deviation", "moment_deviation",
                       "omega_profile_coeff", "metric_exponent",
                       "moment_exponent", "omega_exponent", "flag"]
    assert len(rows) == 3
    radii = [float(row[0]) for row in rows[1:]]
    assert radii == sorted(radii)
    # profile coefficient approaches (k+1)^2 lambda = 4 from the far field
    assert float(rows[-1][3]) == pytest.approx(4.0, rel=0.05)
    assert all(row[7] == "" for row in rows[1:])
    assert float(rows[1][4]) < -3.0  # metric deviation decays


def test_asympt_single_radius_flags_fit(tmp_path):
    out = tmp_path / "table.csv"
    rc = cli.main(["asympt", "--k", "1", "--radii", "10", "--out", str(out)])
    assert rc == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert len(rows) == 2
    assert rows[1][7] == "fit-unstable"
    assert rows[1][4] == rows[1][5] == rows[1][6] == ""


def test_asympt_rejects_bad_radii(capsys):
    assert cli.main(["asympt", "--radii", ","]) == 2
    assert "empty" in capsys.readouterr().err
    assert cli.main(["asympt", "--radii", "10,abc"]) == 2
    capsys.readouterr()
    assert cli.main(["asympt", "--radii", "10,-3"]) == 2
    assert "positive" in capsys.readouterr().err


# --- thread configuration ------------------------------------------------------

def test_configure_threads_sets_backends(monkeypatch):
    monkeypatch.setenv("ALE_LAB_THREADS", "2")
    for var in cli._THREAD_VARS:
        monkeypatch.delenv(var, raising=False)
    cli._configure_threads()
    for var in cli._THREAD_VARS:
        assert os.environ[var] == "2"


def test_configure_threads_noop_without_cap(monkeypatch):
    monkeypatch.delenv("ALE_LAB_THREADS", raising=False)
    monkeypatch.delenv("OMP_NUM_THREADS", raising=False)
    cli._configure_threads()
    assert "OMP_NUM_THREADS" not in os.environ


def test_thread_cap_propagates_in_subprocess():
    code = (
        "import os; "
        "from ale_lab.cli import _configure_threads; "
        "_configure_threads(); "
        "print(os.environ.get('OMP_NUM_THREADS'), "
        "os.environ.get('MKL_NUM_THREADS'))"
    )
    env = dict(os.environ, ALE_LAB_THREADS="3")
    proc = subprocess.run([sys.executable, "-c", code], env=env,
                          capture_output=True, text=True, check=True)
    assert proc.stdout.split() == ["3", "3"]


def test_console_script_end_to_end(tmp_path):
    report = tmp_path / "report.json"
    proc = subprocess.run(
        [sys.executable, "-m", "ale_lab.cli", "verify", "--suite", "quadrature",
         "--report", str(report)],
        env=dict(os.environ, ALE_LAB_THREADS="1"),
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "verify: PASS" in proc.stdout
    assert json.loads(report.read_text())["passed"] is True

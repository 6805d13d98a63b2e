"""CLI smoke tests."""
from __future__ import annotations

import csv
import json
import math
import os
import subprocess
import sys
from pathlib import Path

import pytest

PROJECT_ROOT = Path(__file__).resolve().parents[1]


def run_cli(*args: str, cwd: Path) -> subprocess.CompletedProcess:
    env = os.environ.copy()
    env["PYTHONIOENCODING"] = "utf-8"
    for var in ("WEIGHTLAB_GRID_DEPTH", "WEIGHTLAB_POINTS_PER_LEVEL", "WEIGHTLAB_N_DISC", "WEIGHTLAB_N_PLANE",
                "WEIGHTLAB_PLANE_X_MAX"):
        env.pop(var, None)
    existing = env.get("PYTHONPATH", "")
    env["PYTHONPATH"] = os.pathsep.join(filter(None, [str(PROJECT_ROOT), existing]))
    return subprocess.run([sys.executable, "-m", "weightlab", *args], capture_output=True, text=True,
                          encoding="utf-8", env=env, cwd=cwd)


def test_analyze_json(tmp_path: Path):
    completed = run_cli("analyze", "power_disc(2)@disc", "--json", "--quiet", cwd=tmp_path)
    assert completed.returncode == 0, completed.stderr
    payload = json.loads(completed.stdout)
    assert payload["schema_version"] == "1.0"
    assert payload["command"] == "analyze"
    assert "LogConvex" in payload["classes"]["classes"]
    assert payload["classes"]["regular_limit"] == pytest.approx(2.0)
    ids = [c["condition_id"] for c in payload["conditions"]]
    assert ids[:6] == [f"disc_d.{k}" for k in ("i", "ii", "iii", "iv", "v", "vi")]
    assert [v["verdict"] for v in payload["verdicts"]] == ["bounded", "bounded", "bounded"]
    assert payload["exit_code"] == 0


def test_verdict_exit_codes(tmp_path: Path):
    unbounded = run_cli("verdict", "D", "exp_inv_disc(1,1)@disc", "auto:v-over-1-minus-r", "--json", "--quiet",
                        cwd=tmp_path)
    assert unbounded.returncode == 1, unbounded.stderr
    assert json.loads(unbounded.stdout)["verdict"]["verdict"] == "unbounded"

    bounded = run_cli("verdict", "I", "power_disc(1)@disc", "same", "--json", "--quiet", cwd=tmp_path)
    assert bounded.returncode == 0, bounded.stderr
    verdict = json.loads(bounded.stdout)["verdict"]
    assert verdict["justification_id"] == "universal_disc_i"


def test_bounded_d_reports_upper_bound(tmp_path: Path):
    completed = run_cli("verdict", "D", "power_disc(1)@disc", "auto:v-over-1-minus-r", "--json", "--quiet",
                        cwd=tmp_path)
    assert completed.returncode == 0, completed.stderr
    verdict = json.loads(completed.stdout)["verdict"]
    assert verdict["upper_bound_if_bounded"] == pytest.approx(4.0, rel=1e-6)


def test_norms_json(tmp_path: Path):
    completed = run_cli("norms", "exp_plane(1)@plane", "--N", "20", "--op", "D", "--json", "--quiet", cwd=tmp_path)
    assert completed.returncode == 0, completed.stderr
    payload = json.loads(completed.stdout)
    A = payload["norms"]["A"]
    assert len(A) == 21
    assert A[5] == pytest.approx(5 * math.log(5) - 5, abs=1e-6)
    assert payload["ratios"]["values"][0] == "nan"
    assert payload["traces"] == ["norms", "ratios"]


def test_invalid_weight_exits_with_error(tmp_path: Path):
    completed = run_cli("analyze", "nosuch(1)@disc", "--json", cwd=tmp_path)
    assert completed.returncode == 3
    payload = json.loads(completed.stdout)
    assert payload["error"]["error_type"] == "UnknownFamily"
    assert "UnknownFamily" in completed.stderr


def test_usage_error_exits_with_error(tmp_path: Path):
    completed = run_cli("verdict", "D", cwd=tmp_path)
    assert completed.returncode == 3
    assert completed.stdout == ""


def test_output_is_deterministic(tmp_path: Path):
    first = run_cli("analyze", "exp_plane(1)@plane", "--json", "--quiet", cwd=tmp_path)
    second = run_cli("analyze", "exp_plane(1)@plane", "--json", "--quiet", cwd=tmp_path)
    assert first.returncode == 0, first.stderr
    assert first.stdout == second.stdout


def test_out_writes_report_and_traces(tmp_path: Path):
    out = tmp_path / "results"
    completed = run_cli("analyze", "power_disc(1)@disc", "--out", str(out), "--quiet", cwd=tmp_path)
    assert completed.returncode == 0, completed.stderr
    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    for name in report["traces"]:
        assert (out / f"{name}.csv").exists()

    with open(out / "disc_d.i.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["x", "value"]
    assert all(float(value) == pytest.approx(1.0, rel=1e-9) for _, value in rows[1:])
    # tables go to stdout when --json is off
    assert "WEIGHT ANALYSIS" in completed.stdout

"""CLI integration: exit codes, report files, determinism."""

import json
import subprocess
import sys

import numpy as np
import pytest

from schmlab import cli
from schmlab.channels import completely_depolarizing, identity_channel
from schmlab.errors import NumericError
from schmlab.io import save_channel, save_state
from schmlab.states import maximally_entangled


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "schmlab", *map(str, args)],
        capture_output=True, text=True, cwd=cwd,
    )


def canonical_report(path):
    doc = json.loads(path.read_text())
    doc.pop("timing_ms", None)
    return json.dumps(doc, sort_keys=True)


def test_analyze_maxent_state(tmp_path):
    fixture = tmp_path / "maxent3.json"
    save_state(maximally_entangled(3), fixture)
    report = tmp_path / "report.json"
    proc = run_cli("analyze-state", fixture, "--effort", "quick",
                   "--seed", 7, "--json", report)
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(report.read_text())
    assert doc["certificate"]["lower"] == 3
    assert doc["certificate"]["upper"] == 3
    assert "timing_ms" in doc


def test_analyze_product_fixture(tmp_path):
    fixture = tmp_path / "product.json"
    amp = np.zeros(9, dtype=complex)
    amp[0] = 1.0
    from schmlab.linalg import BipartiteDims
    from schmlab.states import PureState

    save_state(PureState(amp, BipartiteDims(3, 3)), fixture)
    report = tmp_path / "report.json"
    proc = run_cli("analyze-state", fixture, "--effort", "quick", "--json", report)
    assert proc.returncode == 0
    doc = json.loads(report.read_text())
    assert (doc["certificate"]["lower"], doc["certificate"]["upper"]) == (1, 1)


def test_analyze_non_psd_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    matrix = np.diag([1.5, -0.5, 0.0, 0.0])
    bad.write_text(json.dumps({
        "dimA": 2, "dimB": 2, "kind": "mixed",
        "data": [[float(v), 0.0] for v in matrix.reshape(-1)],
    }))
    proc = run_cli("analyze-state", bad)
    assert proc.returncode == 2
    assert "error" in proc.stderr


def test_analyze_channel(tmp_path):
    for channel, expected in ((completely_depolarizing(2), (1, 1)),
                              (identity_channel(3), (3, 3))):
        path = tmp_path / "channel.json"
        save_channel(channel, path)
        report = tmp_path / "report.json"
        proc = run_cli("analyze-channel", path, "--effort", "quick",
                       "--json", report)
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(report.text if hasattr(report, "text") else report.read_text())
        cert = doc["certificate"]
        assert (cert["k_peb_lower"], cert["k_peb_upper"]) == expected
    assert "entanglement breaking" not in proc.stdout or expected == (1, 1)


def test_analyze_channel_bad_kraus_exits_2(tmp_path):
    path = tmp_path / "notp.json"
    path.write_text(json.dumps({
        "dim_in": 2, "dim_out": 2,
        "kraus": [[[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]],
    }))
    proc = run_cli("analyze-channel", path)
    assert proc.returncode == 2


def test_numeric_error_exits_3(tmp_path, monkeypatch):
    # The numeric-failure path needs a pathological decomposition, so
    # exercise the dispatch mapping in-process.
    fixture = tmp_path / "maxent.json"
    save_state(maximally_entangled(2), fixture)

    def boom(*args, **kwargs):
        raise NumericError("synthetic non-convergence", residual=1.0)

    monkeypatch.setattr(cli.schmidt, "certify", boom)
    assert cli.main(["analyze-state", str(fixture)]) == 3


def test_build_snk_round_trip(tmp_path):
    out = tmp_path / "snk.json"
    proc = run_cli("build", "snk", "--k", 2, "--m", 2, "--n", 16,
                   "--grid", 8, "--out", out)
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(out.read_text())
    assert doc["provenance"]["recipe"] == "snk"
    report = tmp_path / "report.json"
    proc = run_cli("analyze-state", out, "--effort", "quick", "--json", report)
    assert proc.returncode == 0


def test_build_isotropic_maxent_fixture(tmp_path):
    out = tmp_path / "iso.json"
    proc = run_cli("build", "isotropic", "--d", 3, "--fidelity", 1.0, "--out", out)
    assert proc.returncode == 0
    report = tmp_path / "report.json"
    proc = run_cli("analyze-state", out, "--effort", "quick", "--json", report)
    doc = json.loads(report.read_text())
    assert (doc["certificate"]["lower"], doc["certificate"]["upper"]) == (3, 3)


def test_build_rotation_separable(tmp_path):
    out = tmp_path / "rot.json"
    proc = run_cli("build", "rotation", "--m", 3, "--grid", 16, "--out", out)
    assert proc.returncode == 0
    proc = run_cli("analyze-state", "--recipe", "rotation", "--m", 3,
                   "--grid", 16, "--effort", "quick",
                   "--json", tmp_path / "r.json")
    assert proc.returncode == 0
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["certificate"]["lower"] == 1


def test_build_bad_parameters_exit_2(tmp_path):
    proc = run_cli("build", "isotropic", "--d", 3, "--fidelity", 1.5,
                   "--out", tmp_path / "x.json")
    assert proc.returncode == 2


def test_sweep_rotation(tmp_path):
    report = tmp_path / "sweep.json"
    proc = run_cli("sweep", "rotation", "--m", 2, "--grids", "4,8",
                   "--effort", "quick", "--json", report)
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(report.read_text())
    assert [row["grid"] for row in doc["rows"]] == [4, 8]


def test_sweep_isotropic_steps(tmp_path):
    report = tmp_path / "iso_sweep.json"
    proc = run_cli("sweep", "isotropic", "--d", 3, "--f-min", 0.0,
                   "--f-max", 1.0, "--f-step", 0.25, "--json", report)
    assert proc.returncode == 0
    doc = json.loads(report.read_text())
    lowers = [row["sn_lower"] for row in doc["rows"]]
    assert lowers == sorted(lowers)
    assert lowers[0] == 1 and lowers[-1] == 3


def test_sweep_empty_range(tmp_path):
    report = tmp_path / "empty.json"
    proc = run_cli("sweep", "isotropic", "--f-min", 0.9, "--f-max", 0.1,
                   "--json", report)
    assert proc.returncode == 0
    assert json.loads(report.read_text())["rows"] == []


def test_report_determinism(tmp_path):
    fixture = tmp_path / "maxent.json"
    save_state(maximally_entangled(2), fixture)
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    for out in (first, second):
        proc = run_cli("analyze-state", fixture, "--seed", 11,
                       "--effort", "quick", "--json", out)
        assert proc.returncode == 0
    assert canonical_report(first) == canonical_report(second)

"""End-to-end tests of the command line front end."""

import json
import os

import numpy as np
import pytest

from rotbec import ConfigurationError, load_snapshot
from rotbec.cli import main, parse_potential

W0 = 2.2062008639402615
A_STAR = 11.700896524869531


def _read_csv(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    cols = lines[0].split(",")
    return [dict(zip(cols, ln.split(","))) for ln in lines[1:]]


def test_parse_potential_forms():
    assert parse_potential("harmonic").tag() == "power:2"
    assert parse_potential("power:4").tag() == "power:4"
    assert parse_potential("quartic_quadratic:k=1,q=4").tag() == \
        parse_potential("qq:k=1,q=4").tag()
    assert "shifted_harmonic" in parse_potential(
        "shifted:bx=0.3,by=-0.2").tag()
    for bad in ("bogus", "bogus:1", "power:", "qq:k=1", "qq:k=x,q=4"):
        with pytest.raises(ConfigurationError):
            parse_potential(bad)


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_townes_command(tmp_path, capsys):
    out = tmp_path / "tw"
    export = tmp_path / "profile.tsv"
    rc = main(["townes", "--out", str(out), "--export", str(export)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "w0" in text and "a_star" in text
    manifest = json.loads((out / "manifest.json").read_text())
    tw = manifest["townes"]
    assert tw["w0"] == pytest.approx(W0, rel=1e-9)
    assert tw["a_star"] == pytest.approx(A_STAR, rel=1e-9)
    assert tw["quadrature_agreement"] < 1e-6
    data = np.loadtxt(export)
    assert data.ndim == 2
    assert data[0, 1] == pytest.approx(W0, rel=1e-9)


def test_minimize_command_writes_everything(tmp_path):
    out = tmp_path / "min"
    rc = main(["minimize", "--a", "0", "--omega", "0", "--n", "128",
               "--L", "12", "--seed", "1", "--out", str(out), "--plots"])
    assert rc == 0
    rows = _read_csv(out / "result.csv")
    assert len(rows) == 1
    row = rows[0]
    assert row["converged"] == "true"
    assert float(row["total"]) == pytest.approx(2.0, abs=1e-5)
    assert float(row["eps_a"]) == pytest.approx(1.0, rel=1e-2)
    f, a, omega, spec = load_snapshot(str(out / "field.rbec"))
    assert a == 0.0 and omega == 0.0
    assert spec.tag() == "power:2"
    assert f.mass == pytest.approx(1.0, abs=1e-9)
    meta = json.loads((out / "result.json").read_text())
    assert meta["row"]["converged"] is True or meta["row"]["converged"] == \
        "true" or meta["row"]["converged"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["grid"]["n"] == 128
    assert manifest["derived"]["lambda"] == pytest.approx(13.89486 ** 0.25,
                                                          rel=1e-3)
    assert (out / "field.png").exists()
    assert (out / "history.png").exists()


def test_minimize_refuses_supercritical(tmp_path, capsys):
    rc = main(["minimize", "--a-over-astar", "1.05", "--omega", "1",
               "--n", "128", "--out", str(tmp_path / "x")])
    assert rc == 2
    assert "critical" in capsys.readouterr().err


def test_minimize_nonconverged_exit_code(tmp_path):
    out = tmp_path / "partial"
    rc = main(["minimize", "--a", "0", "--n", "128", "--L", "12",
               "--max-steps", "30", "--out", str(out), "--no-plots"])
    assert rc == 3
    assert _read_csv(out / "result.csv")[0]["converged"] == "false"


def test_flag_conflicts_and_bad_inputs(tmp_path):
    out = str(tmp_path / "o")
    assert main(["minimize", "--a", "1", "--a-over-astar", "0.5",
                 "--out", out]) == 2
    assert main(["minimize", "--out", out]) == 2
    assert main(["minimize", "--a", "1", "--seed", "-3", "--out", out]) == 2
    assert main(["minimize", "--a", "1", "--potential", "bogus",
                 "--out", out]) == 2
    assert main(["spectrum", "--pairs", "M:0", "--out", out]) == 2


def test_unknown_config_section(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("grids:\n  n: 128\n")
    assert main(["townes", "--config", str(cfg),
                 "--out", str(tmp_path / "t")]) == 2


def test_sweep_resume_and_analyze(tmp_path, capsys):
    out = tmp_path / "sw"
    args = ["sweep", "--a-over-astar", "0.3,0.5", "--omega", "1.0",
            "--n", "128", "--L", "12", "--seed", "3", "--no-multistart",
            "--no-plots", "--out", str(out)]
    assert main(args) == 0
    first = (out / "sweep.csv").read_bytes()
    rows = _read_csv(out / "sweep.csv")
    assert len(rows) == 2
    assert all(r["converged"] == "true" for r in rows)
    assert float(rows[0]["a"]) < float(rows[1]["a"])
    capsys.readouterr()

    # a second run resumes from the stored snapshots and reproduces the
    # CSV byte for byte
    assert main(args) == 0
    assert "resumed" in capsys.readouterr().out
    assert (out / "sweep.csv").read_bytes() == first

    rep = tmp_path / "rep"
    assert main(["analyze", "--sweep-dir", str(out), "--out", str(rep),
                 "--no-plots"]) == 0
    report = (rep / "report.txt").read_text()
    assert "analysis report" in report
    assert "scaling fits skipped" in report  # only two points
    assert (rep / "report_mu.csv").exists()
    assert (rep / "report_drift.csv").exists()
    assert (rep / "report_profile.csv").exists()
    prof = _read_csv(rep / "report_profile.csv")
    assert all(r["windings"] == "0" for r in prof)

    # figure rendering on the report path
    rep2 = tmp_path / "rep2"
    assert main(["analyze", "--sweep-dir", str(out), "--out", str(rep2),
                 "--plots"]) == 0
    assert (rep2 / "profiles.png").exists()
    assert (rep2 / "field_final.png").exists()


def test_analyze_needs_sweep_dir(tmp_path):
    assert main(["analyze", "--sweep-dir", str(tmp_path / "nope"),
                 "--out", str(tmp_path / "r")]) == 2


def test_trial_scan_supercritical_gate(tmp_path):
    out = tmp_path / "ts"
    base = ["trial-scan", "--a-over-astar", "1.1", "--omega", "1",
            "--out", str(out)]
    assert main(base) == 2
    assert main(base + ["--unsafe-nonexistence-scan"]) == 0
    rows = _read_csv(out / "trial_scan.csv")
    assert len(rows) == 16
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["derived"]["slope"] < 0.0
    assert manifest["config"]["problem"]["unsafe_nonexistence_scan"] is True
    # trial-scan is a report command: the figure renders by default
    assert (out / "trial_scan.png").exists()


def test_config_precedence_flag_over_file(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(
        "problem:\n  a_over_astar: 0.5\n  omega: 1.0\n"
        "trial:\n  tau_max: 10.0\n  tau_count: 5\n")
    out1 = tmp_path / "t1"
    assert main(["trial-scan", "--config", str(cfg), "--out", str(out1),
                 "--no-plots"]) == 0
    assert len(_read_csv(out1 / "trial_scan.csv")) == 5
    out2 = tmp_path / "t2"
    assert main(["trial-scan", "--config", str(cfg), "--tau-count", "7",
                 "--out", str(out2), "--no-plots"]) == 0
    assert len(_read_csv(out2 / "trial_scan.csv")) == 7


def test_spectrum_command(tmp_path, capsys):
    out = tmp_path / "sp"
    rc = main(["spectrum", "--count", "2", "--out", str(out)])
    assert rc == 0
    data = json.loads((out / "spectrum.json").read_text())
    entries = {(e["operator"], e["sector"]): e for e in data["entries"]}
    assert set(entries) == {("L", 0), ("L_hat", 1), ("L_hat", 0)}
    assert abs(entries[("L", 0)]["lowest_eigs"][0]) < 1e-3
    assert entries[("L", 0)]["kernel_cosine"] > 0.9999
    assert abs(entries[("L_hat", 1)]["lowest_eigs"][0]) < 1e-3
    assert entries[("L_hat", 0)]["lowest_eigs"][0] <= -3.9
    assert entries[("L_hat", 0)]["kernel_cosine"] is None
    for e in data["entries"]:
        assert len(e["lowest_eigs"]) == 2
        assert all(r < 1e-6 for r in e["residuals"])
    assert "L_hat" in capsys.readouterr().out

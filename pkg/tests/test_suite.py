"""Suite runner, config parsing, determinism, emitters, CLI."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from kkfields.suite import (
    ConfigError,
    emit,
    emit_csv,
    emit_json,
    load_config,
    parse_field,
    parse_manifold,
    parse_metric,
    run_suite,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def test_parse_manifold_errors():
    with pytest.raises(ConfigError, match="kind"):
        parse_manifold({})
    with pytest.raises(ConfigError, match="unknown manifold kind"):
        parse_manifold({"kind": "klein_bottle"})
    m = parse_manifold({"kind": "sphere", "dim": 4})
    assert m.dim == 4


def test_parse_field_errors():
    with pytest.raises(ConfigError, match="missing required key 'a'"):
        parse_field({"kind": "conformal"})
    with pytest.raises(ConfigError, match="field.inner"):
        parse_field({"kind": "normalized", "inner": {"kind": "bogus"}})
    f = parse_field({"kind": "scaled", "factor": 2.0,
                     "inner": {"kind": "killing", "thetas": [1.0], "ambient_dim": 3}})
    assert f.factor == 2.0


def test_parse_metric_forms():
    spec = parse_metric({"preset": "g_mr", "m": 2, "r": 0})
    assert abs(spec.B.value(1.0) - 0.25) < 1e-15
    spec = parse_metric({"B": {"form": "exp", "rate": -1.0}, "C": 0.1, "t_max": 3.0})
    assert spec.t_max == 3.0
    spec = parse_metric({"closed_form": {"family": "killing_even", "p": 2, "k": 0, "lam": 1.0}})
    assert abs(spec.B.value(1.0) - np.exp(-1.5)) < 1e-15
    with pytest.raises(ConfigError, match="obstructed"):
        parse_metric({"closed_form": {"family": "quadratic", "n": 3, "mu": 1.0}})
    with pytest.raises(ConfigError, match="need one of"):
        parse_metric({})


def test_load_config_diagnostics(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(p)
    p.write_text(json.dumps({"cases": [{"id": "a", "check": "nope"}]}))
    with pytest.raises(ConfigError, match="unknown check"):
        load_config(p)
    p.write_text(json.dumps({"cases": [{"id": "a", "check": "yano"},
                                       {"id": "a", "check": "yano"}]}))
    with pytest.raises(ConfigError, match="duplicate"):
        load_config(p)


def test_empty_case_list_gives_empty_passing_report(tmp_path):
    report = run_suite({"seed": 1, "cases": []})
    assert report.all_passed
    assert report.cases == []
    files = emit(report, tmp_path)
    assert (tmp_path / "report.json").exists()
    assert (tmp_path / "report.csv").exists()
    assert len(files) == 2


def test_run_suite_records_failures_without_aborting():
    cfg = {
        "seed": 7,
        "cases": [
            {"id": "bad_point_count", "check": "tension_residuals",
             "params": {"manifold": {"kind": "sphere", "dim": 3},
                        "field": {"kind": "killing", "thetas": [1.0, 1.0], "ambient_dim": 4},
                        "metric": {"B": {"form": "exp", "rate": -1.0}},
                        "samples": 5},
             "expect": "harmonic map"},
            {"id": "expected_mismatch", "check": "obstruction",
             "params": {"case": "killing_even_unequal",
                        "params": {"thetas": [1.0, 1.0], "k": 0}},
             "expect": "obstructed"},
        ],
    }
    report = run_suite(cfg)
    assert len(report.cases) == 2
    by_id = {c.case_id: c for c in report.cases}
    assert by_id["bad_point_count"].passed
    # equal speeds are feasible, so the expectation fails but the suite ran on
    assert not by_id["expected_mismatch"].passed
    assert by_id["expected_mismatch"].verdict == "feasible"
    assert not report.all_passed


def test_determinism_byte_identical(tmp_path):
    cfg = load_config(CONFIG_DIR / "smoke.json")
    rep1 = run_suite(cfg, modes=("verify", "scan"))
    rep2 = run_suite(cfg, modes=("verify", "scan"))
    assert emit_json(rep1) == emit_json(rep2)
    assert emit_csv(rep1) == emit_csv(rep2)
    # a different seed changes the sampled metrics
    rep3 = run_suite(cfg, seed=999, modes=("verify", "scan"))
    assert emit_json(rep3) != emit_json(rep1)


def test_seventeen_digit_float_serialization():
    report = run_suite({"seed": 3, "cases": [
        {"id": "k", "check": "constant_norm",
         "params": {"conditions": [{"B": {"form": "exp", "rate": -1.0}, "k": 1.0}]},
         "expect": "pass"},
    ]})
    text = emit_json(report)
    data = json.loads(text)
    case = data["cases"][0]
    assert case["passed"] is True
    # metrics are parseable floats with full precision
    assert abs(case["metrics"]["tol"] - 1e-12) < 1e-30
    csv_text = emit_csv(report)
    assert csv_text.splitlines()[0] == "case_id,check,mode,expected,verdict,passed,metrics"


def test_mode_filtering():
    cfg = load_config(CONFIG_DIR / "smoke.json")
    verify_only = run_suite(cfg, modes=("verify",))
    assert {c.mode for c in verify_only.cases} == {"verify"}
    scan_only = run_suite(cfg, modes=("scan",))
    assert {c.check for c in scan_only.cases} == {"obstruction"}


def test_default_config_covers_acceptance_criteria():
    cfg = load_config(CONFIG_DIR / "default.json")
    ids = {c["id"] for c in cfg["cases"]}
    # one config case (at least) per acceptance criterion
    for marker in ("c01", "c02", "c03a", "c03b", "c04", "c05a", "c05b", "c05c",
                   "c05d", "c06a", "c06b", "c06c", "c07a", "c07b", "c08a",
                   "c08b", "c09a", "c09b", "c10", "c11", "c12a", "c12b"):
        assert any(i.startswith(marker) for i in ids), f"missing {marker}"


def test_cli_verify_smoke(tmp_path):
    out = tmp_path / "run"
    proc = subprocess.run(
        [sys.executable, "-m", "kkfields.cli", "verify", str(CONFIG_DIR / "smoke.json"),
         "--out", str(out), "--no-plots"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (out / "report.json").exists()
    assert (out / "report.csv").exists()
    assert "smoke_hopf: harmonic map" in proc.stdout

    # byte-identical reruns
    out2 = tmp_path / "run2"
    subprocess.run(
        [sys.executable, "-m", "kkfields.cli", "verify", str(CONFIG_DIR / "smoke.json"),
         "--out", str(out2), "--no-plots"],
        capture_output=True, text=True)
    assert (out / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
    assert (out / "report.csv").read_bytes() == (out2 / "report.csv").read_bytes()


def test_cli_flow_and_report(tmp_path):
    out = tmp_path / "flowrun"
    proc = subprocess.run(
        [sys.executable, "-m", "kkfields.cli", "flow", str(CONFIG_DIR / "smoke.json"),
         "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    histories = list(out.glob("smoke_flow_*_history.csv"))
    assert histories, "flow history CSV missing"
    head = histories[0].read_text().splitlines()[0]
    assert head == "iteration,energy,residual"
    figures = list(out.glob("*.png"))
    assert figures, "figures missing from the report path"

    proc = subprocess.run(
        [sys.executable, "-m", "kkfields.cli", "report", str(out), "--format", "csv"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("case_id,")


def test_cli_bad_config_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"cases": [{"id": "x", "check": "bogus"}]}))
    proc = subprocess.run(
        [sys.executable, "-m", "kkfields.cli", "verify", str(bad)],
        capture_output=True, text=True)
    assert proc.returncode == 2
    assert "unknown check" in proc.stderr


def test_cli_expectation_mismatch_exit_code(tmp_path):
    cfg = {
        "seed": 5,
        "cases": [{"id": "wrong", "mode": "scan", "check": "obstruction",
                   "params": {"case": "killing_even_unequal",
                              "params": {"thetas": [1.0, 1.0], "k": 0}},
                   "expect": "obstructed"}],
    }
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    proc = subprocess.run(
        [sys.executable, "-m", "kkfields.cli", "scan", str(p), "--out",
         str(tmp_path / "o"), "--no-plots"],
        capture_output=True, text=True)
    assert proc.returncode == 1

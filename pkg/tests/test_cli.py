import csv
import json

import pytest

from oosrisk import cli, risk_exact
from oosrisk.cli import FIGURE1_COLUMNS, PHASE_COLUMNS, load_config, main

SMALL_FIG = ["--n", "40", "--p", "20", "--snr_points", "9"]
SMALL_PHASE = ["--phase_points", "6"]


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, (out.read_bytes() if out.exists() else None)


def test_figure1_csv(tmp_path):
    code, data = run(tmp_path, "figure1", *SMALL_FIG)
    assert code == 0
    rows = list(csv.DictReader(data.decode().splitlines()))
    assert data.decode().splitlines()[0].split(",") == FIGURE1_COLUMNS
    assert b"\r\n" not in data
    assert len(rows) == 9 * len(cli.default_eigen_indices(20))
    assert {r["curve_id"] for r in rows} == {f"w{i}" for i in cli.default_eigen_indices(20)}


def test_phase_csv(tmp_path):
    code, data = run(tmp_path, "phase", *SMALL_PHASE)
    assert code == 0
    lines = data.decode().splitlines()
    assert lines[0].split(",") == PHASE_COLUMNS
    assert len(lines) == 1 + 36


def test_global_flags_before_subcommand(tmp_path):
    out = tmp_path / "a.csv"
    assert main(["--seed", "5", "--out", str(out), "phase", *SMALL_PHASE]) == 0
    assert out.exists()


def test_config_file_and_override(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"n": 50, "p": 10, "seed": 3}))
    cfg = load_config(str(path), {"p": 12})
    assert (cfg.n, cfg.p, cfg.seed) == (50, 12, 3)
    code, data = run(tmp_path, "risk", "--config", str(path), "--p", "12")
    assert code == 0
    assert json.loads(data)["regime"]["p"] == 12


@pytest.mark.parametrize("args", [
    ["risk", "--n", "5", "--p", "10"],
    ["risk", "--c", "-1"],
    ["risk", "--sigma", "banded"],
    ["phase", "--t_max", "1.0"],
    ["nonsense"],
    ["risk", "--bogus", "1"],
])
def test_config_errors_exit_2(tmp_path, args):
    assert main([*args, "--out", str(tmp_path / "x")]) == 2


def test_unknown_config_key(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"nn": 3}))
    assert main(["risk", "--config", str(path)]) == 2
    assert main(["risk", "--config", str(tmp_path / "missing.json")]) == 2


def test_missing_output_directory():
    assert main(["phase", "--out", "/nonexistent/dir/x.csv"]) == 2


def test_degenerate_design_exit_3(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise cli.DegenerateDesignError("forced")
    monkeypatch.setattr(cli, "sample_design", boom)
    assert main(["risk", "--out", str(tmp_path / "r.json")]) == 3


def test_risk_ml_case(tmp_path):
    code, data = run(tmp_path, "risk", "--n", "50", "--p", "10", "--c", "0")
    doc = json.loads(data)
    assert code == 0
    assert doc["report"]["rel_oos"] == 1.0
    assert doc["report"]["rho1_ml"] == pytest.approx(0.2)
    assert doc["report"]["rho1_c"] == pytest.approx(0.2)


def test_risk_verify_passes(tmp_path):
    code, data = run(tmp_path, "risk", "--n", "40", "--p", "8", "--snr", "2", "--verify", "true",
                     "--reps", "20000")
    assert code == 0
    assert all(ch["pass"] for ch in json.loads(data)["verification"].values())


def test_risk_along_eigenvector(tmp_path):
    code, data = run(tmp_path, "risk", "--n", "40", "--p", "8", "--snr", "3", "--beta_index", "1")
    assert code == 0
    assert json.loads(data)["report"]["snr"] == pytest.approx(3.0)


def test_rmt_check(tmp_path):
    code, data = run(tmp_path, "rmt-check", "--rmt_n", "800")
    doc = json.loads(data)
    assert code == 0 and doc["pass"]
    assert {ch["check"] for ch in doc["checks"]} >= {"lemma_b1", "inv_sum", "lam_min", "mp_kolmogorov"}


def test_verify_passes_and_detects_fault(tmp_path, monkeypatch):
    code, data = run(tmp_path, "verify", "--reps", "10000")
    assert code == 0 and json.loads(data)["failed"] == 0
    monkeypatch.setattr(risk_exact, "_CROSS_TERM_SIGN", -1.0)
    code, data = run(tmp_path, "verify", "--reps", "10000", name="bad")
    doc = json.loads(data)
    assert code == 1 and doc["failed"] > 0


def test_byte_determinism(tmp_path):
    a = run(tmp_path, "figure1", *SMALL_FIG, name="a")[1]
    b = run(tmp_path, "figure1", *SMALL_FIG, "--threads", "3", name="b")[1]
    c = run(tmp_path, "figure1", *SMALL_FIG, "--seed", "9", name="c")[1]
    assert a == b and a != c


def test_fmt_roundtrip():
    x = 0.1 + 0.2
    assert float(cli.fmt(x)) == x
    assert cli.fmt(None) == "" and cli.fmt(True) == "true" and cli.fmt(3) == "3"

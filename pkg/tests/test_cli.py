"""Command-line contract: parsing, precedence, schemas, determinism, exit codes."""

import json
import subprocess
import sys

import numpy as np
import pytest

from ssde import RngStream, SchemeConfig, derive, simulate_z_absorbed
from ssde.cli import main, parse_args


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_parse_defaults():
    cfg = parse_args(["simulate"])
    assert cfg.command == "simulate"
    assert cfg.alpha == 1.5 and cfg.beta == 0.5 and cfg.theta == "0.5"
    assert cfg.horizon == 1.0 and cfg.grid_step == 1e-3
    assert cfg.cutoff is None and cfg.n == 10000 and cfg.workers == 1
    assert cfg.format == "csv" and cfg.sample_every == 1
    assert cfg.refinement is False
    ext = parse_args(["extinction"])
    assert ext.horizon == 50.0 and ext.theta == "0,0.3,0.6,1.2"
    assert ext.refinement is True
    assert parse_args(["classify"]).format == "json"


def test_parse_config_file_and_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# comment line\nalpha = 1.2\ntheta = 0.7  # trailing comment\ngrid-step = 0.01\nseed = 99\n",
        encoding="utf-8",
    )
    cfg = parse_args(["classify", "--config", str(path)])
    assert cfg.alpha == 1.2 and cfg.theta == "0.7" and cfg.grid_step == 0.01 and cfg.seed == 99
    # explicit flags win over the file
    over = parse_args(["classify", "--config", str(path), "--alpha", "1.8", "--seed", "3"])
    assert over.alpha == 1.8 and over.seed == 3 and over.theta == "0.7"


def test_config_file_rejects_unknown_key(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("bogus = 1\n", encoding="utf-8")
    code, _, err = run_cli(["classify", "--config", str(path)], capsys)
    assert code == 1
    assert "bogus" in err


def test_seed_env_fallback(monkeypatch):
    monkeypatch.setenv("SSDE_SEED", "1234")
    assert parse_args(["simulate"]).seed == 1234
    assert parse_args(["simulate", "--seed", "7"]).seed == 7
    monkeypatch.delenv("SSDE_SEED")
    assert parse_args(["simulate"]).seed == 0


def test_classify_json_schema(capsys):
    code, out, _ = run_cli(["classify", "--alpha", "1.5", "--beta", "0.5", "--theta", "0.5"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {
        "alpha",
        "beta",
        "theta",
        "eta",
        "gamma",
        "threshold_low",
        "threshold_high",
        "regime",
        "boundary_flags",
    }
    assert doc["regime"] == "NonUniqueWithClassS"
    assert doc["eta"] == 0.25
    # serialized floats round-trip
    assert doc["threshold_low"] == pytest.approx(0.3379891200336424, rel=1e-15)
    assert not any(line != line.rstrip() for line in out.splitlines())
    assert out.endswith("\n") and not out.endswith("\n\n")


def test_simulate_csv_schema(capsys):
    code, out, _ = run_cli(
        ["simulate", "--horizon", "0.05", "--cutoff", "0.02", "--seed", "4"], capsys
    )
    assert code == 0
    lines = out.split("\n")
    assert lines[0] == "t,value"
    assert lines[-1] == ""  # single trailing LF
    rows = [line.split(",") for line in lines[1:-1]]
    times = np.array([float(r[0]) for r in rows])
    values = np.array([float(r[1]) for r in rows])
    assert times[0] == 0.0 and np.all(np.diff(times) > 0)
    assert np.all(values >= 0.0)
    # 17 significant digits: text representation round-trips exactly
    path = simulate_z_absorbed(
        derive(1.5, 0.5, 0.5),
        1.0,
        SchemeConfig(grid_step=1e-3, jump_cutoff=0.02, horizon=0.05),
        RngStream(seed=4, stream_id=0),
    )
    assert np.array_equal(values, path.values)


def test_sample_every_keeps_jump_times(capsys):
    args = ["simulate", "--horizon", "0.3", "--cutoff", "0.05", "--seed", "12"]
    code, full_out, _ = run_cli(args, capsys)
    assert code == 0
    code, thin_out, _ = run_cli(args + ["--sample-every", "40"], capsys)
    assert code == 0
    thin_times = {line.split(",")[0] for line in thin_out.split("\n")[1:-1]}
    assert len(thin_times) < len(full_out.split("\n")) - 2
    path = simulate_z_absorbed(
        derive(1.5, 0.5, 0.5),
        1.0,
        SchemeConfig(grid_step=1e-3, jump_cutoff=0.05, horizon=0.3),
        RngStream(seed=12, stream_id=0),
    )
    assert path.jump_times is not None and path.jump_times.size > 0
    for jt in path.jump_times:
        assert format(float(jt), ".17g") in thin_times


def test_extinction_csv_schema(tmp_path, capsys):
    out_file = tmp_path / "ext.csv"
    code, _, err = run_cli(
        [
            "extinction",
            "--theta",
            "0,1.2",
            "--horizon",
            "2",
            "--cutoff",
            "0.01",
            "--n",
            "150",
            "--seed",
            "5",
            "--out",
            str(out_file),
        ],
        capsys,
    )
    assert code == 0
    text = out_file.read_text(encoding="utf-8")
    lines = text.split("\n")
    assert lines[0] == "theta,p_hat,se,ci_low,ci_high"
    assert len(lines) == 4  # header + 2 rows + trailing LF
    assert "\r" not in text
    # one progress line per batch on stderr
    assert err.count("extinction:") == 2


def test_byte_identical_reruns(tmp_path, capsys):
    for argv_tail in (
        ["classify", "--alpha", "1.7", "--theta", "0.9"],
        ["simulate", "--horizon", "0.1", "--cutoff", "0.02", "--seed", "33"],
        ["xi", "--horizon", "0.5", "--cutoff", "0.05", "--seed", "44"],
    ):
        a = tmp_path / "a.out"
        b = tmp_path / "b.out"
        assert run_cli(argv_tail + ["--out", str(a)], capsys)[0] == 0
        assert run_cli(argv_tail + ["--out", str(b)], capsys)[0] == 0
        assert a.read_bytes() == b.read_bytes()


def test_exit_code_validation_error(capsys):
    code, _, err = run_cli(["classify", "--alpha", "2.5"], capsys)
    assert code == 1
    assert "alpha" in err


def test_exit_code_regime_error(capsys):
    code, _, err = run_cli(["drift-check", "--theta", "0.1", "--n", "200"], capsys)
    assert code == 2
    assert "regime" in err.lower()


def test_laplace_check_csv(capsys):
    code, out, _ = run_cli(
        ["laplace-check", "--n", "5000", "--seed", "6", "--lambdas", "0.25,0.5"], capsys
    )
    assert code == 0
    lines = out.split("\n")
    assert lines[0] == "lambda,estimate,target,std_error,z_score"
    assert len(lines) == 4
    for line in lines[1:-1]:
        z = float(line.split(",")[4])
        assert abs(z) < 5.0


def test_selfsim_json(capsys):
    code, out, _ = run_cli(
        ["selfsim", "--n", "1000", "--cutoff", "0.01", "--seed", "2"], capsys
    )
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"variant", "scale_c", "t", "statistic", "n1", "n2", "critical_value_1pct", "passed"}
    assert doc["passed"] is True


def test_report_structure(tmp_path, capsys):
    out_file = tmp_path / "report.csv"
    code, _, err = run_cli(["report", "--n", "1000", "--seed", "1", "--out", str(out_file)], capsys)
    assert code == 0
    lines = out_file.read_text(encoding="utf-8").split("\n")
    assert lines[0] == "suite,case,metric,value,threshold,comparison,passed"
    rows = [line.split(",") for line in lines[1:-1]]
    assert len(rows) == 13
    suites = {r[0] for r in rows}
    assert suites == {"laplace", "extinction", "drift", "selfsim", "lamperti"}
    # every row but the small-n negative control must pass
    for r in rows:
        if r[2] == "ks_statistic_negative_control":
            continue
        assert r[6] == "true", r
    assert err.count("[ssde]") >= 5


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "ssde.cli", "classify", "--alpha", "1.5", "--theta", "1.0"],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["regime"] == "NeverHitsZero"

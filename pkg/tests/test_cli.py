import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from rosenau_lab.cli import main
from rosenau_lab.io import read_csv


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def _write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


GAUSS = {"variant": "rkv-rlw", "eps": 0.1, "beta": 1e-4,
         "grid": {"half_length": 32, "n_points": 512}, "t_end": 1.0}


def test_check_constants(capsys):
    code, out, _ = _run(["check-constants", "--c0", "1", "--variant", "rkv-rlw"], capsys)
    assert code == 0
    assert "A = 0.625" in out and "C = 3.75" in out
    assert "FAIL" not in out
    code, out, _ = _run(["check-constants", "--c0", "2", "--variant", "r-rlw"], capsys)
    assert code == 0 and "D = 0.03125" in out


def test_check_constants_bad_c0(capsys):
    code, _, err = _run(["check-constants", "--c0", "-1", "--variant", "r-rlw"], capsys)
    assert code == 2 and "C0" in err


def _parse_xu(text):
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["x", "u"]
    return np.array([[float(a), float(b)] for a, b in rows[1:]])


def test_riemann_exact_and_godunov(capsys):
    args = ["riemann", "--ul", "1", "--ur", "0", "--t", "5", "--n", "800", "--half-length", "20"]
    code, out, _ = _run(args + ["--exact"], capsys)
    assert code == 0
    ex = _parse_xu(out)
    assert len(ex) == 800
    np.testing.assert_array_equal(ex[:, 1], np.where(ex[:, 0] < 5.0, 1.0, 0.0))
    code, out, _ = _run(args + ["--godunov"], capsys)
    gd = _parse_xu(out)
    assert code == 0
    assert np.sum(np.abs(gd[:, 1] - ex[:, 1])) * 0.05 <= 0.15


def test_riemann_flags_are_exclusive(capsys):
    code, _, _ = _run(["riemann", "--ul", "1", "--ur", "0", "--t", "1", "--n", "8",
                       "--half-length", "1", "--exact", "--godunov"], capsys)
    assert code == 2


def test_solve_then_diagnose(tmp_path, capsys):
    cfg = _write(tmp_path / "c.json", GAUSS)
    out_dir = tmp_path / "run"
    code, out, _ = _run(["solve", "--config", cfg, "--out-dir", str(out_dir), "--stride", "4"], capsys)
    assert code == 0
    for name in ("config.json", "ledger.csv", "monitors.csv", "summary.json"):
        assert (out_dir / name).exists()
    snaps = sorted((out_dir / "snapshots").glob("*.rsnu"))
    assert len(snaps) >= 3
    assert json.loads((out_dir / "config.json").read_text())["output"]["stride"] == 4
    led = read_csv(out_dir / "ledger.csv")
    assert led["t"][0] == 0 and led["t"][-1] == 1.0
    code, out, _ = _run(["diagnose", "--run-dir", str(out_dir)], capsys)
    assert code == 0
    lines = [ln for ln in out.splitlines()[1:] if ln.strip()]
    assert len(lines) == 18
    assert all("agrees" in ln for ln in lines)


def test_config_error_exit_code(tmp_path, capsys):
    doc = dict(GAUSS, epsilonn=0.1)
    code, _, err = _run(["solve", "--config", _write(tmp_path / "c.json", doc),
                         "--out-dir", str(tmp_path / "o")], capsys)
    assert code == 2 and "'eps'" in err


def test_blow_up_exit_code(tmp_path, capsys):
    doc = {"variant": "r-rlw", "eps": 0.0, "beta": 1e-6,
           "grid": {"half_length": 4, "n_points": 64}, "t_end": 100.0,
           "initial": {"kind": "gaussian", "amplitude": 50.0}, "time_step": {"dt": 5.0}}
    with np.errstate(all="ignore"):
        code, _, err = _run(["solve", "--config", _write(tmp_path / "c.json", doc),
                             "--out-dir", str(tmp_path / "o")], capsys)
    assert code == 3 and "blow-up" in err


def test_io_error_exit_codes(tmp_path, capsys):
    code, _, _ = _run(["solve", "--config", str(tmp_path / "missing.json")], capsys)
    assert code == 4
    run = tmp_path / "run"
    (run / "snapshots").mkdir(parents=True)
    (run / "config.json").write_text(json.dumps(GAUSS))
    (run / "snapshots" / "snap_000000.rsnu").write_bytes(b"RSNU\x01\x00")
    code, _, err = _run(["diagnose", "--run-dir", str(run)], capsys)
    assert code == 4 and "truncated" in err


def test_sweep_writes_report_and_runs(tmp_path, capsys):
    doc = {"variant": "r-rlw", "eps_sequence": [0.4, 0.2], "half_length": 16, "t_end": 2.0,
           "window": {"t_min": 0, "t_max": 2, "x_min": -6, "x_max": 6}}
    out_dir = tmp_path / "sw"
    code, out, _ = _run(["sweep", "--config", _write(tmp_path / "s.json", doc),
                         "--out-dir", str(out_dir), "--jobs", "2"], capsys)
    assert code == 0
    rep = read_csv(out_dir / "report.csv")
    assert list(rep["eps"]) == [0.4, 0.2]
    assert rep["err_l1"][1] < rep["err_l1"][0]
    assert (out_dir / "run_01" / "snapshots").is_dir()
    code, out, _ = _run(["diagnose", "--run-dir", str(out_dir / "run_00")], capsys)
    assert code == 0
    assert "DIFFERS" not in out


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "rosenau_lab.cli", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("solve", "riemann", "sweep", "check-constants", "diagnose"):
        assert cmd in out.stdout

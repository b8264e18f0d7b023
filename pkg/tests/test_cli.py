import csv
import io
import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from qkdlab.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array(rows[1:], dtype=float)


def test_threshold_table(capsys):
    code, out, _ = run_cli(capsys, "threshold")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["threshold", "delta", "tilde_delta", "r", "db", "r_two_mode"]
    first = dict(zip(header, rows[0]))
    assert first["delta"] == pytest.approx(0.784, abs=1e-3)
    assert first["tilde_delta"] == pytest.approx(0.749, abs=1e-3)
    assert first["r"] == pytest.approx(0.289, abs=1e-3)
    assert first["db"] == pytest.approx(2.51, abs=0.01)
    assert rows[:, 0].tolist() == [0.11, 0.01, 1e-6]
    assert rows[1, 1] == pytest.approx(0.486, abs=1e-3)
    assert rows[2, 1] == pytest.approx(0.256, abs=2e-3)
    # full precision by default
    assert len(out.splitlines()[1].split(",")[1].replace("0.", "", 1)) >= 15


def test_threshold_options(capsys):
    _, out, _ = run_cli(capsys, "threshold", "--threshold", "0.01")
    header, rows = parse_csv(out)
    assert len(rows) == 2 and rows[0, 1] == pytest.approx(0.486, abs=1e-3)
    _, out, _ = run_cli(capsys, "threshold", "--json")
    data = json.loads(out)
    assert data["rows"][0]["delta"] == pytest.approx(0.784, abs=1e-3)
    assert data["ebits"] == pytest.approx(1.19, abs=0.01)
    _, out, _ = run_cli(capsys, "threshold", "--pretty")
    assert out.splitlines()[1].split(",")[1] == "0.784211"


def test_loss_sweep(capsys):
    code, out, _ = run_cli(capsys, "loss-sweep", "--lo", "0.01", "--hi", "0.74", "--points", "500")
    assert code == 0 and "\r" not in out
    header, rows = parse_csv(out)
    assert header == ["tilde_delta", "kappa_d_max_noamp", "kappa_d_max_amp"]
    assert len(rows) == 500
    best = rows[np.argmax(rows[:, 1])]
    assert best[1] == pytest.approx(0.367, abs=5e-3)
    assert best[0] == pytest.approx(0.426, abs=0.01)
    assert rows[0, 2] == pytest.approx(0.268, abs=3e-3)
    assert np.count_nonzero(np.diff(np.sign(rows[:, 2] - rows[:, 1]))) == 1


def test_loss_sweep_over_distance(capsys):
    code, out, _ = run_cli(capsys, "loss-sweep", "--variable", "kappa_d", "--points", "5",
                           "--tilde-delta", "0.426", "--hi", "0.367", "--lo", "0")
    header, rows = parse_csv(out)
    assert header == ["kappa_d", "delta_xi", "p_window", "p_exact"]
    assert rows[-1, 2] == pytest.approx(0.11, abs=1e-3)
    assert np.all(np.diff(rows[:, 3]) > 0)


def test_error_curve(capsys):
    code, out, _ = run_cli(capsys, "error-curve", "--lo", "0.25", "--hi", "1.0", "--points", "4")
    header, rows = parse_csv(out)
    assert header == ["tilde_delta", "delta", "p_window", "p_exact", "p_tail"]
    row = rows[rows[:, 0] == 0.5][0]
    assert row[2] == pytest.approx(0.012, abs=1e-3)
    assert np.all(rows[:, 2] <= rows[:, 3]) and np.all(rows[:, 3] <= rows[:, 4])


def test_wigner(capsys):
    _, out, _ = run_cli(capsys, "wigner", "--tilde-delta", "0.5", "--json")
    data = json.loads(out)
    assert len(data) == 6
    q0 = next(d for d in data if d["basis"] == "q" and d["center_q"] == 0.0)
    assert (q0["semi_axis_q"], q0["semi_axis_p"]) == pytest.approx((0.3536, 1.4142), abs=1e-4)
    centers = sorted(d["center_p"] for d in data if d["basis"] == "p")
    assert centers == pytest.approx([-math.sqrt(math.pi), 0.0, math.sqrt(math.pi)])
    code, out, _ = run_cli(capsys, "wigner", "--tilde-delta", "1.5")
    assert code == 1


def test_run_is_byte_identical(capsys, tmp_path):
    args = ("run", "--seed", "7", "--n", "140", "--tilde-delta", "0.3")
    code1, out1, _ = run_cli(capsys, *args)
    code2, out2, _ = run_cli(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2
    t1, t2 = tmp_path / "a.json", tmp_path / "b.json"
    run_cli(capsys, *args, "--out", str(t1))
    run_cli(capsys, *args, "--out", str(t2))
    assert t1.read_bytes() == t2.read_bytes()
    _, out, _ = run_cli(capsys, *args, "--json")
    data = json.loads(out)
    assert data["status"] == "Completed" and data["key_alice"] == data["key_bob"]


def test_run_exit_codes(capsys, tmp_path):
    code, _, _ = run_cli(capsys, "run", "--n", "100", "--eve", "shift:1.7724538509055159,0")
    assert code == 2
    code, _, err = run_cli(capsys, "run", "--tilde-delta", "1.7")
    assert code == 1 and "error" in err
    code, _, _ = run_cli(capsys, "run", "--eve", "teleport")
    assert code == 1
    code, _, _ = run_cli(capsys, "run", "--n", "notanumber")
    assert code == 1
    code, _, _ = run_cli(capsys, "run", "--config", str(tmp_path / "missing.json"))
    assert code == 1


def test_run_from_config_and_css_files(capsys, tmp_path):
    from qkdlab.css_postprocess import steane_css
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 70, "tilde_delta": 0.3, "seed": 5}))
    css = tmp_path / "css.json"
    css.write_text(steane_css().to_json())
    code, out, _ = run_cli(capsys, "run", "--config", str(cfg), "--css", str(css), "--json")
    assert code == 0 and len(json.loads(out)["key_alice"]) == 10


def test_estimate(capsys):
    code, out, _ = run_cli(capsys, "estimate", "--trials", "100000", "--tilde-delta", "0.5")
    data = json.loads(out)
    assert code == 0
    assert abs(data["p_hat_z"] - data["analytic_exact"]) < 3 * data["stderr_z"]
    code, _, _ = run_cli(capsys, "estimate", "--trials", "10")
    assert code == 1


def test_seed_environment_variable():
    env = dict(os.environ, QKDLAB_SEED="7")
    cmd = [sys.executable, "-m", "qkdlab", "run", "--n", "70", "--json"]
    via_env = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True).stdout
    explicit = subprocess.run(cmd + ["--seed", "7"], capture_output=True, text=True, check=True).stdout
    other = subprocess.run(cmd + ["--seed", "8"], capture_output=True, text=True, check=True).stdout
    assert via_env == explicit != other


def test_bad_sweep_range(capsys):
    code, _, err = run_cli(capsys, "loss-sweep", "--lo", "0.5", "--hi", "0.1")
    assert code == 1 and "lo < hi" in err

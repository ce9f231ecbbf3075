import json
import subprocess
import sys

import numpy as np
import pytest

from elkwolf.cli import HOPF_HEADER, run
from elkwolf.io import ConfigError, format_value, load_config, parse_config_text, read_csv, write_csv


def test_csv_empty_table(tmp_path):
    out = tmp_path / "e.csv"
    assert write_csv(("a", "b"), [], out) == 0
    assert out.read_bytes() == b"a,b\n"


def test_csv_three_rows(tmp_path):
    out = tmp_path / "o.csv"
    write_csv(("t", "E", "N", "P"), [(0, 1.5, 2, 3), (1, 2, 3, 4), (2, 3, 4, 5)], out)
    assert len(out.read_text().splitlines()) == 4
    assert b"\r" not in out.read_bytes()


@pytest.mark.parametrize("v", [0.1437, 1 / 3, 1e-300, -2.5e17, 0.16 / 0.1, np.float64(7.1e-9)])
def test_float_round_trip(tmp_path, v):
    out = tmp_path / "r.csv"
    write_csv(("v",), [(v,)], out)
    _, rows = read_csv(out)
    assert float(rows[0][0]) == v


def test_format_value():
    assert format_value(300.0) == "300"
    assert format_value(True) == "true"
    assert format_value(None) == ""
    assert format_value("Stable") == "Stable"


def test_config_formats(tmp_path):
    kv = parse_config_text("gamma = 0.11  # capture\n\nseed=3\n")
    assert kv == {"gamma": 0.11, "seed": 3}
    assert parse_config_text(json.dumps({"beta": 0.2, "horizon": 100})) == {"beta": 0.2, "horizon": 100.0}
    with pytest.raises(ConfigError):
        parse_config_text("zeta = 1")
    with pytest.raises(ConfigError):
        parse_config_text("gamma 0.1")
    with pytest.raises(ConfigError):
        parse_config_text("{bad json")
    with pytest.raises(ConfigError):
        parse_config_text("seed = 1.5")


def test_load_config_overrides_and_defaults(tmp_path, caplog):
    cfg_file = tmp_path / "c.txt"
    cfg_file.write_text("gamma = 0.11\nrel_tol = 1e-9\n")
    with caplog.at_level("INFO"):
        cfg = load_config(cfg_file, ["beta=0.15"])
    assert cfg.parameters.gamma == 0.11 and cfg.parameters.beta == 0.15 and cfg.rel_tol == 1e-9
    assert cfg.parameters.eta == 0.3
    assert "using default values" in caplog.text
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.txt")
    with pytest.raises(ConfigError):
        load_config(None, ["gamma=-1"])


def test_simulate_fig3(tmp_path, capsys):
    out = tmp_path / "orbit.csv"
    code = run(["simulate", "--e0", "340", "--n0", "380", "--p0", "4", "--t-end", "5000",
                "--out", str(out)])
    assert code == 0
    assert capsys.readouterr().out == ""
    header, rows = read_csv(out)
    assert header == ["t", "E", "N", "P"]
    final = np.array(rows[-1][1:], dtype=float)
    assert np.all(np.abs(final - (396.31, 280.18, 3.01)) <= 0.01 * np.array((396.31, 280.18, 3.01)))


def test_equilibria_stdout(capsys):
    assert run(["equilibria"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "kind,E,N,P,exists"
    x1 = lines[2].split(",")
    assert x1[0] == "NoBanffElk"
    assert [float(v) for v in x1[1:4]] == pytest.approx([0, 300, 1.6], abs=1e-12)
    assert lines[1] == "Extinction,0,0,0,true"


def test_stability_stdout(capsys):
    assert run(["stability"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1].startswith("Extinction,Unstable")
    assert lines[3].startswith("Coexistence,StableFocus")


def test_hopf_csv(tmp_path):
    out, fig = tmp_path / "h.csv", tmp_path / "h.svg"
    assert run(["hopf", "--param", "beta", "--min", "0.05", "--max", "0.2", "--set", "gamma=0.11",
                "--out", str(out), "--plot", str(fig)]) == 0
    header, rows = read_csv(out)
    assert tuple(header) == HOPF_HEADER
    rec = dict(zip(header, map(float, rows[0])))
    assert rec["beta_sharp"] == pytest.approx(0.1437, abs=1e-3)
    assert rec["transversality"] == pytest.approx(0.005549, rel=1e-3)
    assert rec["S1"] > 0 and rec["S2"] < 0
    assert fig.read_text().startswith("<?xml")


def test_normalform_csv(tmp_path):
    out = tmp_path / "nf.csv"
    assert run(["normalform", "--set", "gamma=0.11", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    table = {r[0]: (r[1], r[2]) for r in rows}
    assert header == ["quantity", "real", "imag"]
    assert table["G21"] == ("0", "0")


def test_scan_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["scan", "--x", "gamma", "--y", "beta", "--resolution", "12"]
    assert run(args + ["--out", str(a)]) == 0
    assert run(args + ["--out", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    header, rows = read_csv(a)
    assert header == ["x", "y", "class", "b1", "b3", "hurwitz_margin"] and len(rows) == 144


def test_bifurcation_csv(tmp_path):
    out = tmp_path / "b.csv"
    assert run(["bifurcation", "--set", "gamma=0.11", "--min", "0.15", "--max", "0.16",
                "--steps", "2", "--set", "horizon=2000", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["param", "variable", "kind", "value"]
    assert {r[2] for r in rows} == {"min", "max", "terminal"}


def test_prcc_csv(tmp_path):
    out = tmp_path / "p.csv"
    assert run(["prcc", "--samples", "20", "--horizon", "20", "--time-points", "4",
                "--out", str(out), "--seed", "5"]) == 0
    header, rows = read_csv(out)
    assert header == ["parameter", "output", "time", "prcc", "t", "p"]
    assert len(rows) == 11 * 3 * 4


@pytest.mark.parametrize("argv,code", [
    (["bogus"], 1),
    (["simulate", "--nope"], 1),
    (["simulate", "--set", "zeta=1"], 1),
    (["simulate", "--config", "/nonexistent/cfg"], 1),
    (["simulate", "--out", "/nonexistent/dir/o.csv"], 1),
    (["simulate", "--t-end", "-5"], 1),
    (["hopf", "--min", "0.01", "--max", "0.02"], 2),
    (["hopf", "--param", "gamma"], 1),
    (["scan", "--x", "xi", "--y", "xi"], 1),
])
def test_exit_codes(argv, code, capsys):
    assert run(argv) == code
    assert capsys.readouterr().err


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "elkwolf", "equilibria", "--out", str(tmp_path / "e.csv")],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == ""
    res = subprocess.run([sys.executable, "-m", "elkwolf", "simulate", "--set", "gamma=oops"],
                         capture_output=True, text=True)
    assert res.returncode == 1 and "gamma" in res.stderr and res.stdout == ""


def test_selftest_subset(capsys):
    assert run(["selftest", "--only", "1", "--only", "2"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2 and all(line.startswith("[PASS]") for line in out)


def test_selftest_failure_exit(capsys):
    assert run(["selftest", "--only", "4"]) == 2

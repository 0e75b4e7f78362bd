import subprocess
import sys

import numpy as np
import pytest

from toamcc.cli import EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC, EXIT_OK, main, parse_grid, ConfigError
from toamcc.dataio import Fix, load_estimates, load_results, write_range_log, write_reference, write_sensors

FOUR_SENSORS = np.array([[3.1068, 50.6350], [34.7464, 46.6166], [-0.8732, 7.6484], [31.4618, 7.8664]])


def run(*argv):
    return main([str(a) for a in argv])


@pytest.mark.parametrize("text, expected", [
    ("1:8", tuple(range(1, 9))),
    ("0:1:0.25", (0.0, 0.25, 0.5, 0.75, 1.0)),
    ("0.5,0.1", (0.1, 0.5)),
    ("5", (5.0,)),
])
def test_parse_grid(text, expected):
    assert parse_grid(text, integer=text == "1:8") == expected


@pytest.mark.parametrize("text", ["", "a:b", "3:1", "1:2:0", "1:2:3:4", "0.5:2"])
def test_parse_grid_rejects(text):
    with pytest.raises(ConfigError):
        parse_grid(text, integer=text == "0.5:2")


def test_simulate_noiseless(tmp_path, capsys):
    out = tmp_path / "sim.csv"
    assert run("simulate", "--sigma-g2", 0, "--b", 0, "--trials", 10, "--seed", 1, "-o", out) == EXIT_OK
    rows = load_results(out).rows
    assert {r.estimator for r in rows} == {"sr_mcc", "sr_ls"}
    assert all(r.rmse < 1e-6 and r.trials == 10 for r in rows)
    assert "wrote" in capsys.readouterr().out


def test_simulate_deterministic_files(tmp_path):
    for name in ("a.csv", "b.csv"):
        assert run("simulate", "--sigma-g2", 0.1, "--l-nlos", 2, "--trials", 20, "--seed", 3,
                   "--no-timing", "-o", tmp_path / name) == EXIT_OK
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_simulate_json(tmp_path):
    out = tmp_path / "r.json"
    assert run("simulate", "--trials", 3, "--format", "json", "-o", out) == EXIT_OK
    assert len(load_results(out)) == 2


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("TOAMCC_OUTPUT_DIR", str(tmp_path))
    assert run("simulate", "--trials", 2) == EXIT_OK
    assert (tmp_path / "simulate.csv").exists()


def test_sweep_l_nlos_curve(tmp_path):
    out = tmp_path / "sweep.csv"
    assert run("sweep", "--param", "l-nlos", "--grid", "1:8", "--sigma-g2", 0.1, "--b", 5,
               "--trials", 4, "-o", out) == EXIT_OK
    table = load_results(out)
    assert len(table) == 16
    assert sorted({r.param for r in table}) == [float(k) for k in range(1, 9)]


def test_single_point_sweep_equals_simulate(tmp_path):
    common = ["--trials", 15, "--seed", 9, "--l-nlos", 2, "--no-timing"]
    assert run("sweep", "--param", "b", "--grid", 5, *common, "-o", tmp_path / "s.csv") == EXIT_OK
    assert run("simulate", "--b", 5, *common, "-o", tmp_path / "m.csv") == EXIT_OK
    sweep, sim = load_results(tmp_path / "s.csv"), load_results(tmp_path / "m.csv")
    assert [(r.estimator, r.rmse, r.crlb_rmse, r.trials) for r in sweep] == \
        [(r.estimator, r.rmse, r.crlb_rmse, r.trials) for r in sim]


@pytest.mark.parametrize("argv", [
    ["simulate", "--trials", 0],
    ["simulate", "--l-nlos", 20],
    ["simulate", "-L", 2],
    ["simulate", "--gamma", -1],
    ["simulate", "--estimators", "sr_mcc,tdoa"],
    ["sweep", "--param", "l-nlos", "--grid", "1.5,2"],
    ["sweep", "--param", "l-nlos", "--grid", "0:20"],
    ["sweep", "--param", "b", "--grid=-1,2"],
    ["bench", "--fixes", 0],
])
def test_config_errors(argv, capsys):
    assert run(*argv) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        run("sweep", "--grid", "1")
    assert exc.value.code == 2


def _noiseless_log(tmp_path, sensors, n_fix=100, seed=0):
    rng = np.random.default_rng(seed)
    lo, hi = sensors.min(axis=0), sensors.max(axis=0)
    truths = {}
    fixes = []
    for f in range(1, n_fix + 1):
        x = rng.uniform(lo, hi)
        truths[f] = x
        fixes.append(Fix(fix_id=f, sensor_ids=tuple(range(1, len(sensors) + 1)),
                         ranges=np.linalg.norm(sensors - x, axis=1)))
    write_sensors(tmp_path / "sensors.csv", sensors)
    write_range_log(tmp_path / "ranges.csv", fixes)
    write_reference(tmp_path / "ref.csv", truths)
    return truths


def test_locate_noiseless_four_sensors(tmp_path, capsys):
    truths = _noiseless_log(tmp_path, FOUR_SENSORS)
    out = tmp_path / "est.csv"
    assert run("locate", "--sensors", tmp_path / "sensors.csv", "--ranges", tmp_path / "ranges.csv",
               "--reference", tmp_path / "ref.csv", "-o", out) == EXIT_OK
    rows = load_estimates(out)
    assert len(rows) == 200
    for est in ("sr_mcc", "sr_ls"):
        mine = [r for r in rows if r["estimator"] == est]
        assert len(mine) == 100
        err = max(np.linalg.norm(r["x"] - truths[r["fix_id"]]) for r in mine)
        assert err <= 1e-6
    printed = capsys.readouterr().out
    assert "mean run-time=" in printed and "rmse=" in printed


def test_locate_reports_rejected_fix(tmp_path, capsys):
    _noiseless_log(tmp_path, FOUR_SENSORS, n_fix=3)
    with open(tmp_path / "ranges.csv", "a") as fh:
        fh.write("99,1,5.0\n99,2,6.0\n")
    assert run("locate", "--sensors", tmp_path / "sensors.csv", "--ranges", tmp_path / "ranges.csv",
               "-o", tmp_path / "e.csv") == EXIT_OK
    assert "fix 99 rejected" in capsys.readouterr().err
    assert len(load_estimates(tmp_path / "e.csv")) == 6


def test_locate_data_errors(tmp_path, capsys):
    assert run("locate", "--sensors", tmp_path / "none.csv", "--ranges", tmp_path / "none.csv") == EXIT_DATA
    _noiseless_log(tmp_path, FOUR_SENSORS, n_fix=2)
    (tmp_path / "bad.csv").write_text("fix_id,sensor_id,range_m\n1,9,1.0\n")
    assert run("locate", "--sensors", tmp_path / "sensors.csv", "--ranges", tmp_path / "bad.csv") == EXIT_DATA
    assert "unknown sensor_id" in capsys.readouterr().err


def test_locate_collinear_is_numeric_failure(tmp_path):
    sensors = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    write_sensors(tmp_path / "s.csv", sensors)
    write_range_log(tmp_path / "r.csv", [Fix(1, (1, 2, 3, 4), np.array([1.0, 1.0, 2.0, 3.0]))])
    assert run("locate", "--sensors", tmp_path / "s.csv", "--ranges", tmp_path / "r.csv",
               "-o", tmp_path / "e.csv") == EXIT_NUMERIC


def test_bench_rows(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    assert run("bench", "--l-grid", "10,40", "--fixes", 5, "-o", out) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("L,mean_fix_time_s") and len(lines) == 3
    assert run("bench", "--l-grid", "10", "--fixes", 5, "-o", out) == EXIT_OK
    assert len(out.read_text().splitlines()) == 2


def test_bench_iterations_deterministic(tmp_path):
    cols = []
    for name in ("a", "b"):
        run("bench", "--l-grid", "10,20", "--fixes", 8, "--l-nlos", 2, "-o", tmp_path / name)
        cols.append([line.split(",")[2] for line in (tmp_path / name).read_text().splitlines()])
    assert cols[0] == cols[1]


def test_entry_point_version():
    res = subprocess.run([sys.executable, "-m", "toamcc", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "toamcc" in res.stdout

import numpy as np
import pytest

from toamcc.evaluation import (
    ResultTable, SingularFisherError, SweepConfig, crlb_rmse, crlb_trace, fisher_information, rmse,
    run_sweep, run_trials,
)
from toamcc.scenario import Scenario, ScenarioParams

CORNERS = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])


def test_rmse_hand_values():
    truths = np.zeros((2, 2))
    assert rmse(truths, truths) == 0.0
    assert rmse([[3.0, 4.0]], [[0.0, 0.0]]) == pytest.approx(5.0)
    assert rmse([[1.0, 0.0], [0.0, 7.0]], truths) == pytest.approx(5.0)


def test_rmse_rejects_bad_input():
    with pytest.raises(ValueError):
        rmse([], [])
    with pytest.raises(ValueError):
        rmse([[1.0, 2.0]], [[1.0, 2.0], [0.0, 0.0]])


def test_crlb_corner_example():
    np.testing.assert_allclose(fisher_information([0.0, 0.0], CORNERS, 1.0), 2.0 * np.eye(2), atol=1e-15)
    assert crlb_trace([0.0, 0.0], CORNERS, 1.0) == pytest.approx(1.0)
    sc = Scenario(source=np.zeros(2), sensors=CORNERS, nlos_mask=np.zeros(4, bool))
    assert crlb_rmse([sc, sc], 1.0) == pytest.approx(1.0)


def test_crlb_against_numeric_jacobian(rng):
    # F = J^T J / s2 with J the Jacobian of the range vector, by central differences
    for _ in range(10):
        src = rng.uniform(0, 20, 2)
        sensors = rng.uniform(0, 20, (6, 2))
        h = 1e-6
        J = np.column_stack([
            (np.linalg.norm(sensors - (src + h * e), axis=1) - np.linalg.norm(sensors - (src - h * e), axis=1)) / (2 * h)
            for e in np.eye(2)
        ])
        expected = np.trace(np.linalg.inv(J.T @ J / 0.3))
        assert crlb_trace(src, sensors, 0.3) == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
def test_crlb_scales_with_sigma(c, rng):
    sensors = rng.uniform(0, 20, (8, 2))
    sc = Scenario(source=rng.uniform(0, 20, 2), sensors=sensors, nlos_mask=np.zeros(8, bool))
    assert crlb_rmse([sc], 0.1 * c * c) == pytest.approx(c * crlb_rmse([sc], 0.1), rel=1e-12)


def test_crlb_collinear_is_singular():
    sensors = np.array([[1.0, 0.0], [2.0, 0.0], [5.0, 0.0]])
    with pytest.raises(SingularFisherError):
        crlb_trace([0.0, 0.0], sensors, 1.0)
    sc = Scenario(source=np.zeros(2), sensors=sensors, nlos_mask=np.zeros(3, bool))
    with pytest.raises(SingularFisherError):
        crlb_rmse([sc], 1.0)
    good = Scenario(source=np.zeros(2), sensors=CORNERS, nlos_mask=np.zeros(4, bool))
    assert crlb_rmse([sc, good], 1.0) == pytest.approx(1.0)


def test_noiseless_rmse_zero():
    rows = run_trials(ScenarioParams(sigma_g2=0.0, b_max=0.0, l_nlos=3, seed=4), 20)
    for row in rows:
        assert row.rmse < 1e-6
        assert row.trials == 20 and row.excluded == 0


def test_run_trials_deterministic():
    p = ScenarioParams(l_nlos=2, seed=100)
    assert run_trials(p, 30) == run_trials(p, 30)


def test_crlb_only_for_los():
    los = run_trials(ScenarioParams(seed=1), 5)
    nlos = run_trials(ScenarioParams(l_nlos=1, seed=1), 5)
    assert all(r.crlb_rmse is not None for r in los)
    assert all(r.crlb_rmse is None for r in nlos)
    assert run_trials(ScenarioParams(l_nlos=1, seed=1), 5, with_crlb=True)[0].crlb_rmse is not None


def test_estimators_see_identical_data(monkeypatch):
    from toamcc import evaluation

    seen = {"sr_mcc": [], "sr_ls": []}

    def spy(name):
        def fn(s, r):
            seen[name].append((s.tobytes(), r.tobytes()))
            return np.zeros(2)
        return fn

    monkeypatch.setattr(evaluation, "_estimator", lambda name, options: spy(name))
    run_trials(ScenarioParams(l_nlos=2, seed=3), 10)
    assert seen["sr_mcc"] == seen["sr_ls"] and len(seen["sr_ls"]) == 10


def test_failed_trials_excluded_symmetrically(monkeypatch):
    from toamcc import evaluation
    from toamcc.gtrs import DegenerateGeometryError

    calls = {"n": 0}

    def flaky(name, options):
        def fn(s, r):
            calls["n"] += 1
            if name == "sr_ls" and calls["n"] % 4 == 0:
                raise DegenerateGeometryError("boom")
            return np.zeros(2)
        return fn

    monkeypatch.setattr(evaluation, "_estimator", flaky)
    rows = run_trials(ScenarioParams(seed=3), 8)
    assert rows[0].excluded == rows[1].excluded == 4
    assert rows[0].trials == rows[1].trials == 4


def test_sweep_shape_and_single_point():
    base = ScenarioParams(sigma_g2=0.1, b_max=5.0, seed=50)
    table = run_sweep(SweepConfig(base=base, swept_parameter="l_nlos", grid=tuple(range(1, 9)), trials=5))
    assert isinstance(table, ResultTable)
    assert len(table.select("sr_mcc")) == 8 and len(table.select("sr_ls")) == 8
    assert [r.param for r in table.select("sr_ls")] == [float(k) for k in range(1, 9)]

    one = run_sweep(SweepConfig(base=base, swept_parameter="b_max", grid=(3.0,), trials=7))
    direct = run_trials(ScenarioParams(sigma_g2=0.1, b_max=3.0, seed=50), 7, param_value=3.0)
    assert list(one.rows) == direct


def test_sweep_noiseless_zero():
    base = ScenarioParams(sigma_g2=0.0, l_nlos=2, seed=1)
    table = run_sweep(SweepConfig(base=base, swept_parameter="b_max", grid=(0.0,), trials=10))
    assert all(r.rmse < 1e-6 for r in table)


def test_sweep_grid_points_use_distinct_seeds():
    base = ScenarioParams(seed=0)
    table = run_sweep(SweepConfig(base=base, swept_parameter="sigma_g2", grid=(0.1, 0.1), trials=20))
    a, b = table.select("sr_ls")
    assert a.rmse != b.rmse


@pytest.mark.parametrize("kwargs", [dict(swept_parameter="L"), dict(trials=0), dict(grid=()),
                                    dict(grid=(2.0, 1.0)), dict(estimators=("tdoa",))])
def test_sweep_config_validation(kwargs):
    args = dict(base=ScenarioParams(), swept_parameter="b_max", grid=(1.0,), trials=1)
    args.update(kwargs)
    with pytest.raises(ValueError):
        SweepConfig(**args)


def test_los_sweep_respects_crlb():
    table = run_sweep(SweepConfig(base=ScenarioParams(seed=7), swept_parameter="sigma_g2",
                                  grid=(0.1, 1.0), trials=300))
    for row in table:
        assert row.rmse >= 0.95 * row.crlb_rmse

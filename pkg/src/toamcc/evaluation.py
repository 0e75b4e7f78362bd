"""Monte Carlo evaluation: RMSE, the LOS CRLB benchmark, parameter sweeps."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from ._accel import warmup
from .gtrs import GtrsError
from .scenario import Scenario, ScenarioParams, make_trial
from .srmcc import SrMccOptions, sr_ls_localize, sr_mcc_localize

log = logging.getLogger(__name__)

ESTIMATORS = ("sr_mcc", "sr_ls")
SWEEPABLE = ("sigma_g2", "b_max", "l_nlos")


class SingularFisherError(ArithmeticError):
    pass


@dataclass(frozen=True)
class ResultRow:
    param: float | None
    estimator: str
    rmse: float
    crlb_rmse: float | None
    # Wall-clock; excluded from equality so seeded tables compare equal.
    mean_fix_time: float | None = field(compare=False)
    trials: int
    excluded: int


@dataclass(frozen=True)
class ResultTable:
    rows: tuple[ResultRow, ...]
    param_name: str | None = None

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def select(self, estimator: str) -> list[ResultRow]:
        return [r for r in self.rows if r.estimator == estimator]


@dataclass(frozen=True)
class SweepConfig:
    base: ScenarioParams
    swept_parameter: str
    grid: tuple
    trials: int
    estimators: tuple[str, ...] = ESTIMATORS
    options: SrMccOptions = SrMccOptions()
    with_crlb: bool | None = None

    def __post_init__(self):
        if self.swept_parameter not in SWEEPABLE:
            raise ValueError(f"swept_parameter must be one of {SWEEPABLE}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if len(self.grid) == 0:
            raise ValueError("grid must be non-empty")
        if list(self.grid) != sorted(self.grid):
            raise ValueError("grid must be sorted ascending")
        _check_estimators(self.estimators)


def _check_estimators(estimators):
    unknown = set(estimators) - set(ESTIMATORS)
    if unknown or not estimators:
        raise ValueError(f"estimators must be a non-empty subset of {ESTIMATORS}")


def rmse(estimates, truths) -> float:
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truths, dtype=float)
    if est.size == 0:
        raise ValueError("rmse of an empty set")
    if est.shape != tru.shape:
        raise ValueError(f"shape mismatch {est.shape} vs {tru.shape}")
    est = est.reshape(len(est), -1)
    tru = tru.reshape(len(tru), -1)
    return float(np.sqrt(np.mean(np.sum((est - tru) ** 2, axis=1))))


def fisher_information(source, sensors, sigma_g2: float) -> np.ndarray:
    """LOS Gaussian TOA Fisher information ``sum_i u_i u_i^T / sigma_g2``."""
    diff = np.asarray(source, dtype=float) - np.asarray(sensors, dtype=float)
    dist = np.linalg.norm(diff, axis=1)
    keep = dist > 1e-12
    u = diff[keep] / dist[keep, None]
    return u.T @ u / sigma_g2


def crlb_trace(source, sensors, sigma_g2: float) -> float:
    """``trace(F^{-1})`` for one trial; raises on a singular Fisher matrix."""
    if sigma_g2 == 0:
        return 0.0
    F = fisher_information(source, sensors, sigma_g2)
    if np.linalg.cond(F) > 1e12:
        raise SingularFisherError("Fisher information is singular (collinear geometry)")
    return float(np.trace(np.linalg.inv(F)))


def crlb_rmse(scenarios: Sequence[Scenario], sigma_g2: float) -> float:
    """Root of the mean per-trial CRLB trace; singular trials are skipped."""
    traces = []
    for sc in scenarios:
        try:
            traces.append(crlb_trace(sc.source, sc.sensors, sigma_g2))
        except SingularFisherError:
            continue
    skipped = len(scenarios) - len(traces)
    if not traces:
        raise SingularFisherError("every trial has a singular Fisher matrix")
    if skipped:
        log.warning("CRLB: %d of %d trials skipped (singular Fisher matrix)", skipped, len(scenarios))
    return float(np.sqrt(np.mean(traces)))


def _estimator(name: str, options: SrMccOptions) -> Callable:
    if name == "sr_mcc":
        return lambda s, r: sr_mcc_localize(s, r, options).x_hat
    return lambda s, r: sr_ls_localize(s, r, options.k_bisect).x_hat


def run_trials(params: ScenarioParams, trials: int, estimators: Sequence[str] = ESTIMATORS,
               options: SrMccOptions | None = None, *, param_value: float | None = None,
               with_crlb: bool | None = None) -> list[ResultRow]:
    """Run ``trials`` seeded trials and score every estimator on the same data.

    Trial ``j`` uses seed ``params.seed + j``.  A trial on which any estimator
    raises a GTRS error is dropped for all estimators and counted in
    ``excluded``.  The CRLB column is filled for LOS configurations unless
    ``with_crlb`` says otherwise.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    _check_estimators(estimators)
    options = options or SrMccOptions()
    fns = [_estimator(name, options) for name in estimators]
    warmup()

    est = np.empty((len(estimators), trials, params.d))
    elapsed = np.zeros((len(estimators), trials))
    truths = np.empty((trials, params.d))
    ok = np.ones(trials, dtype=bool)
    scenarios = []
    for j in range(trials):
        trial_params = replace(params, seed=params.seed + j)
        sc, rs = make_trial(trial_params)
        scenarios.append(sc)
        truths[j] = sc.source
        for m, fn in enumerate(fns):
            t0 = time.perf_counter()
            try:
                est[m, j] = fn(sc.sensors, rs.ranges)
            except GtrsError as exc:
                log.info("trial seed %d excluded: %s", trial_params.seed, exc)
                ok[j] = False
                break
            finally:
                elapsed[m, j] = time.perf_counter() - t0

    used = int(ok.sum())
    excluded = trials - used
    if with_crlb is None:
        with_crlb = params.l_nlos == 0
    crlb = None
    if with_crlb and used:
        kept = [sc for sc, keep in zip(scenarios, ok) if keep]
        try:
            crlb = crlb_rmse(kept, params.sigma_g2)
        except SingularFisherError:
            crlb = None

    rows = []
    for m, name in enumerate(estimators):
        value = rmse(est[m, ok], truths[ok]) if used else float("nan")
        mean_time = float(elapsed[m, ok].mean()) if used else None
        rows.append(ResultRow(param=param_value, estimator=name, rmse=value, crlb_rmse=crlb,
                              mean_fix_time=mean_time, trials=used, excluded=excluded))
    return rows


def run_sweep(cfg: SweepConfig) -> ResultTable:
    """One :func:`run_trials` block per grid value.

    Grid point ``i`` starts at seed ``base.seed + i * trials`` so no two
    points share trial seeds.
    """
    rows = []
    for i, value in enumerate(cfg.grid):
        if cfg.swept_parameter == "l_nlos":
            value = int(value)
        params = replace(cfg.base, **{cfg.swept_parameter: value}, seed=cfg.base.seed + i * cfg.trials)
        rows.extend(run_trials(params, cfg.trials, cfg.estimators, cfg.options,
                               param_value=float(value), with_crlb=cfg.with_crlb))
    return ResultTable(rows=tuple(rows), param_name=cfg.swept_parameter)

"""Correntropy-based robust TOA localisation on squared-range residuals.

The estimator maximises ``sum_i exp(-e_i(x)^2 / (2 sigma^2))`` with
``e_i(x) = r_i^2 - ||x - x_i||^2`` by half-quadratic alternating maximisation:
the auxiliary step has a closed form, and the position step is a weighted
SR-LS problem solved exactly by :mod:`toamcc.gtrs`.  The kernel size is either
held fixed or re-estimated after every position step by Silverman's rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import gtrs
from ._accel import kernels

# Stands in for sigma = infinity: every auxiliary variable is -1.
INFINITE_SIGMA = None

DEFAULT_N_MAX = 10
DEFAULT_GAMMA = 1e-5
DEFAULT_K_BISECT = 30
DEFAULT_SIGMA_FLOOR = 1e-3


@dataclass(frozen=True)
class SrMccOptions:
    n_max: int = DEFAULT_N_MAX
    gamma: float = DEFAULT_GAMMA
    k_bisect: int = DEFAULT_K_BISECT
    fixed_sigma: float | None = None
    sigma_floor: float = DEFAULT_SIGMA_FLOOR

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if self.k_bisect < 0:
            raise ValueError("k_bisect must be >= 0")
        if self.fixed_sigma is not None and not self.fixed_sigma > 0:
            raise ValueError("fixed_sigma must be > 0")
        if not self.sigma_floor > 0:
            raise ValueError("sigma_floor must be > 0")

    @property
    def sigma_mode(self) -> str:
        return "adaptive" if self.fixed_sigma is None else "fixed"


@dataclass(frozen=True)
class HqState:
    """One completed pass of the alternating maximisation."""

    k: int
    x: np.ndarray
    p: np.ndarray
    sigma: float | None
    augmented_cost: float


@dataclass(frozen=True)
class LocalizationResult:
    x_hat: np.ndarray
    iterations: int
    converged: bool
    final_sigma: float | None
    objective_trace: list[float] = field(default_factory=list)
    correntropy_trace: list[float] = field(default_factory=list)
    history: list[HqState] = field(default_factory=list, repr=False)
    minimal_geometry: bool = False
    max_psi_residual: float = 0.0


def _is_infinite(sigma) -> bool:
    return sigma is None or math.isinf(sigma)


def update_auxiliary(x, sensors, ranges, sigma) -> np.ndarray:
    """Maximiser of the augmented cost over the auxiliary variables.

    ``p_i = -exp(-(r_i^2 - ||x - x_i||^2)^2 / (2 sigma^2))``; with
    ``sigma = INFINITE_SIGMA`` all entries are -1.
    """
    sensors = np.asarray(sensors, dtype=float)
    if _is_infinite(sigma):
        return -np.ones(sensors.shape[0])
    e = kernels.sr_residuals(np.asarray(x, dtype=float), sensors, np.asarray(ranges, dtype=float))
    return kernels.auxiliary(e, float(sigma))


def silverman_bandwidth(std: float, iqr: float, count: int) -> float:
    return 1.06 * min(std, iqr / 1.34) * count ** (-0.2)


def silverman_kernel(residuals, L: int | None = None, sigma_floor: float = DEFAULT_SIGMA_FLOOR) -> float:
    """Silverman's rule on squared-range residuals, floored at ``sigma_floor``.

    The spread uses the sample standard deviation (``ddof=1``) and the
    linearly interpolated interquartile range.
    """
    e = np.ascontiguousarray(residuals, dtype=float)
    if L is None:
        L = e.shape[0]
    if e.shape[0] < 2:
        raise ValueError("need at least two residuals")
    return float(kernels.silverman(e, float(L), float(sigma_floor)))


def correntropy_objective(x, sensors, ranges, sigma: float) -> float:
    e = kernels.sr_residuals(np.asarray(x, dtype=float), np.asarray(sensors, dtype=float),
                             np.asarray(ranges, dtype=float))
    return float(kernels.correntropy(e, float(sigma)))


def conjugate(p) -> np.ndarray:
    """``zeta(p) = -p ln(-p) + p`` on ``[-1, 0)``, extended by its limit 0 at 0."""
    p = np.asarray(p, dtype=float)
    q = -p
    return np.where(q > 0, q * np.log(np.where(q > 0, q, 1.0)) + p, 0.0)


def _augmented(e, p, sigma) -> float:
    return float(kernels.augmented(e, p, 0.0 if _is_infinite(sigma) else float(sigma)))


def augmented_cost(x, p, sensors, ranges, sigma) -> float:
    """Half-quadratic augmented cost.

    Scaled so that ``max_p`` equals :func:`correntropy_objective`, attained at
    ``p = update_auxiliary(x, ...)``.
    """
    e = kernels.sr_residuals(np.asarray(x, dtype=float), np.asarray(sensors, dtype=float),
                             np.asarray(ranges, dtype=float))
    return _augmented(e, np.asarray(p, dtype=float), sigma)


def _prepare(sensors, ranges):
    sensors = np.ascontiguousarray(np.atleast_2d(np.asarray(sensors, dtype=float)))
    ranges = np.ascontiguousarray(np.asarray(ranges, dtype=float).ravel())
    return sensors, ranges, gtrs.assemble_sr_system(sensors, ranges)


def sr_mcc_localize(sensors, ranges, opts: SrMccOptions | None = None, *, keep_history: bool = False
                    ) -> LocalizationResult:
    """Robust source position from TOA ranges.

    Starts from the origin with an infinite kernel (so the first position step
    is plain SR-LS) and alternates auxiliary, position and kernel-size updates
    until the step length drops below ``gamma`` or ``n_max`` passes are done.
    """
    opts = opts or SrMccOptions()
    sensors, ranges, sys = _prepare(sensors, ranges)
    psi_tol = sys.psi_tolerance
    fixed = opts.fixed_sigma

    x = np.zeros(sys.d)
    sigma = INFINITE_SIGMA
    e = kernels.sr_residuals(x, sensors, ranges)
    objective_trace, corr_trace, history = [], [], []
    max_psi = 0.0
    converged = False
    iterations = 0
    for k in range(opts.n_max):
        if _is_infinite(sigma):
            p = -np.ones(sys.L)
        else:
            p = kernels.auxiliary(e, sigma)
        sol = gtrs._solve(sys.A, sys.b_vec, sys.d, np.maximum(np.sqrt(-p), gtrs.WEIGHT_FLOOR),
                          opts.k_bisect, psi_tol)
        max_psi = max(max_psi, abs(sol.psi_residual))
        x_new = sol.y[: sys.d].copy()
        e = kernels.sr_residuals(x_new, sensors, ranges)

        eval_sigma = fixed if fixed is not None else sigma
        objective_trace.append(_augmented(e, p, eval_sigma))
        sigma = fixed if fixed is not None else float(kernels.silverman(e, float(sys.L), opts.sigma_floor))
        corr_trace.append(float(kernels.correntropy(e, sigma)))
        if keep_history:
            history.append(HqState(k=k + 1, x=x_new, p=p, sigma=eval_sigma, augmented_cost=objective_trace[-1]))

        step = float(np.linalg.norm(x_new - x))
        x = x_new
        iterations = k + 1
        if step < opts.gamma:
            converged = True
            break

    return LocalizationResult(
        x_hat=x, iterations=iterations, converged=converged, final_sigma=sigma,
        objective_trace=objective_trace, correntropy_trace=corr_trace, history=history,
        minimal_geometry=sys.L == sys.d + 1, max_psi_residual=max_psi,
    )


def sr_ls_localize(sensors, ranges, k_bisect: int = DEFAULT_K_BISECT) -> LocalizationResult:
    """Unit-weight squared-range least squares (the SR-LS baseline)."""
    sensors, ranges, sys = _prepare(sensors, ranges)
    sol = gtrs._solve(sys.A, sys.b_vec, sys.d, np.ones(sys.L), k_bisect, sys.psi_tolerance)
    return LocalizationResult(
        x_hat=sol.y[: sys.d].copy(), iterations=1, converged=True, final_sigma=INFINITE_SIGMA,
        minimal_geometry=sys.L == sys.d + 1, max_psi_residual=abs(sol.psi_residual),
    )

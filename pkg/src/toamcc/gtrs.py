"""Exact weighted squared-range least squares via the GTRS formulation.

The problem solved is::

    min_y ||W (A y - b)||^2   s.t.   y^T D y + 2 f^T y = 0

with ``y = [x, alpha]``, ``A`` rows ``[-2 x_i^T, 1]``, ``b_i = r_i^2 - ||x_i||^2``,
``D = diag(1, ..., 1, 0)`` and ``f = (0, ..., 0, -1/2)``, so the constraint
reads ``alpha = ||x||^2``.  The minimiser is ``y_hat(chi)`` at the unique root
of the decreasing function ``psi`` on ``I = (-1/lambda_max(D, A^T W^2 A), inf)``,
which is located by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _codes
from ._accel import kernels

WEIGHT_FLOOR = 1e-6
LOWER_OFFSET = 1e-9
MAX_DOUBLINGS = 60
PSI_RTOL = 1e-10
# psi = ||x||^2 - alpha, so also bound it relative to ||x||^2
PSI_XRTOL = 1e-8
WIDTH_RTOL = 1e-12
# standalone budget; the HQ loop passes its own (30 by default)
DEFAULT_STEPS = 100


class GtrsError(ArithmeticError):
    """Base class for GTRS solver failures."""


class DegenerateGeometryError(GtrsError):
    """The weighted normal matrix is not positive definite."""


class BracketError(GtrsError):
    """No sign change of psi found while expanding the upper bracket."""


@dataclass(frozen=True)
class SrSystem:
    A: np.ndarray
    b_vec: np.ndarray
    D: np.ndarray
    f: np.ndarray
    d: int
    L: int

    @property
    def psi_tolerance(self) -> float:
        return PSI_RTOL * max(1.0, float(self.b_vec @ self.b_vec))


@dataclass(frozen=True)
class GtrsSolution:
    y: np.ndarray
    chi: float
    psi_residual: float
    bisection_steps: int
    status: str

    @property
    def x(self) -> np.ndarray:
        return self.y[:-1]

    @property
    def alpha(self) -> float:
        return float(self.y[-1])

    @property
    def converged(self) -> bool:
        return self.status == "ok"


def assemble_sr_system(sensors, ranges) -> SrSystem:
    sensors = np.atleast_2d(np.asarray(sensors, dtype=float))
    ranges = np.asarray(ranges, dtype=float).ravel()
    n_sensors, d = sensors.shape
    if ranges.shape[0] != n_sensors:
        raise ValueError(f"{n_sensors} sensors but {ranges.shape[0]} ranges")
    if n_sensors < d + 1:
        raise ValueError(f"need at least d+1 = {d + 1} sensors, got {n_sensors}")
    if not (np.all(np.isfinite(ranges)) and np.all(ranges >= 0)):
        raise ValueError("ranges must be finite and non-negative")
    if not np.all(np.isfinite(sensors)):
        raise ValueError("sensor positions must be finite")

    A = np.empty((n_sensors, d + 1))
    A[:, :d] = -2.0 * sensors
    A[:, d] = 1.0
    b_vec = ranges**2 - np.einsum("ij,ij->i", sensors, sensors)
    D = np.diag(np.r_[np.ones(d), 0.0])
    f = np.zeros(d + 1)
    f[d] = -0.5
    return SrSystem(A=A, b_vec=b_vec, D=D, f=f, d=d, L=n_sensors)


def max_generalized_eigenvalue(U, V) -> float:
    """Largest eigenvalue of ``V^{-1/2} U V^{-1/2}`` for symmetric ``U`` and PD ``V``."""
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if U.ndim != 2 or U.shape != V.shape or U.shape[0] != U.shape[1]:
        raise ValueError(f"U and V must be square and equal-sized, got {U.shape} and {V.shape}")
    lam, ok = kernels.max_gen_eig(np.ascontiguousarray(U), np.ascontiguousarray(V))
    if not ok:
        raise DegenerateGeometryError("V is not positive definite")
    return float(lam)


def floor_weights(w) -> np.ndarray:
    w = np.asarray(w, dtype=float).ravel()
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    return np.maximum(w, WEIGHT_FLOOR)


def _weights(sys: SrSystem, w) -> np.ndarray:
    if w is None:
        return np.ones(sys.L)
    w = floor_weights(w)
    if w.shape[0] != sys.L:
        raise ValueError(f"expected {sys.L} weights, got {w.shape[0]}")
    return w


def y_hat(sys: SrSystem, w, chi: float) -> np.ndarray:
    """Stationary point ``(A^T W^2 A + chi D)^{-1} (A^T W^2 b - chi f)``."""
    w = _weights(sys, w)
    Aw = sys.A * (w * w)[:, None]
    H = Aw.T @ sys.A + chi * sys.D
    rhs = Aw.T @ sys.b_vec - chi * sys.f
    try:
        c = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        raise DegenerateGeometryError(f"system not positive definite at chi={chi!r}") from None
    return np.linalg.solve(c.T, np.linalg.solve(c, rhs))


def psi(sys: SrSystem, w, chi: float) -> float:
    y = y_hat(sys, w, chi)
    return float(y @ sys.D @ y + 2.0 * sys.f @ y)


def admissible_interval(sys: SrSystem, w=None) -> tuple[float, float]:
    """Open interval ``I`` on which ``psi`` is defined and strictly decreasing."""
    w = _weights(sys, w)
    M, _ = kernels.normal_equations(sys.A, sys.b_vec, w)
    return -1.0 / max_generalized_eigenvalue(sys.D, M), np.inf


def initial_bracket(sys: SrSystem, w=None) -> tuple[float, float]:
    """The ``(lo, hi)`` pair the bisection starts from.

    ``lo`` sits just inside ``I``; ``hi`` starts at ``max(1, |lo|)`` and is
    doubled until ``psi(hi) <= 0``.  If ``psi(lo)`` is already negative the
    root lies closer to the boundary: ``lo`` becomes ``hi`` and the offset
    shrinks until ``psi(lo) > 0``.
    """
    w = _weights(sys, w)
    lam_inv = -admissible_interval(sys, w)[0]
    scale = 1.0 + abs(lam_inv)
    offset = LOWER_OFFSET
    lo = -lam_inv + offset * scale
    if psi(sys, w, lo) < 0:
        while True:
            hi, offset = lo, offset * _codes.BOUNDARY_SHRINK
            if offset < _codes.MIN_OFFSET:
                raise BracketError("root is closer to the interval boundary than the smallest offset")
            lo = -lam_inv + offset * scale
            if psi(sys, w, lo) > 0:
                return lo, hi
    hi = max(1.0, abs(lo))
    for _ in range(MAX_DOUBLINGS):
        if psi(sys, w, hi) <= 0:
            return lo, hi
        hi *= 2.0
    if psi(sys, w, hi) <= 0:
        return lo, hi
    raise BracketError(f"psi stayed positive after {MAX_DOUBLINGS} doublings of the upper bracket")


def _solve(A, b_vec, d, w, k_bisect, psi_tol):
    M, g = kernels.normal_equations(A, b_vec, w)
    y, chi, psi_val, steps, status = kernels.gtrs_bisect(
        M, g, d, k_bisect, psi_tol, PSI_XRTOL, WIDTH_RTOL, LOWER_OFFSET, MAX_DOUBLINGS
    )
    if status == _codes.DEGENERATE:
        raise DegenerateGeometryError(
            "weighted normal matrix is not positive definite; sensor geometry is degenerate"
        )
    if status == _codes.NO_UPPER_BRACKET:
        raise BracketError(f"psi stayed positive after {MAX_DOUBLINGS} doublings of the upper bracket")
    return GtrsSolution(
        y=y, chi=float(chi), psi_residual=float(psi_val), bisection_steps=int(steps),
        status=_codes.NAMES[status],
    )


def solve_gtrs(sys: SrSystem, w=None, K: int = DEFAULT_STEPS, tol: float | None = None) -> GtrsSolution:
    """Solve the weighted SR-LS problem exactly up to the bisection budget.

    Parameters
    ----------
    sys : SrSystem
        Output of :func:`assemble_sr_system`.
    w : array_like, optional
        Non-negative per-sensor weights (the diagonal of ``W``).  Floored at
        ``WEIGHT_FLOOR``.  Defaults to all ones.
    K : int
        Maximum number of bisection steps.
    tol : float, optional
        Stop once ``|psi| <= tol``.  Defaults to ``1e-10 * max(1, ||b||^2)``.
        The stop rule additionally requires ``|psi| <= 1e-8 * max(1, ||x||^2)``.

    Raises
    ------
    DegenerateGeometryError
        If ``A^T W^2 A`` is not positive definite.
    BracketError
        If no upper bracket with ``psi < 0`` is found.
    """
    if K < 0:
        raise ValueError("K must be non-negative")
    w = _weights(sys, w)
    if tol is None:
        tol = sys.psi_tolerance
    return _solve(sys.A, sys.b_vec, sys.d, w, int(K), float(tol))


def weighted_sr_cost(x, sensors, ranges, w=None) -> float:
    """``sum_i w_i^2 (||x - x_i||^2 - r_i^2)^2`` evaluated at a position."""
    e = kernels.sr_residuals(np.asarray(x, dtype=float), np.asarray(sensors, dtype=float),
                             np.asarray(ranges, dtype=float))
    if w is None:
        return float(e @ e)
    w = np.asarray(w, dtype=float)
    return float(np.sum((w * e) ** 2))

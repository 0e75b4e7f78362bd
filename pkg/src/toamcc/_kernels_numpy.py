"""Pure-numpy kernels.  Signatures mirror ``_kernels_numba`` exactly."""

import numpy as np
import scipy.linalg

from ._codes import (
    BOUNDARY, BOUNDARY_SHRINK, DEGENERATE, MAX_STEPS, MIN_OFFSET, NO_UPPER_BRACKET, OK,
    P_TINY,
)


def sr_residuals(x, sensors, ranges):
    diff = x[None, :] - sensors
    return ranges * ranges - np.einsum("ij,ij->i", diff, diff)


def auxiliary(residuals, sigma):
    with np.errstate(over="ignore"):
        return -np.maximum(np.exp(-(residuals * residuals) / (2.0 * sigma * sigma)), P_TINY)


def normal_equations(A, b, w):
    Aw = A * (w * w)[:, None]
    M = Aw.T @ A
    M = 0.5 * (M + M.T)
    return M, Aw.T @ b


def max_gen_eig(U, V):
    try:
        vals = scipy.linalg.eigh(U, V, eigvals_only=True)
    except np.linalg.LinAlgError:
        return np.nan, False
    return vals[-1], True


def _y_psi(M, g, d, chi):
    n = M.shape[0]
    H = M.copy()
    H[np.arange(d), np.arange(d)] += chi
    rhs = g.copy()
    rhs[n - 1] += 0.5 * chi
    try:
        c = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        return rhs, np.nan, False
    y = scipy.linalg.cho_solve((c, True), rhs)
    return y, float(y[:d] @ y[:d] - y[n - 1]), True


def _tol(psi_tol, x_rtol, y, d):
    return min(psi_tol, x_rtol * max(1.0, float(y[:d] @ y[:d])))


def gtrs_bisect(M, g, d, k_max, psi_tol, x_rtol, width_rtol, delta, max_doublings):
    n = M.shape[0]
    D = np.diag(np.r_[np.ones(d), np.zeros(n - d)])
    lam, ok = max_gen_eig(D, M)
    if not ok or not lam > 0.0:
        return np.zeros(n), np.nan, np.nan, 0, DEGENERATE
    inv = 1.0 / lam
    scale = 1.0 + abs(inv)
    offset = delta
    lo = -inv + offset * scale
    y_lo, psi_lo, ok = _y_psi(M, g, d, lo)
    if not ok:
        return np.zeros(n), lo, np.nan, 0, DEGENERATE
    if abs(psi_lo) <= _tol(psi_tol, x_rtol, y_lo, d):
        return y_lo, lo, psi_lo, 0, OK

    have_hi = False
    # psi(lo) < 0: the root hugs the boundary, so walk lo towards it
    while psi_lo < 0.0:
        have_hi = True
        hi, y_hi, psi_hi = lo, y_lo, psi_lo
        offset *= BOUNDARY_SHRINK
        if offset < MIN_OFFSET:
            return y_hi, hi, psi_hi, 0, BOUNDARY
        lo = -inv + offset * scale
        y_lo, psi_lo, ok = _y_psi(M, g, d, lo)
        if not ok:
            return y_hi, hi, psi_hi, 0, BOUNDARY

    if not have_hi:
        hi = max(1.0, abs(lo))
        y_hi, psi_hi, ok = _y_psi(M, g, d, hi)
        doublings = 0
        while ok and psi_hi > 0.0:
            if doublings == max_doublings:
                return y_hi, hi, psi_hi, 0, NO_UPPER_BRACKET
            hi *= 2.0
            doublings += 1
            y_hi, psi_hi, ok = _y_psi(M, g, d, hi)
        if not ok:
            return np.zeros(n), hi, np.nan, 0, DEGENERATE

    best = (y_hi, hi, psi_hi) if abs(psi_hi) <= abs(psi_lo) else (y_lo, lo, psi_lo)
    steps = 0
    status = OK if abs(best[2]) <= _tol(psi_tol, x_rtol, best[0], d) else MAX_STEPS
    while status != OK and steps < k_max:
        mid = 0.5 * (lo + hi)
        y_mid, psi_mid, ok = _y_psi(M, g, d, mid)
        steps += 1
        if not ok:
            return best[0], best[1], best[2], steps, DEGENERATE
        if abs(psi_mid) <= abs(best[2]):
            best = (y_mid, mid, psi_mid)
        if abs(psi_mid) <= _tol(psi_tol, x_rtol, y_mid, d):
            status = OK
        elif psi_mid > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= width_rtol * (1.0 + abs(mid)):
            status = OK
    return best[0], best[1], best[2], steps, status


def silverman(residuals, count, floor):
    q75, q25 = np.percentile(residuals, [75.0, 25.0])
    sigma = 1.06 * min(float(np.std(residuals, ddof=1)), (q75 - q25) / 1.34) * count ** (-0.2)
    return max(sigma, floor)


def conjugate(p):
    q = -p
    safe = np.where(q > 0, q, 1.0)
    return np.where(q > 0, q * np.log(safe) + p, 0.0)


def augmented(residuals, p, sigma):
    total = -float(np.sum(conjugate(p)))
    if sigma > 0.0:
        total += float(np.sum(p * residuals * residuals)) / (2.0 * sigma * sigma)
    return total


def correntropy(residuals, sigma):
    return float(np.sum(np.exp(-(residuals * residuals) / (2.0 * sigma * sigma))))

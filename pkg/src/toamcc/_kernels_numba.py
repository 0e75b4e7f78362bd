"""numba kernels.  Signatures mirror ``_kernels_numpy`` exactly.

No ``fastmath``: the bisection relies on IEEE ordering of psi values.
"""

import numpy as np
from numba import njit

from ._codes import (
    BOUNDARY, BOUNDARY_SHRINK, DEGENERATE, MAX_STEPS, MIN_OFFSET, NO_UPPER_BRACKET, OK,
    P_TINY,
)

_OPTS = dict(cache=True, nogil=True)


@njit(**_OPTS)
def sr_residuals(x, sensors, ranges):
    n_sensors, d = sensors.shape
    out = np.empty(n_sensors)
    for i in range(n_sensors):
        s = 0.0
        for j in range(d):
            t = x[j] - sensors[i, j]
            s += t * t
        out[i] = ranges[i] * ranges[i] - s
    return out


@njit(**_OPTS)
def auxiliary(residuals, sigma):
    n = residuals.shape[0]
    out = np.empty(n)
    two_s2 = 2.0 * sigma * sigma
    for i in range(n):
        e = residuals[i]
        out[i] = -max(np.exp(-(e * e) / two_s2), P_TINY)
    return out


@njit(**_OPTS)
def normal_equations(A, b, w):
    n_rows, n = A.shape
    M = np.zeros((n, n))
    g = np.zeros(n)
    for i in range(n_rows):
        wi2 = w[i] * w[i]
        for j in range(n):
            aij = wi2 * A[i, j]
            g[j] += aij * b[i]
            for k in range(j, n):
                M[j, k] += aij * A[i, k]
    for j in range(n):
        for k in range(j):
            M[j, k] = M[k, j]
    return M, g


@njit(**_OPTS)
def _cholesky(H, out):
    """Lower Cholesky factor of ``H`` into ``out``; False if not PD."""
    n = H.shape[0]
    for j in range(n):
        s = H[j, j]
        for k in range(j):
            s -= out[j, k] * out[j, k]
        if not s > 0.0:
            return False
        ljj = np.sqrt(s)
        out[j, j] = ljj
        for i in range(j + 1, n):
            t = H[i, j]
            for k in range(j):
                t -= out[i, k] * out[j, k]
            out[i, j] = t / ljj
        for i in range(j):
            out[i, j] = 0.0
    return True


@njit(**_OPTS)
def _forward(Lc, rhs):
    n = Lc.shape[0]
    z = np.empty(n)
    for i in range(n):
        t = rhs[i]
        for k in range(i):
            t -= Lc[i, k] * z[k]
        z[i] = t / Lc[i, i]
    return z


@njit(**_OPTS)
def _backward(Lc, z):
    n = Lc.shape[0]
    y = np.empty(n)
    for i in range(n - 1, -1, -1):
        t = z[i]
        for k in range(i + 1, n):
            t -= Lc[k, i] * y[k]
        y[i] = t / Lc[i, i]
    return y


@njit(**_OPTS)
def max_gen_eig(U, V):
    """Largest eigenvalue of V^{-1/2} U V^{-1/2}; (nan, False) if V is not PD."""
    n = V.shape[0]
    Lc = np.zeros((n, n))
    if not _cholesky(V, Lc):
        return np.nan, False
    # C = Lc^{-1} U Lc^{-T} = Lc^{-1} (Lc^{-1} U)^T for symmetric U
    Z = np.empty((n, n))
    for c in range(n):
        Z[:, c] = _forward(Lc, U[:, c].copy())
    C = np.empty((n, n))
    Zt = Z.T.copy()
    for c in range(n):
        C[:, c] = _forward(Lc, Zt[:, c].copy())
    C = 0.5 * (C + C.T)
    return np.linalg.eigvalsh(C)[-1], True


@njit(**_OPTS)
def _y_psi(M, g, d, chi, Lc):
    n = M.shape[0]
    H = M.copy()
    for j in range(d):
        H[j, j] += chi
    rhs = g.copy()
    rhs[n - 1] += 0.5 * chi
    if not _cholesky(H, Lc):
        return rhs, np.nan, False
    y = _backward(Lc, _forward(Lc, rhs))
    psi = -y[n - 1]
    for j in range(d):
        psi += y[j] * y[j]
    return y, psi, True


@njit(**_OPTS)
def _tol(psi_tol, x_rtol, y, d):
    xx = 0.0
    for j in range(d):
        xx += y[j] * y[j]
    return min(psi_tol, x_rtol * max(1.0, xx))


@njit(**_OPTS)
def gtrs_bisect(M, g, d, k_max, psi_tol, x_rtol, width_rtol, delta, max_doublings):
    """Bisection on psi over I = (-1/lambda_max(D, M), inf).

    Returns (y, chi, psi, steps, status).
    """
    n = M.shape[0]
    D = np.zeros((n, n))
    for j in range(d):
        D[j, j] = 1.0
    Lc = np.zeros((n, n))
    lam, ok = max_gen_eig(D, M)
    if not ok or not lam > 0.0:
        return np.zeros(n), np.nan, np.nan, 0, DEGENERATE
    inv = 1.0 / lam
    scale = 1.0 + abs(inv)
    offset = delta
    lo = -inv + offset * scale
    y_lo, psi_lo, ok = _y_psi(M, g, d, lo, Lc)
    if not ok:
        return np.zeros(n), lo, np.nan, 0, DEGENERATE
    if abs(psi_lo) <= _tol(psi_tol, x_rtol, y_lo, d):
        return y_lo, lo, psi_lo, 0, OK

    have_hi = False
    hi = lo
    y_hi = y_lo
    psi_hi = psi_lo
    # psi(lo) < 0: the root hugs the boundary, so walk lo towards it
    while psi_lo < 0.0:
        have_hi = True
        hi, y_hi, psi_hi = lo, y_lo, psi_lo
        offset *= BOUNDARY_SHRINK
        if offset < MIN_OFFSET:
            return y_hi, hi, psi_hi, 0, BOUNDARY
        lo = -inv + offset * scale
        y_lo, psi_lo, ok = _y_psi(M, g, d, lo, Lc)
        if not ok:
            return y_hi, hi, psi_hi, 0, BOUNDARY

    if not have_hi:
        hi = max(1.0, abs(lo))
        y_hi, psi_hi, ok = _y_psi(M, g, d, hi, Lc)
        doublings = 0
        while ok and psi_hi > 0.0:
            if doublings == max_doublings:
                return y_hi, hi, psi_hi, 0, NO_UPPER_BRACKET
            hi *= 2.0
            doublings += 1
            y_hi, psi_hi, ok = _y_psi(M, g, d, hi, Lc)
        if not ok:
            return np.zeros(n), hi, np.nan, 0, DEGENERATE

    best_y, best_chi, best_psi = y_hi, hi, psi_hi
    if abs(psi_lo) < abs(psi_hi):
        best_y, best_chi, best_psi = y_lo, lo, psi_lo
    steps = 0
    status = MAX_STEPS
    if abs(best_psi) <= _tol(psi_tol, x_rtol, best_y, d):
        status = OK
    while status != OK and steps < k_max:
        mid = 0.5 * (lo + hi)
        y_mid, psi_mid, ok = _y_psi(M, g, d, mid, Lc)
        steps += 1
        if not ok:
            return best_y, best_chi, best_psi, steps, DEGENERATE
        if abs(psi_mid) <= abs(best_psi):
            best_y, best_chi, best_psi = y_mid, mid, psi_mid
        if abs(psi_mid) <= _tol(psi_tol, x_rtol, y_mid, d):
            status = OK
        elif psi_mid > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= width_rtol * (1.0 + abs(mid)):
            status = OK
    return best_y, best_chi, best_psi, steps, status


@njit(**_OPTS)
def _quantile_sorted(s, q):
    # numpy's default "linear" method
    h = (s.shape[0] - 1) * q
    lo = int(np.floor(h))
    hi = min(lo + 1, s.shape[0] - 1)
    return s[lo] + (h - lo) * (s[hi] - s[lo])


@njit(**_OPTS)
def silverman(residuals, count, floor):
    n = residuals.shape[0]
    s = np.sort(residuals)
    mean = 0.0
    for i in range(n):
        mean += s[i]
    mean /= n
    ss = 0.0
    for i in range(n):
        ss += (s[i] - mean) * (s[i] - mean)
    std = np.sqrt(ss / (n - 1))
    iqr = _quantile_sorted(s, 0.75) - _quantile_sorted(s, 0.25)
    sigma = 1.06 * min(std, iqr / 1.34) * count ** (-0.2)
    return max(sigma, floor)


@njit(**_OPTS)
def augmented(residuals, p, sigma):
    """Augmented cost; ``sigma <= 0`` encodes an infinite kernel."""
    total = 0.0
    for i in range(p.shape[0]):
        q = -p[i]
        if q > 0.0:
            total -= q * np.log(q) + p[i]
        if sigma > 0.0:
            e = residuals[i]
            total += p[i] * e * e / (2.0 * sigma * sigma)
    return total


@njit(**_OPTS)
def correntropy(residuals, sigma):
    total = 0.0
    two_s2 = 2.0 * sigma * sigma
    for i in range(residuals.shape[0]):
        e = residuals[i]
        total += np.exp(-(e * e) / two_s2)
    return total

"""Both kernel backends against plain-numpy reference expressions."""

import numpy as np
import pytest

from toamcc import _codes, gtrs

from .conftest import random_instance
from .oracles import max_gen_eig_dense


def test_residuals_and_auxiliary(kern, rng):
    _, sensors, ranges = random_instance(rng, 9, nlos=3)
    x = rng.uniform(0, 20, 2)
    e = kern.sr_residuals(x, sensors, ranges)
    np.testing.assert_allclose(e, ranges**2 - np.sum((sensors - x) ** 2, axis=1), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(kern.auxiliary(e, 7.0), -np.exp(-e**2 / 98.0), rtol=1e-12)


def test_auxiliary_never_zero(kern):
    p = kern.auxiliary(np.array([0.0, 1e6, 1e300]), 1.0)
    assert p[0] == -1.0 and np.all(p < 0)


def test_normal_equations(kern, rng):
    A = rng.standard_normal((7, 3))
    b = rng.standard_normal(7)
    w = rng.uniform(0.1, 2.0, 7)
    M, g = kern.normal_equations(A, b, w)
    np.testing.assert_allclose(M, A.T @ np.diag(w**2) @ A, rtol=1e-12)
    np.testing.assert_allclose(g, A.T @ (w**2 * b), rtol=1e-12)


def test_max_gen_eig(kern, rng):
    B = rng.standard_normal((4, 4))
    C = rng.standard_normal((4, 4))
    U, V = B + B.T, C @ C.T + np.eye(4)
    lam, ok = kern.max_gen_eig(U, V)
    assert ok and lam == pytest.approx(max_gen_eig_dense(U, V), rel=1e-10)
    assert not kern.max_gen_eig(U, -V)[1]


def test_silverman(kern, rng):
    e = rng.standard_normal(13) * 4
    q75, q25 = np.percentile(e, [75, 25])
    expected = 1.06 * min(np.std(e, ddof=1), (q75 - q25) / 1.34) * 13 ** -0.2
    assert kern.silverman(e, 13.0, 1e-3) == pytest.approx(expected, rel=1e-12)


def test_augmented_and_correntropy(kern, rng):
    e = rng.standard_normal(6) * 10
    p = -rng.uniform(0.01, 1, 6)
    zeta = -p * np.log(-p) + p
    assert kern.augmented(e, p, 3.0) == pytest.approx(np.sum(p * e**2 / 18.0 - zeta), rel=1e-12)
    assert kern.augmented(e, p, 0.0) == pytest.approx(-np.sum(zeta), rel=1e-12)
    assert kern.correntropy(e, 3.0) == pytest.approx(np.sum(np.exp(-e**2 / 18.0)), rel=1e-12)


def test_bisect_status_codes(kern, rng):
    _, sensors, ranges = random_instance(rng, 6, sigma_g2=1.0)
    sys = gtrs.assemble_sr_system(sensors, ranges)
    M, g = kern.normal_equations(sys.A, sys.b_vec, np.ones(6))
    args = (gtrs.PSI_XRTOL, gtrs.WIDTH_RTOL, gtrs.LOWER_OFFSET, gtrs.MAX_DOUBLINGS)
    assert kern.gtrs_bisect(M, g, 2, 100, sys.psi_tolerance, *args)[4] == _codes.OK
    assert kern.gtrs_bisect(M, g, 2, 0, 1e-300, *args)[4] == _codes.MAX_STEPS
    assert kern.gtrs_bisect(np.zeros((3, 3)), g, 2, 30, 1e-8, *args)[4] == _codes.DEGENERATE

"""Kernel backend selection.

The hot loops (normal-matrix assembly, the GTRS bisection, residual and
auxiliary-variable updates) exist twice: a numba ``@njit`` version and a
vectorised pure-numpy version with the same signatures.  The backend is
picked once, at import time, from the ``TOAMCC_BACKEND`` environment
variable (``numba`` or ``numpy``; default ``numba``).  If numba cannot be
imported the numpy path is used silently.
"""

import os

BACKEND_ENV = "TOAMCC_BACKEND"
_CHOICES = ("numba", "numpy")


def _select():
    requested = os.environ.get(BACKEND_ENV, "numba").strip().lower() or "numba"
    if requested not in _CHOICES:
        raise ValueError(f"{BACKEND_ENV} must be one of {_CHOICES}, got {requested!r}")
    if requested == "numba":
        try:
            from . import _kernels_numba as mod
        except ImportError:
            pass
        else:
            return "numba", mod
    from . import _kernels_numpy as mod

    return "numpy", mod


BACKEND, kernels = _select()


_warm = False


def warmup() -> None:
    """Compile (or load from cache) every kernel so timings exclude JIT cost."""
    global _warm
    if _warm:
        return
    import numpy as np

    from .srmcc import SrMccOptions, sr_mcc_localize

    sensors = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0], [4.0, 4.0]])
    ranges = np.linalg.norm(sensors - np.array([1.0, 2.0]), axis=1) + np.array([0.0, 0.1, 0.0, 2.0])
    sr_mcc_localize(sensors, ranges, SrMccOptions(n_max=3))
    sr_mcc_localize(sensors, ranges, SrMccOptions(n_max=3, fixed_sigma=1.0))
    kernels.max_gen_eig(np.eye(3), np.eye(3))
    kernels.correntropy(ranges, 1.0)
    _warm = True

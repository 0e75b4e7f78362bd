"""Compare the numba and pure-numpy kernel backends.

Each backend runs in its own interpreter because the choice is made once at
import time from ``TOAMCC_BACKEND``.  Reports mean per-fix time of SR-MCC and
SR-LS and per-call time of the two hottest kernels.

    python3 benchmarks/bench_backends.py --fixes 300 --sizes 4,10,100
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from toamcc import _accel, gtrs
from toamcc.scenario import ScenarioParams, make_trial
from toamcc.srmcc import sr_ls_localize, sr_mcc_localize

fixes, sizes = int(sys.argv[1]), [int(s) for s in sys.argv[2].split(",")]
_accel.warmup()
k = _accel.kernels
out = {"backend": _accel.BACKEND, "rows": []}
for L in sizes:
    trials = [make_trial(ScenarioParams(L=L, l_nlos=min(2, L - 3), seed=j)) for j in range(fixes)]
    row = {"L": L}
    for name, fn in (("sr_mcc", sr_mcc_localize), ("sr_ls", sr_ls_localize)):
        fn(trials[0][0].sensors, trials[0][1].ranges)
        t0 = time.perf_counter()
        for sc, rs in trials:
            fn(sc.sensors, rs.ranges)
        row[name] = (time.perf_counter() - t0) / fixes
    sys_ = gtrs.assemble_sr_system(trials[0][0].sensors, trials[0][1].ranges)
    w = np.ones(L)
    reps = 2000
    t0 = time.perf_counter()
    for _ in range(reps):
        M, g = k.normal_equations(sys_.A, sys_.b_vec, w)
    row["normal_equations"] = (time.perf_counter() - t0) / reps
    args = (sys_.d, 30, sys_.psi_tolerance, gtrs.PSI_XRTOL, gtrs.WIDTH_RTOL, gtrs.LOWER_OFFSET, gtrs.MAX_DOUBLINGS)
    t0 = time.perf_counter()
    for _ in range(reps):
        k.gtrs_bisect(M, g, *args)
    row["gtrs_bisect"] = (time.perf_counter() - t0) / reps
    out["rows"].append(row)
print(json.dumps(out))
"""

COLUMNS = ("sr_mcc", "sr_ls", "normal_equations", "gtrs_bisect")


def run_backend(backend, fixes, sizes):
    env = dict(os.environ, TOAMCC_BACKEND=backend)
    res = subprocess.run([sys.executable, "-c", CHILD, str(fixes), sizes], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fixes", type=int, default=300)
    ap.add_argument("--sizes", default="4,10,100")
    args = ap.parse_args(argv)

    results = {b: run_backend(b, args.fixes, args.sizes) for b in ("numba", "numpy")}
    if results["numba"]["backend"] != "numba":
        print("numba is not installed; only the numpy backend was measured")
    print(f"{'L':>5} {'column':>17} {'numba [us]':>12} {'numpy [us]':>12} {'speed-up':>9}")
    for fast, slow in zip(results["numba"]["rows"], results["numpy"]["rows"]):
        for col in COLUMNS:
            a, b = fast[col] * 1e6, slow[col] * 1e6
            print(f"{fast['L']:>5} {col:>17} {a:>12.2f} {b:>12.2f} {b / a:>8.1f}x")


if __name__ == "__main__":
    main()

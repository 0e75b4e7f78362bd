"""``toamcc`` command line: simulate, sweep, locate, bench.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import BACKEND, warmup
from .dataio import DataError, load_range_log, load_reference, load_sensors, write_estimates, write_results
from .evaluation import ESTIMATORS, ResultTable, SweepConfig, rmse, run_sweep, run_trials
from .gtrs import GtrsError
from .scenario import ScenarioParams, make_trial
from .srmcc import SrMccOptions, sr_ls_localize, sr_mcc_localize

OUTPUT_DIR_ENV = "TOAMCC_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
DEFAULT_TRIALS = 3000

_PARAM_FLAGS = {"sigma-g2": "sigma_g2", "b": "b_max", "l-nlos": "l_nlos"}

log = logging.getLogger("toamcc")


class ConfigError(ValueError):
    pass


def _with(args, **changes) -> argparse.Namespace:
    return argparse.Namespace(**{**vars(args), **changes})


def parse_grid(text: str, integer: bool = False) -> tuple:
    """``"1:8"`` (inclusive, step 1), ``"0:1:0.25"``, ``"0.1,0.2"`` or ``"5"``."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1.0
            if step <= 0 or stop < start:
                raise ValueError
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            values = [start + i * step for i in range(n)]
        else:
            values = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse grid {text!r}") from None
    if not values:
        raise ConfigError("empty grid")
    if integer:
        if any(v != int(v) for v in values):
            raise ConfigError(f"grid {text!r} must be integers")
        values = [int(v) for v in values]
    return tuple(sorted(values))


def _estimator_list(text: str) -> tuple[str, ...]:
    names = tuple(n.strip().replace("-", "_") for n in text.split(",") if n.strip())
    if not names or set(names) - set(ESTIMATORS):
        raise ConfigError(f"--estimators must be a comma list drawn from {','.join(ESTIMATORS)}")
    return names


def _options(args) -> SrMccOptions:
    try:
        return SrMccOptions(n_max=args.n_max, gamma=args.gamma, k_bisect=args.k_bisect,
                            fixed_sigma=args.fixed_sigma, sigma_floor=args.sigma_floor)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _params(args) -> ScenarioParams:
    try:
        return ScenarioParams(d=args.d, L=args.n_sensors, region=args.region, sigma_g2=args.sigma_g2,
                              b_max=args.b, l_nlos=args.l_nlos, seed=args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _output_path(args, default_name: str) -> Path:
    if args.output:
        return Path(args.output)
    return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / default_name


def _emit(table: ResultTable, args, name: str) -> Path:
    path = _output_path(args, f"{name}.{args.format}")
    write_results(table, path, args.format, include_timing=not args.no_timing)
    for row in table:
        crlb = "" if row.crlb_rmse is None else f"  crlb={row.crlb_rmse:.4f}"
        param = "" if row.param is None else f"{table.param_name}={row.param:g}  "
        timing = "" if row.mean_fix_time is None else f"  t/fix={row.mean_fix_time * 1e3:.3f} ms"
        print(f"{param}{row.estimator:7s} rmse={row.rmse:.4f}{crlb}{timing}"
              f"  trials={row.trials} excluded={row.excluded}")
    print(f"wrote {path}")
    return path


def cmd_simulate(args) -> int:
    params = _params(args)
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    rows = run_trials(params, args.trials, _estimator_list(args.estimators), _options(args))
    _emit(ResultTable(rows=tuple(rows)), args, "simulate")
    return EXIT_OK


def cmd_sweep(args) -> int:
    field_name = _PARAM_FLAGS[args.param]
    grid = parse_grid(args.grid, integer=field_name == "l_nlos")
    base = _params(_with(args, l_nlos=0) if field_name == "l_nlos" else args)
    try:
        cfg = SweepConfig(base=base, swept_parameter=field_name, grid=grid, trials=args.trials,
                          estimators=_estimator_list(args.estimators), options=_options(args))
        for value in grid:
            replace(base, **{field_name: value})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _emit(run_sweep(cfg), args, "sweep")
    return EXIT_OK


def cmd_locate(args) -> int:
    sensors = load_sensors(args.sensors)
    d = sensors.shape[1]
    rlog = load_range_log(args.ranges, sensors.shape[0], d)
    for fix_id, reason in rlog.rejected:
        print(f"fix {fix_id} rejected: {reason}", file=sys.stderr)
    if not rlog.fixes:
        raise DataError(f"{args.ranges}: no usable fixes")
    names = _estimator_list(args.estimators)
    opts = _options(args)
    truths = load_reference(args.reference) if args.reference else {}

    warmup()
    records = []
    for fix in rlog.fixes:
        used = sensors[np.asarray(fix.sensor_ids) - 1]
        for name in names:
            t0 = time.perf_counter()
            if name == "sr_mcc":
                res = sr_mcc_localize(used, fix.ranges, opts)
            else:
                res = sr_ls_localize(used, fix.ranges, opts.k_bisect)
            dt = time.perf_counter() - t0
            records.append({"fix_id": fix.fix_id, "estimator": name, "x": res.x_hat,
                            "iterations": res.iterations, "converged": res.converged, "fix_time_s": dt})

    path = _output_path(args, "estimates.csv")
    write_estimates(path, records, d)
    for name in names:
        mine = [r for r in records if r["estimator"] == name]
        line = f"{name:7s} fixes={len(mine)}  mean run-time={np.mean([r['fix_time_s'] for r in mine]):.6f} s"
        scored = [r for r in mine if r["fix_id"] in truths]
        if scored:
            err = rmse([r["x"] for r in scored], [truths[r["fix_id"]] for r in scored])
            line += f"  rmse={err:.4f} m over {len(scored)} fixes"
        print(line)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_bench(args) -> int:
    grid = parse_grid(args.l_grid, integer=True)
    if args.fixes < 1:
        raise ConfigError("--fixes must be >= 1")
    opts = _options(args)
    rows = []
    for L in grid:
        params = _params(_with(args, n_sensors=L, l_nlos=min(args.l_nlos, L)))
        trials = [make_trial(replace(params, seed=params.seed + j)) for j in range(args.fixes)]
        warmup()
        sr_mcc_localize(trials[0][0].sensors, trials[0][1].ranges, opts)
        total, iters = 0.0, 0
        for sc, rs in trials:
            t0 = time.perf_counter()
            res = sr_mcc_localize(sc.sensors, rs.ranges, opts)
            total += time.perf_counter() - t0
            iters += res.iterations
        rows.append((L, total / args.fixes, iters / args.fixes, total / iters))

    print(f"backend={BACKEND}  n_max={opts.n_max}  k_bisect={opts.k_bisect}  fixes/L={args.fixes}")
    print(f"{'L':>6} {'t/fix [s]':>12} {'N_HQ':>6} {'t/iter [s]':>12} {'vs linear':>10}")
    L0, t0 = rows[0][0], rows[0][1]
    lines = ["L,mean_fix_time_s,mean_iterations,time_per_iteration_s,ratio_to_linear"]
    for L, t, n, ti in rows:
        # >1 means faster-than-linear growth is violated by that factor
        ratio = (t / t0) / (L / L0)
        print(f"{L:>6d} {t:>12.6f} {n:>6.2f} {ti:>12.6f} {ratio:>10.3f}")
        lines.append(f"{L},{t:.9g},{n:.9g},{ti:.9g},{ratio:.9g}")
    if args.output:
        from .dataio import atomic_write_text

        atomic_write_text(args.output, "\n".join(lines) + "\n")
        print(f"wrote {args.output}")
    return EXIT_OK


def _add_estimator_flags(p):
    g = p.add_argument_group("estimator")
    g.add_argument("--gamma", type=float, default=1e-5, help="step-length tolerance (m)")
    g.add_argument("--n-max", type=int, default=10, help="maximum HQ iterations")
    g.add_argument("--k-bisect", type=int, default=30, help="bisection steps per GTRS solve")
    g.add_argument("--fixed-sigma", type=float, default=None, metavar="SIGMA",
                   help="hold the kernel size fixed instead of Silverman's rule")
    g.add_argument("--sigma-floor", type=float, default=1e-3)
    g.add_argument("--estimators", default="sr_mcc,sr_ls")


def _add_scenario_flags(p):
    g = p.add_argument_group("scenario")
    g.add_argument("-d", "--d", type=int, default=2, help="spatial dimension")
    g.add_argument("-L", "--n-sensors", type=int, default=10)
    g.add_argument("--region", type=float, default=20.0, help="side of the deployment square (m)")
    g.add_argument("--sigma-g2", type=float, default=0.1, help="Gaussian noise variance (m^2)")
    g.add_argument("--b", type=float, default=5.0, help="NLOS bias upper bound (m)")
    g.add_argument("--l-nlos", type=int, default=0, help="number of NLOS paths")
    g.add_argument("--seed", type=int, default=0)


def _add_output_flags(p, formats=True):
    p.add_argument("-o", "--output", default=None,
                   help=f"output file (default: ${OUTPUT_DIR_ENV} or the working directory)")
    if formats:
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--no-timing", action="store_true",
                       help="leave mean_fix_time_s empty so seeded runs give byte-identical files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toamcc", description="Robust TOA localisation (SR-MCC).")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo run at one parameter point")
    _add_scenario_flags(p)
    _add_estimator_flags(p)
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    _add_output_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="Monte Carlo curve over sigma-g2, b or l-nlos")
    _add_scenario_flags(p)
    _add_estimator_flags(p)
    p.add_argument("--param", choices=sorted(_PARAM_FLAGS), required=True)
    p.add_argument("--grid", required=True, help="'1:8', '0:2:0.5', '0.1,0.5' or '5'")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    _add_output_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("locate", help="localise every fix of a recorded range log")
    p.add_argument("--sensors", required=True, help="sensor file (id,x,y[,z])")
    p.add_argument("--ranges", required=True, help="range log (fix_id,sensor_id,range_m)")
    p.add_argument("--reference", default=None, help="ground truth per fix (fix_id,x,y[,z])")
    _add_estimator_flags(p)
    _add_output_flags(p, formats=False)
    p.set_defaults(func=cmd_locate)

    p = sub.add_parser("bench", help="per-fix run-time versus sensor count")
    _add_scenario_flags(p)
    _add_estimator_flags(p)
    p.add_argument("--l-grid", default="10,100,1000")
    p.add_argument("--fixes", type=int, default=200)
    _add_output_flags(p, formats=False)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"toamcc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"toamcc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except GtrsError as exc:
        print(f"toamcc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

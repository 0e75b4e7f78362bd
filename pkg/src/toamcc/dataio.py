"""CSV/JSON file formats: sensor tables, range logs, reference points, results.

All loaders reject malformed input with a :class:`DataError` naming the file
and line.  All writers emit UTF-8 with LF endings and replace the target
atomically.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evaluation import ResultRow, ResultTable

RESULT_HEADER = ("param", "estimator", "rmse_m", "crlb_rmse_m", "mean_fix_time_s", "trials", "excluded")
RANGE_HEADER = ("fix_id", "sensor_id", "range_m")
_AXES = ("x", "y", "z")


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Fix:
    fix_id: int
    sensor_ids: tuple[int, ...]
    ranges: np.ndarray


@dataclass
class RangeLog:
    fixes: list[Fix]
    rejected: list[tuple[int, str]] = field(default_factory=list)

    def __len__(self):
        return len(self.fixes)


def fmt_result(value) -> str:
    """Nine significant digits; ``None`` becomes an empty cell."""
    if value is None:
        return ""
    return format(float(value), ".9g")


def _exact(value: float) -> str:
    return repr(float(value))


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _read_rows(path, points=False):
    """Yield ``(line_number, header, row)``; the header is validated by callers."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot read ({exc.strerror})") from exc
    reader = csv.reader(io.StringIO(text))
    header = None
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        row = [c.strip() for c in row]
        if header is None:
            header = row
            yield line, header, None
            continue
        if len(row) != len(header):
            if points:
                raise DataError(f"{path}:{line}: dimension mismatch, header has {len(header) - 1} "
                                f"coordinates, row has {len(row) - 1}")
            raise DataError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
        yield line, header, row
    if header is None:
        raise DataError(f"{path}: empty file (missing header)")


def _float(path, line, text, what) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"{path}:{line}: {what} {text!r} is not a number") from None
    if not math.isfinite(value):
        raise DataError(f"{path}:{line}: {what} must be finite")
    return value


def _int(path, line, text, what) -> int:
    try:
        return int(text)
    except ValueError:
        raise DataError(f"{path}:{line}: {what} {text!r} is not an integer") from None


def _load_points(path, id_column: str, contiguous: bool) -> dict[int, np.ndarray]:
    points: dict[int, np.ndarray] = {}
    for line, header, row in _read_rows(path, points=True):
        if row is None:
            d = len(header) - 1
            if header[0] != id_column or d not in (2, 3) or tuple(header[1:]) != _AXES[:d]:
                raise DataError(f"{path}:{line}: header must be '{id_column},x,y[,z]', got {','.join(header)!r}")
            continue
        pid = _int(path, line, row[0], id_column)
        if pid in points:
            raise DataError(f"{path}:{line}: duplicate {id_column} {pid}")
        points[pid] = np.array([_float(path, line, c, "coordinate") for c in row[1:]])
    if contiguous and points and sorted(points) != list(range(1, len(points) + 1)):
        raise DataError(f"{path}: {id_column}s must be contiguous from 1")
    return points


def load_sensors(path) -> np.ndarray:
    """Sensor positions ordered by id, shape ``(L, d)``."""
    points = _load_points(path, "id", contiguous=True)
    if not points:
        raise DataError(f"{path}: no sensors")
    return np.vstack([points[i] for i in sorted(points)])


def write_sensors(path, sensors) -> None:
    sensors = np.atleast_2d(np.asarray(sensors, dtype=float))
    d = sensors.shape[1]
    rows = [[i + 1, *map(_exact, s)] for i, s in enumerate(sensors)]
    atomic_write_text(path, _csv_text(("id", *_AXES[:d]), rows))


def load_reference(path) -> dict[int, np.ndarray]:
    """Ground-truth positions keyed by fix id (``fix_id,x,y[,z]``)."""
    return _load_points(path, "fix_id", contiguous=False)


def write_reference(path, truths: dict[int, np.ndarray]) -> None:
    d = len(next(iter(truths.values())))
    rows = [[k, *map(_exact, truths[k])] for k in sorted(truths)]
    atomic_write_text(path, _csv_text(("fix_id", *_AXES[:d]), rows))


def load_range_log(path, L: int, d: int = 2) -> RangeLog:
    """Group range rows into fixes ordered by ``fix_id``.

    Fixes with fewer than ``d + 1`` ranges are not returned; they are listed
    in ``RangeLog.rejected`` with a reason.
    """
    groups: dict[int, dict[int, float]] = {}
    for line, header, row in _read_rows(path):
        if row is None:
            if tuple(header) != RANGE_HEADER:
                raise DataError(f"{path}:{line}: header must be {','.join(RANGE_HEADER)!r}")
            continue
        fix_id = _int(path, line, row[0], "fix_id")
        sid = _int(path, line, row[1], "sensor_id")
        r = _float(path, line, row[2], "range_m")
        if not 1 <= sid <= L:
            raise DataError(f"{path}:{line}: unknown sensor_id {sid} (have {L} sensors)")
        if r < 0:
            raise DataError(f"{path}:{line}: negative range {r}")
        fix = groups.setdefault(fix_id, {})
        if sid in fix:
            raise DataError(f"{path}:{line}: sensor {sid} repeated in fix {fix_id}")
        fix[sid] = r

    log = RangeLog(fixes=[])
    for fix_id in sorted(groups):
        by_sensor = groups[fix_id]
        if len(by_sensor) < d + 1:
            log.rejected.append((fix_id, f"{len(by_sensor)} ranges, need at least {d + 1}"))
            continue
        ids = tuple(sorted(by_sensor))
        log.fixes.append(Fix(fix_id=fix_id, sensor_ids=ids, ranges=np.array([by_sensor[i] for i in ids])))
    return log


def write_range_log(path, fixes) -> None:
    rows = []
    for fix in sorted(fixes, key=lambda f: f.fix_id):
        rows.extend([fix.fix_id, sid, _exact(r)] for sid, r in zip(fix.sensor_ids, fix.ranges))
    atomic_write_text(path, _csv_text(RANGE_HEADER, rows))


def _result_record(row: ResultRow, include_timing: bool) -> dict:
    return {
        "param": row.param,
        "estimator": row.estimator,
        "rmse_m": row.rmse,
        "crlb_rmse_m": row.crlb_rmse,
        "mean_fix_time_s": row.mean_fix_time if include_timing else None,
        "trials": row.trials,
        "excluded": row.excluded,
    }


def _json_number(value):
    return None if value is None else float(fmt_result(value))


def results_text(table: ResultTable, fmt: str = "csv", include_timing: bool = True) -> str:
    if not len(table):
        raise ValueError("refusing to serialise an empty result table")
    records = [_result_record(r, include_timing) for r in table]
    if fmt == "csv":
        rows = [[fmt_result(rec["param"]), rec["estimator"], fmt_result(rec["rmse_m"]),
                 fmt_result(rec["crlb_rmse_m"]), fmt_result(rec["mean_fix_time_s"]),
                 rec["trials"], rec["excluded"]] for rec in records]
        return _csv_text(RESULT_HEADER, rows)
    if fmt == "json":
        for rec in records:
            for key in ("param", "rmse_m", "crlb_rmse_m", "mean_fix_time_s"):
                rec[key] = _json_number(rec[key])
        doc = {"param_name": table.param_name, "columns": list(RESULT_HEADER), "rows": records}
        return json.dumps(doc, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r} (csv or json)")


def write_results(table: ResultTable, path, fmt: str | None = None, include_timing: bool = True) -> None:
    """Serialise a result table; ``fmt`` defaults from the file suffix."""
    path = Path(path)
    if fmt is None:
        fmt = "json" if path.suffix.lower() == ".json" else "csv"
    atomic_write_text(path, results_text(table, fmt, include_timing))


def _opt_float(path, line, text, what):
    return None if text == "" else _float(path, line, text, what)


def load_results(path) -> ResultTable:
    path = Path(path)
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
            rows = tuple(
                ResultRow(param=r["param"], estimator=r["estimator"], rmse=r["rmse_m"],
                          crlb_rmse=r["crlb_rmse_m"], mean_fix_time=r["mean_fix_time_s"],
                          trials=int(r["trials"]), excluded=int(r["excluded"]))
                for r in doc["rows"]
            )
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise DataError(f"{path}: malformed result file ({exc})") from exc
        return ResultTable(rows=rows, param_name=doc.get("param_name"))

    rows = []
    for line, header, row in _read_rows(path):
        if row is None:
            if tuple(header) != RESULT_HEADER:
                raise DataError(f"{path}:{line}: header must be {','.join(RESULT_HEADER)!r}")
            continue
        rows.append(ResultRow(
            param=_opt_float(path, line, row[0], "param"),
            estimator=row[1],
            rmse=_float(path, line, row[2], "rmse_m") if row[2] != "nan" else math.nan,
            crlb_rmse=_opt_float(path, line, row[3], "crlb_rmse_m"),
            mean_fix_time=_opt_float(path, line, row[4], "mean_fix_time_s"),
            trials=_int(path, line, row[5], "trials"),
            excluded=_int(path, line, row[6], "excluded"),
        ))
    return ResultTable(rows=tuple(rows))


ESTIMATE_COLUMNS = ("fix_id", "estimator")


def write_estimates(path, records, d: int) -> None:
    """Per-fix estimates: ``fix_id,estimator,x,y[,z],iterations,converged,fix_time_s``."""
    header = (*ESTIMATE_COLUMNS, *_AXES[:d], "iterations", "converged", "fix_time_s")
    rows = [[r["fix_id"], r["estimator"], *map(fmt_result, r["x"]), r["iterations"],
             int(r["converged"]), fmt_result(r["fix_time_s"])] for r in records]
    atomic_write_text(path, _csv_text(header, rows))


def load_estimates(path) -> list[dict]:
    out = []
    for line, header, row in _read_rows(path):
        if row is None:
            if tuple(header[:2]) != ESTIMATE_COLUMNS:
                raise DataError(f"{path}:{line}: not an estimates file")
            d = len(header) - 5
            continue
        out.append({
            "fix_id": _int(path, line, row[0], "fix_id"),
            "estimator": row[1],
            "x": np.array([_float(path, line, c, "coordinate") for c in row[2:2 + d]]),
            "iterations": _int(path, line, row[2 + d], "iterations"),
            "converged": bool(_int(path, line, row[3 + d], "converged")),
            "fix_time_s": _float(path, line, row[4 + d], "fix_time_s"),
        })
    return out

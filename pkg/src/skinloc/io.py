"""CSV / JSON interchange formats.

Floats are written with ``repr`` so every file reads back bit-for-bit, and
every writer goes through a temp file + rename.
"""
from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .layout import PatchLayout, dumps_layout
from .localization import InterpolatedMap, Prediction
from .metrics import ErrorStats, SnrReport
from .sensing import CalibrationSample, PointLog, ResponseModel
from .sweeps import SweepResult


class FormatError(ValueError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def _read_rows(path, expected: Sequence[str] | None = None) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise FormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if expected is not None and header != list(expected):
        raise FormatError(f"{path}: expected header {','.join(expected)!r}, got {','.join(header)!r}")
    body = rows[1:]
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise FormatError(f"{path}:{i}: expected {len(header)} fields, got {len(r)}")
    return header, body


def _float(path, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise FormatError(f"{path}: not a number: {value!r}") from None


# point logs -----------------------------------------------------------------

def write_point_logs(path, logs: Sequence[PointLog]) -> None:
    n = len(logs[0].readings) if logs else 0
    header = ["probe_x_mm", "probe_y_mm"] + [f"s{i}" for i in range(n)]
    _write_rows(path, header, ([*log.probe_mm, *log.readings] for log in logs))


def read_point_logs(path, n_samples: int = 1) -> list[PointLog]:
    """Point logs from CSV; ``n_samples`` is not stored and must be supplied."""
    header, body = _read_rows(path)
    n = len(header) - 2
    if header[:2] != ["probe_x_mm", "probe_y_mm"] or header[2:] != [f"s{i}" for i in range(n)] or n < 1:
        raise FormatError(f"{path}: point log header must be probe_x_mm,probe_y_mm,s0,...,s{{N-1}}")
    logs = []
    for r in body:
        vals = [_float(path, v) for v in r]
        logs.append(PointLog((vals[0], vals[1]), np.array(vals[2:]), n_samples))
    return logs


# calibration / baseline ------------------------------------------------------

def write_calibration(path, samples: Sequence[CalibrationSample]) -> None:
    _write_rows(path, ["distance_mm", "reading"], ((s.distance_mm, s.reading) for s in samples))


def read_calibration(path) -> list[CalibrationSample]:
    _, body = _read_rows(path, ["distance_mm", "reading"])
    return [CalibrationSample(_float(path, d), _float(path, r)) for d, r in body]


def write_baseline(path, samples) -> None:
    """No-contact samples: one column per sensor, one row per raw sample."""
    arr = np.asarray(samples, dtype=float)
    _write_rows(path, [f"s{i}" for i in range(arr.shape[0])], arr.T.tolist())


def read_baseline(path) -> np.ndarray:
    """Returns ``(n_sensors, n_samples)``."""
    header, body = _read_rows(path)
    if header != [f"s{i}" for i in range(len(header))]:
        raise FormatError(f"{path}: baseline header must be s0,...,s{{N-1}}")
    return np.array([[_float(path, v) for v in r] for r in body]).reshape(len(body), len(header)).T


# models ----------------------------------------------------------------------

MODEL_HEADER = ["baseline", "amplitude", "half_distance_mm", "noise_sigma", "shape"]


def write_model(path, model: ResponseModel) -> None:
    _write_rows(
        path,
        MODEL_HEADER,
        [[model.baseline, model.amplitude, model.half_distance_mm, model.noise_sigma, model.shape]],
    )


def read_model(path) -> ResponseModel:
    _, body = _read_rows(path, MODEL_HEADER)
    if len(body) != 1:
        raise FormatError(f"{path}: expected exactly one model row")
    b, a, d0, s, shape = body[0]
    return ResponseModel(_float(path, b), _float(path, a), _float(path, d0), _float(path, s), shape)


# predictions / errors --------------------------------------------------------

PREDICTION_HEADER = ["sensor_id", "pred_x_mm", "pred_y_mm", "support_count", "eta"]


def write_predictions(path, predictions: Sequence[Prediction]) -> None:
    _write_rows(
        path,
        PREDICTION_HEADER,
        ([p.sensor_id, *p.position_mm, p.support_count, p.eta] for p in predictions),
    )


def read_predictions(path) -> list[Prediction]:
    _, body = _read_rows(path, PREDICTION_HEADER)
    out = []
    for sid, x, y, n, eta in body:
        x, y = _float(path, x), _float(path, y)
        error = "failed" if math.isnan(x) or math.isnan(y) else None
        out.append(Prediction(int(sid), (x, y), int(n), _float(path, eta), error=error))
    return out


def write_errors(path, stats: ErrorStats, truth, predictions: Sequence[Prediction]) -> None:
    by_id = {p.sensor_id: p for p in predictions}
    rows = []
    for sid, err in zip(stats.sensor_ids, stats.per_sensor_error_mm):
        tx, ty = truth.position(sid)
        px, py = by_id[sid].position_mm
        rows.append([sid, tx, ty, px, py, err])
    _write_rows(path, ["sensor_id", "true_x_mm", "true_y_mm", "pred_x_mm", "pred_y_mm", "error_mm"], rows)


def write_summary(path, values: dict) -> None:
    _write_rows(path, ["metric", "value"], values.items())


# snr -------------------------------------------------------------------------

def write_snr(path, report: SnrReport) -> None:
    _write_rows(path, ["sensor_id", "snr_db"], enumerate(report.per_sensor_db))


def read_snr(path) -> list[tuple[int, float]]:
    _, body = _read_rows(path, ["sensor_id", "snr_db"])
    return [(int(s), _float(path, v)) for s, v in body]


# sweeps ----------------------------------------------------------------------

def sweep_rows(result: SweepResult) -> list[list]:
    rows = []
    for r in result.records:
        p1 = int(r.param1) if result.kind == "point_log_count" else r.param1
        p2 = int(r.param2) if result.kind == "point_log_count" else r.param2
        rows.append([p1, p2, r.trial, r.sigma_pe_mm])
    return rows


def write_sweep(path, result: SweepResult) -> None:
    """Long format: ``<param1>,<param2>,trial,sigma_pe_mm`` named after the swept parameters."""
    _write_rows(path, [*result.param_names, "trial", "sigma_pe_mm"], sweep_rows(result))


def write_sweep_rows(path, param_names: Sequence[str], rows: Sequence[Sequence]) -> None:
    _write_rows(path, [*param_names, "trial", "sigma_pe_mm"], rows)


def read_sweep(path) -> tuple[tuple[str, str], list[list]]:
    header, body = _read_rows(path)
    if len(header) != 4 or header[2:] != ["trial", "sigma_pe_mm"]:
        raise FormatError(f"{path}: sweep header must be <param1>,<param2>,trial,sigma_pe_mm")
    integral = header[:2] == ["rows", "cols"]
    rows = []
    for p1, p2, trial, sigma in body:
        conv = int if integral else (lambda v: _float(path, v))
        rows.append([conv(p1), conv(p2), int(trial), _float(path, sigma)])
    return (header[0], header[1]), rows


# maps / layouts --------------------------------------------------------------

def write_map_matrix(path, interp: InterpolatedMap) -> None:
    """Pixel values with x centres in the header row and y centres in column 0."""
    header = ["y_mm\\x_mm"] + [_fmt(x) for x in interp.x_centers_mm]
    rows = ([y, *row] for y, row in zip(interp.y_centers_mm, interp.values))
    _write_rows(path, header, rows)


def read_map_matrix(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    header, body = _read_rows(path)
    x = np.array([_float(path, v) for v in header[1:]])
    y = np.array([_float(path, r[0]) for r in body])
    values = np.array([[_float(path, v) for v in r[1:]] for r in body])
    return x, y, values


def write_layout(path, layout: PatchLayout) -> None:
    atomic_write_text(path, dumps_layout(layout))

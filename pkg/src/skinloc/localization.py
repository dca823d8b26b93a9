"""Per-sensor localization: point log maps, spline upscaling, threshold centroid."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .layout import PatchLayout, ProbePlan
from .sensing import PointLog
from .spline import BicubicSpline, spline_weights

DEFAULT_ETA = 0.65
DEFAULT_PPCM = 128
PLAN_TOL_MM = 1e-6
FLAT_RTOL = 1e-10


class LocalizationError(ValueError):
    pass


class PlanCoverageError(LocalizationError):
    """Point logs do not cover the probe plan exactly once per cell."""


class AmbiguousMapError(LocalizationError):
    """The threshold filter cannot isolate a peak."""


@dataclass(frozen=True)
class PointLogMap:
    sensor_id: int
    values: np.ndarray
    x_mm: np.ndarray
    y_mm: np.ndarray

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def cell_centers_mm(self) -> np.ndarray:
        xx, yy = np.meshgrid(self.x_mm, self.y_mm)
        return np.stack([xx, yy], axis=-1)


@dataclass(frozen=True)
class InterpolatedMap:
    """Spline-upscaled map sampled at pixel centres.

    Pixel ``(i, j)`` is centred at ``origin_mm + pitch * (j, i)``; the pixel
    block is centred on the probe-node hull ``hull_mm = (x0, x1, y0, y1)``.
    """

    sensor_id: int
    pixel_pitch_mm: float
    values: np.ndarray
    origin_mm: tuple[float, float]
    hull_mm: tuple[float, float, float, float]
    spline: BicubicSpline

    @property
    def x_centers_mm(self) -> np.ndarray:
        return self.origin_mm[0] + self.pixel_pitch_mm * np.arange(self.values.shape[1])

    @property
    def y_centers_mm(self) -> np.ndarray:
        return self.origin_mm[1] + self.pixel_pitch_mm * np.arange(self.values.shape[0])


@dataclass(frozen=True)
class Prediction:
    sensor_id: int
    position_mm: tuple[float, float]
    support_count: int
    eta: float
    at_hull_edge: bool = False
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _arrange(logs: Sequence[PointLog], plan: ProbePlan, tol: float = PLAN_TOL_MM) -> np.ndarray:
    """Stack readings into ``(rows, cols, n_sensors)`` keyed on probe position."""
    if not logs:
        raise PlanCoverageError("no point logs supplied")
    n = len(logs[0].readings)
    out = np.full((plan.rows, plan.cols, n), np.nan)
    seen = np.zeros((plan.rows, plan.cols), dtype=bool)
    for log in logs:
        if len(log.readings) != n:
            raise PlanCoverageError(f"point log at {log.probe_mm} has {len(log.readings)} readings, expected {n}")
        px, py = log.probe_mm
        c = int(np.argmin(np.abs(plan.x_mm - px)))
        r = int(np.argmin(np.abs(plan.y_mm - py)))
        if abs(plan.x_mm[c] - px) > tol or abs(plan.y_mm[r] - py) > tol:
            raise PlanCoverageError(f"point log at {log.probe_mm} mm matches no probe plan location")
        if seen[r, c]:
            raise PlanCoverageError(
                f"duplicate point log for cell (row={r}, col={c}) at ({plan.x_mm[c]}, {plan.y_mm[r]}) mm"
            )
        seen[r, c] = True
        out[r, c] = log.readings
    if not seen.all():
        missing = np.argwhere(~seen)
        r, c = (int(v) for v in missing[0])
        more = f" and {len(missing) - 1} more" if len(missing) > 1 else ""
        raise PlanCoverageError(
            f"missing point log for cell (row={r}, col={c}) at ({plan.x_mm[c]}, {plan.y_mm[r]}) mm{more}"
        )
    return out


def build_point_log_map(logs: Sequence[PointLog], plan: ProbePlan, sensor_id: int) -> PointLogMap:
    stacked = _arrange(logs, plan)
    if not 0 <= sensor_id < stacked.shape[2]:
        raise IndexError(f"sensor id {sensor_id} out of range for {stacked.shape[2]} sensors")
    return PointLogMap(sensor_id, stacked[:, :, sensor_id].copy(), plan.x_mm, plan.y_mm)


def _pixel_axis(lo: float, hi: float, pitch: float) -> np.ndarray:
    count = int(math.floor((hi - lo) / pitch + 1e-9)) + 1
    start = lo + 0.5 * ((hi - lo) - (count - 1) * pitch)
    return start + pitch * np.arange(count)


def interpolate(pmap: PointLogMap, pixels_per_cm: float = DEFAULT_PPCM) -> InterpolatedMap:
    """Upscale a point log map with a not-a-knot bicubic spline.

    ``pixels_per_cm`` is a linear density: the pixel pitch is
    ``10 / pixels_per_cm`` mm along both axes.
    """
    if pmap.rows < 2 or pmap.cols < 2:
        raise LocalizationError(f"interpolation needs at least 2 x 2 nodes, got {pmap.rows} x {pmap.cols}")
    if not pixels_per_cm >= 1:
        raise LocalizationError(f"pixels_per_cm must be >= 1, got {pixels_per_cm}")
    pitch = 10.0 / pixels_per_cm
    hull = (float(pmap.x_mm[0]), float(pmap.x_mm[-1]), float(pmap.y_mm[0]), float(pmap.y_mm[-1]))
    px = _pixel_axis(hull[0], hull[1], pitch)
    py = _pixel_axis(hull[2], hull[3], pitch)
    spline = BicubicSpline(pmap.x_mm, pmap.y_mm, pmap.values)
    values = spline_weights(pmap.y_mm, py) @ pmap.values @ spline_weights(pmap.x_mm, px).T
    return InterpolatedMap(pmap.sensor_id, pitch, values, (float(px[0]), float(py[0])), hull, spline)


def threshold_mask(values: np.ndarray, eta: float) -> np.ndarray:
    """Pixels strictly above ``eta * max(values)``."""
    if not 0 < eta <= 1:
        raise ValueError(f"eta must be in (0, 1], got {eta}")
    vmax, vmin = values.max(), values.min()
    # spline round-off leaves ~1e-15 relative ripple on a constant map
    if vmax - vmin <= FLAT_RTOL * max(abs(vmax), abs(vmin)):
        raise AmbiguousMapError("map is flat (max == min); the threshold filter has no peak to isolate")
    return values > eta * vmax


def localize_sensor(interp: InterpolatedMap, eta: float = DEFAULT_ETA) -> Prediction:
    """Unweighted centroid of all pixels above ``eta`` times the map maximum."""
    if interp.values.size == 0:
        raise AmbiguousMapError("interpolated map is empty")
    mask = threshold_mask(interp.values, eta)
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        raise AmbiguousMapError(f"no pixel exceeds eta * max = {eta * interp.values.max()!r}")
    pitch = interp.pixel_pitch_mm
    x = interp.origin_mm[0] + pitch * cols.mean()
    y = interp.origin_mm[1] + pitch * rows.mean()
    x0, x1, y0, y1 = interp.hull_mm
    half = 0.5 * pitch
    edge = bool(x - x0 < half or x1 - x < half or y - y0 < half or y1 - y < half)
    return Prediction(interp.sensor_id, (float(x), float(y)), int(rows.size), float(eta), edge)


def failed_prediction(sensor_id: int, eta: float, exc: Exception) -> Prediction:
    return Prediction(sensor_id, (math.nan, math.nan), 0, float(eta), False, f"{type(exc).__name__}: {exc}")


def localize_all(
    logs: Sequence[PointLog],
    plan: ProbePlan,
    layout: PatchLayout | None = None,
    eta: float = DEFAULT_ETA,
    pixels_per_cm: float = DEFAULT_PPCM,
) -> list[Prediction]:
    """Run map construction, upscaling and centroiding for every sensor.

    A sensor whose map cannot be localized yields a failed ``Prediction``
    (``error`` set, NaN position); the others are unaffected. Plan coverage
    problems affect every sensor and are raised.
    """
    if not 0 < eta <= 1:
        raise ValueError(f"eta must be in (0, 1], got {eta}")
    stacked = _arrange(logs, plan)
    n = stacked.shape[2]
    if layout is not None and layout.n_sensors != n:
        raise PlanCoverageError(f"point logs carry {n} readings but the layout has {layout.n_sensors} sensors")
    out = []
    for sid in range(n):
        pmap = PointLogMap(sid, stacked[:, :, sid], plan.x_mm, plan.y_mm)
        try:
            out.append(localize_sensor(interpolate(pmap, pixels_per_cm), eta))
        except LocalizationError as exc:
            out.append(failed_prediction(sid, eta, exc))
    return out


def infer_plan(logs: Sequence[PointLog], tol: float = PLAN_TOL_MM) -> ProbePlan:
    """Recover the rectilinear probe grid from logged probe positions.

    Coordinates within ``tol`` of each other are one grid line. Raises when
    the positions do not form a full grid (every line pair used once).
    """
    if not logs:
        raise PlanCoverageError("no point logs supplied")

    def lines(coords):
        coords = np.sort(np.asarray(coords, dtype=float))
        keep = np.concatenate([[True], np.diff(coords) > tol])
        return coords[keep]

    probes = np.array([log.probe_mm for log in logs])
    x, y = lines(probes[:, 0]), lines(probes[:, 1])
    if len(x) < 2 or len(y) < 2:
        raise PlanCoverageError(f"probe positions span a {len(y)} x {len(x)} grid; need at least 2 x 2")
    if len(x) * len(y) > 2 * len(logs):
        raise PlanCoverageError(
            f"probe positions are not on a regular grid: {len(logs)} logs use {len(x)} distinct x and "
            f"{len(y)} distinct y coordinates (tolerance {tol} mm); gridded point logs are required"
        )
    return ProbePlan(x, y)

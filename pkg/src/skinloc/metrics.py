"""Signal-to-noise ratio and prediction error statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .layout import SensorSet
from .localization import Prediction
from .sensing import PointLog


@dataclass(frozen=True)
class SnrReport:
    """Per-sensor SNR in dB; undefined entries are NaN with a reason in ``undefined``."""

    per_sensor_db: tuple[float, ...]
    mean_db: float
    undefined: dict[int, str] = field(default_factory=dict)


def snr_db(peak_mean: float, baseline_mean: float, baseline_std: float) -> float:
    """``20 log10((peak_mean - baseline_mean) / baseline_std)``; NaN when undefined."""
    excursion = peak_mean - baseline_mean
    if not baseline_std > 0 or not excursion > 0:
        return math.nan
    return 20.0 * math.log10(excursion / baseline_std)


def compute_snr(baseline_samples, logs: Sequence[PointLog]) -> SnrReport:
    """SNR of each sensor from raw no-contact samples and point log means.

    ``baseline_samples[i]`` holds the raw no-contact readings of sensor ``i``.
    The noise floor is their sample (n - 1) standard deviation; the signal is
    the largest point log mean minus the no-contact mean.
    """
    if not logs:
        raise ValueError("need at least one point log")
    peaks = np.max([log.readings for log in logs], axis=0)
    if len(baseline_samples) != len(peaks):
        raise ValueError(f"baseline covers {len(baseline_samples)} sensors, point logs {len(peaks)}")
    per_sensor, undefined = [], {}
    for i, samples in enumerate(baseline_samples):
        samples = np.asarray(samples, dtype=float)
        if samples.size < 2:
            raise ValueError(f"sensor {i}: need at least 2 baseline samples, got {samples.size}")
        s0 = float(samples.mean())
        sigma0 = float(samples.std(ddof=1))
        value = snr_db(float(peaks[i]), s0, sigma0)
        if math.isnan(value):
            undefined[i] = "zero no-contact noise" if not sigma0 > 0 else "peak does not exceed no-contact mean"
        per_sensor.append(value)
    finite = [v for v in per_sensor if not math.isnan(v)]
    mean = float(np.mean(finite)) if finite else math.nan
    return SnrReport(tuple(per_sensor), mean, undefined)


@dataclass(frozen=True)
class ErrorStats:
    """Euclidean prediction errors and their spread over one patch.

    ``sigma_pe_mm`` is the population standard deviation of the errors about
    their mean; ``rms_error_mm`` is the spread about zero. Failed predictions
    carry NaN errors and are excluded from the summaries.
    """

    sensor_ids: tuple[int, ...]
    per_sensor_error_mm: tuple[float, ...]
    sigma_pe_mm: float
    mean_error_mm: float
    rms_error_mm: float
    failed_ids: tuple[int, ...] = ()


def error_stats(predictions: Sequence[Prediction], truth: SensorSet) -> ErrorStats:
    pred_ids = [p.sensor_id for p in predictions]
    if sorted(pred_ids) != sorted(truth.ids) or len(set(pred_ids)) != len(pred_ids):
        raise ValueError(f"prediction ids {sorted(pred_ids)} do not match sensor ids {sorted(truth.ids)}")
    errors, failed = [], []
    for p in predictions:
        tx, ty = truth.position(p.sensor_id)
        if not p.ok:
            failed.append(p.sensor_id)
            errors.append(math.nan)
            continue
        errors.append(math.hypot(p.position_mm[0] - tx, p.position_mm[1] - ty))
    good = np.array([e for e in errors if not math.isnan(e)])
    if good.size:
        sigma, mean, rms = float(good.std()), float(good.mean()), float(np.sqrt(np.mean(good**2)))
    else:
        sigma = mean = rms = math.nan
    return ErrorStats(tuple(pred_ids), tuple(errors), sigma, mean, rms, tuple(failed))

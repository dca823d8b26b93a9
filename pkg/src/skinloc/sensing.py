"""Sensor response model, simulated acquisition and response fitting."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .layout import PatchLayout, ProbePlan

# Target mean SNR used to set the default noise level (dB).
TARGET_SNR_DB = 64.7
DEFAULT_N_SAMPLES = 50
DEFAULT_JITTER_MM = 2.0

_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def _lorentzian(u):
    return 1.0 / (1.0 + u * u)


def _exponential(u):
    return np.exp2(-u)


# Normalised decay shapes g(d / d0) with g(0) = 1 and g(1) = 1/2.
RESPONSE_SHAPES: dict[str, Callable] = {
    "lorentzian": _lorentzian,
    "exponential": _exponential,
}


def calibrated_noise_sigma(amplitude: float, snr_db: float = TARGET_SNR_DB) -> float:
    """Per-sample noise for which a probe directly on a sensor gives ``snr_db``."""
    return amplitude * 10.0 ** (-snr_db / 20.0)


@dataclass(frozen=True)
class ResponseModel:
    """Mean sensor reading versus probe distance plus per-sample noise.

    ``mean(d) = baseline + amplitude * g(d / half_distance_mm)`` where ``g`` is
    the named shape; the default Lorentzian is ``1 / (1 + u**2)``.
    """

    baseline: float = 0.0
    amplitude: float = 200.0
    half_distance_mm: float = 5.0
    noise_sigma: float = calibrated_noise_sigma(200.0)
    shape: str = "lorentzian"

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        if not self.half_distance_mm > 0:
            raise ValueError(f"half_distance_mm must be > 0, got {self.half_distance_mm}")
        if not self.noise_sigma >= 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.shape not in RESPONSE_SHAPES:
            raise ValueError(f"unknown response shape {self.shape!r}; choose from {sorted(RESPONSE_SHAPES)}")

    def mean(self, distance_mm):
        g = RESPONSE_SHAPES[self.shape]
        return self.baseline + self.amplitude * g(np.asarray(distance_mm, dtype=float) / self.half_distance_mm)


def mean_response(model: ResponseModel, distance_mm: float) -> float:
    if distance_mm < 0:
        raise ValueError(f"distance must be >= 0, got {distance_mm}")
    return float(model.mean(distance_mm))


@dataclass(frozen=True)
class CalibrationSample:
    distance_mm: float
    reading: float

    def __post_init__(self):
        if not self.distance_mm >= 0:
            raise ValueError(f"distance_mm must be >= 0, got {self.distance_mm}")


@dataclass(frozen=True)
class PointLog:
    """One probe touch: nominal probe position and per-sensor mean readings."""

    probe_mm: tuple[float, float]
    readings: np.ndarray
    n_samples: int = 1

    def __post_init__(self):
        r = np.array(self.readings, dtype=float).ravel()
        r.setflags(write=False)
        object.__setattr__(self, "readings", r)
        object.__setattr__(self, "probe_mm", (float(self.probe_mm[0]), float(self.probe_mm[1])))
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")

    def __eq__(self, other):
        if not isinstance(other, PointLog):
            return NotImplemented
        return (
            self.probe_mm == other.probe_mm
            and self.n_samples == other.n_samples
            and self.readings.shape == other.readings.shape
            and bool(np.all(self.readings == other.readings))
        )

    __hash__ = None


class UnidentifiableModelError(ValueError):
    pass


def derive_seed(base_seed: int, index: int) -> int:
    """Per-item seed: ``base XOR (index * golden-ratio constant mod 2**64)``."""
    return (int(base_seed) & _MASK64) ^ ((int(index) * _GOLDEN_GAMMA) & _MASK64)


def _disc_offset(rng: np.random.Generator, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.random())
    theta = 2.0 * np.pi * rng.random()
    return np.array([r * np.cos(theta), r * np.sin(theta)])


def acquire_point_log(
    layout: PatchLayout,
    model: ResponseModel,
    probe_mm,
    n_samples: int = DEFAULT_N_SAMPLES,
    probe_jitter_mm: float = DEFAULT_JITTER_MM,
    rng_seed: int = 0,
    *,
    sensor_positions: np.ndarray | None = None,
) -> PointLog:
    """Simulate one probe touch at the nominal position ``probe_mm``.

    The actual contact point is displaced uniformly within a disc of radius
    ``probe_jitter_mm``. Each sensor reading is the mean of ``n_samples``
    noisy draws around the model response at the contact distance.
    """
    probe = np.asarray(probe_mm, dtype=float)
    if not layout.contains(probe).all():
        raise ValueError(f"probe position {tuple(probe)} is outside the {layout.width_mm} x {layout.height_mm} mm patch")
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    if probe_jitter_mm < 0:
        raise ValueError(f"probe_jitter_mm must be >= 0, got {probe_jitter_mm}")

    if sensor_positions is None:
        sensor_positions = layout.sensors().positions_mm
    rng = np.random.default_rng(rng_seed)
    contact = probe + _disc_offset(rng, probe_jitter_mm)
    distances = np.hypot(*(sensor_positions - contact).T)
    noise = model.noise_sigma * rng.standard_normal((n_samples, len(sensor_positions)))
    readings = model.mean(distances) + noise.mean(axis=0)
    return PointLog(tuple(probe), readings, n_samples)


def simulate_acquisition(
    layout: PatchLayout,
    model: ResponseModel,
    plan: ProbePlan,
    n_samples: int = DEFAULT_N_SAMPLES,
    probe_jitter_mm: float = DEFAULT_JITTER_MM,
    rng_seed: int = 0,
) -> list[PointLog]:
    if len(plan) == 0:
        raise ValueError("probe plan is empty")
    positions = layout.sensors().positions_mm
    return [
        acquire_point_log(
            layout, model, loc, n_samples, probe_jitter_mm, derive_seed(rng_seed, i), sensor_positions=positions
        )
        for i, loc in enumerate(plan.locations_mm)
    ]


def simulate_baseline(
    layout: PatchLayout, model: ResponseModel, n_samples: int = DEFAULT_N_SAMPLES, rng_seed: int = 0
) -> np.ndarray:
    """Raw no-contact samples, shape ``(n_sensors, n_samples)``."""
    rng = np.random.default_rng(derive_seed(rng_seed, -1))
    return model.baseline + model.noise_sigma * rng.standard_normal((layout.n_sensors, n_samples))


def calibration_samples(layout: PatchLayout, logs: Sequence[PointLog]) -> list[CalibrationSample]:
    """Pair every reading with the distance from its probe to its sensor."""
    positions = layout.sensors().positions_mm
    out = []
    for log in logs:
        d = np.hypot(*(positions - np.asarray(log.probe_mm)).T)
        out.extend(CalibrationSample(float(di), float(ri)) for di, ri in zip(d, log.readings))
    return out


def _residual_norm(model: ResponseModel, d: np.ndarray, y: np.ndarray) -> float:
    return float(np.linalg.norm(model.mean(d) - y))


def fit_response_model(
    samples: Sequence[CalibrationSample],
    initial: ResponseModel | None = None,
    *,
    rtol: float = 1e-8,
    max_iter: int = 500,
) -> ResponseModel:
    """Least-squares fit of baseline, amplitude and half distance.

    ``noise_sigma`` of the result is the residual standard deviation (three
    fitted parameters). The shape is taken from ``initial``.
    """
    if initial is None:
        initial = ResponseModel()
    d = np.array([s.distance_mm for s in samples], dtype=float)
    y = np.array([s.reading for s in samples], dtype=float)
    if len(d) < 4:
        raise ValueError(f"need at least 4 calibration samples, got {len(d)}")
    if np.unique(d).size < 2:
        raise UnidentifiableModelError("all samples share one distance; half_distance_mm is unidentifiable")

    g = RESPONSE_SHAPES[initial.shape]

    def residuals(p):
        s0, a, d0 = p
        return s0 + a * g(d / d0) - y

    x0 = np.array([initial.baseline, initial.amplitude, initial.half_distance_mm], dtype=float)
    scale = np.maximum(np.abs(x0), [max(np.std(y), 1.0), max(np.ptp(y), 1.0), 1.0])
    result = least_squares(
        residuals,
        x0,
        bounds=([-np.inf, 0.0, 1e-9], [np.inf, np.inf, np.inf]),
        x_scale=scale,
        xtol=rtol,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=max_iter,
        method="trf",
    )
    s0, a, d0 = (float(v) for v in result.x)
    dof = max(len(y) - 3, 1)
    sigma = float(np.sqrt(np.sum(result.fun**2) / dof))
    fitted = replace(initial, baseline=s0, amplitude=a, half_distance_mm=d0, noise_sigma=sigma)
    if _residual_norm(fitted, d, y) > _residual_norm(initial, d, y):
        return replace(initial, noise_sigma=float(np.sqrt(np.sum((initial.mean(d) - y) ** 2) / dof)))
    return fitted

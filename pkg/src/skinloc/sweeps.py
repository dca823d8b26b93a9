"""Seeded parameter sweeps over the simulate -> localize -> score pipeline.

Trial ``t`` of every cell uses seed ``derive_seed(seed, t)``, so cells share
their random draws and differ only in the swept parameters. Trial 0 runs
with ``seed`` itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .layout import PatchLayout, ProbePlan, uniform_probe_plan
from .localization import (
    DEFAULT_ETA,
    DEFAULT_PPCM,
    LocalizationError,
    PointLogMap,
    _arrange,
    failed_prediction,
    interpolate,
    localize_all,
    localize_sensor,
)
from .metrics import ErrorStats, error_stats
from .sensing import DEFAULT_JITTER_MM, DEFAULT_N_SAMPLES, ResponseModel, derive_seed, simulate_acquisition


@dataclass(frozen=True)
class SweepRecord:
    param1: float
    param2: float
    trial: int
    seed: int
    sigma_pe_mm: float


@dataclass(frozen=True)
class SweepResult:
    """Long-format sweep output plus the per-cell trial means.

    ``failed`` maps a cell ``(param1, param2)`` to the first failure message
    seen there.
    """

    kind: str
    param_names: tuple[str, str]
    cells: tuple[tuple, ...]
    records: tuple[SweepRecord, ...]
    failed: dict = field(default_factory=dict)

    @property
    def seeds(self) -> tuple[int, ...]:
        return tuple(dict.fromkeys(r.seed for r in self.records))

    def mean(self, param1, param2) -> float:
        vals = [r.sigma_pe_mm for r in self.records if r.param1 == param1 and r.param2 == param2]
        vals = [v for v in vals if not math.isnan(v)]
        return float(np.mean(vals)) if vals else math.nan

    def cell_means(self) -> list[float]:
        return [self.mean(a, b) for a, b in self.cells]

    def mean_grid(self) -> tuple[list, list, np.ndarray]:
        """Axes and mean sigma_PE grid, shape ``(len(param1 axis), len(param2 axis))``."""
        p1 = list(dict.fromkeys(a for a, _ in self.cells))
        p2 = list(dict.fromkeys(b for _, b in self.cells))
        return p1, p2, np.array([[self.mean(a, b) for b in p2] for a in p1])


def run_pipeline(
    layout: PatchLayout,
    model: ResponseModel,
    plan: ProbePlan,
    eta: float = DEFAULT_ETA,
    pixels_per_cm: float = DEFAULT_PPCM,
    n_samples: int = DEFAULT_N_SAMPLES,
    probe_jitter_mm: float = DEFAULT_JITTER_MM,
    seed: int = 0,
) -> ErrorStats:
    """One simulated acquisition, localized and scored against the layout."""
    logs = simulate_acquisition(layout, model, plan, n_samples, probe_jitter_mm, seed)
    predictions = localize_all(logs, plan, layout, eta, pixels_per_cm)
    return error_stats(predictions, layout.sensors())


def _note_failure(failed: dict, cell, stats: ErrorStats | None, exc: Exception | None = None):
    if cell in failed:
        return
    if exc is not None:
        failed[cell] = f"{type(exc).__name__}: {exc}"
    elif stats is not None and stats.failed_ids:
        failed[cell] = f"localization failed for sensors {list(stats.failed_ids)}"


def sweep_point_log_count(
    layout: PatchLayout,
    model: ResponseModel,
    counts: Sequence[tuple[int, int]],
    eta: float = DEFAULT_ETA,
    pixels_per_cm: float = DEFAULT_PPCM,
    trials: int = 10,
    seed: int = 0,
    n_samples: int = DEFAULT_N_SAMPLES,
    probe_jitter_mm: float = DEFAULT_JITTER_MM,
) -> SweepResult:
    """Mean sigma_PE as a function of the probe grid size ``(rows, cols)``."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    counts = [(int(r), int(c)) for r, c in counts]
    plans = {rc: uniform_probe_plan(layout, *rc) for rc in counts}
    records, failed = [], {}
    for rc in counts:
        for t in range(trials):
            trial_seed = derive_seed(seed, t)
            try:
                stats = run_pipeline(
                    layout, model, plans[rc], eta, pixels_per_cm, n_samples, probe_jitter_mm, trial_seed
                )
                sigma = stats.sigma_pe_mm
                _note_failure(failed, rc, stats)
            except (LocalizationError, ValueError) as exc:
                sigma = math.nan
                _note_failure(failed, rc, None, exc)
            records.append(SweepRecord(rc[0], rc[1], t, trial_seed, sigma))
    return SweepResult(
        "point_log_count",
        ("rows", "cols"),
        tuple(counts),
        tuple(records),
        failed,
    )


def sweep_eta_resolution(
    layout: PatchLayout,
    model: ResponseModel,
    etas: Sequence[float],
    resolutions: Sequence[float],
    trials: int = 10,
    seed: int = 0,
    rows: int = 5,
    cols: int = 20,
    n_samples: int = DEFAULT_N_SAMPLES,
    probe_jitter_mm: float = DEFAULT_JITTER_MM,
) -> SweepResult:
    """Mean sigma_PE over the Cartesian grid of thresholds and resolutions.

    Each trial acquires one set of point logs and reprocesses it for every
    ``(eta, resolution)`` cell.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    etas = [float(e) for e in etas]
    resolutions = [float(r) for r in resolutions]
    if not etas or any(not 0 < e <= 1 for e in etas):
        raise ValueError(f"eta values must lie in (0, 1], got {etas}")
    if not resolutions or any(not r >= 1 for r in resolutions):
        raise ValueError(f"resolutions must be >= 1 px/cm, got {resolutions}")

    plan = uniform_probe_plan(layout, rows, cols)
    truth = layout.sensors()
    sigma = {}
    failed: dict = {}
    for t in range(trials):
        trial_seed = derive_seed(seed, t)
        stacked = _arrange(simulate_acquisition(layout, model, plan, n_samples, probe_jitter_mm, trial_seed), plan)
        for res in resolutions:
            per_eta = {e: [] for e in etas}
            for sid in range(stacked.shape[2]):
                pmap = PointLogMap(sid, stacked[:, :, sid], plan.x_mm, plan.y_mm)
                try:
                    interp = interpolate(pmap, res)
                except LocalizationError as exc:
                    for e in etas:
                        per_eta[e].append(failed_prediction(sid, e, exc))
                    continue
                for e in etas:
                    try:
                        per_eta[e].append(localize_sensor(interp, e))
                    except LocalizationError as exc:
                        per_eta[e].append(failed_prediction(sid, e, exc))
            for e in etas:
                stats = error_stats(per_eta[e], truth)
                _note_failure(failed, (e, res), stats)
                sigma[(e, res, t)] = (trial_seed, stats.sigma_pe_mm)

    records = [
        SweepRecord(e, res, t, *sigma[(e, res, t)]) for e in etas for res in resolutions for t in range(trials)
    ]
    return SweepResult(
        "eta_resolution",
        ("eta", "ppcm"),
        tuple((e, r) for e in etas for r in resolutions),
        tuple(records),
        failed,
    )

"""Localization of concealed sensors in variable-density capacitive skin patches."""
from .layout import (
    PatchLayout,
    ProbePlan,
    SensorSet,
    load_layout,
    make_patch_a,
    make_patch_b,
    uniform_probe_plan,
)
from .localization import (
    InterpolatedMap,
    PointLogMap,
    Prediction,
    build_point_log_map,
    infer_plan,
    interpolate,
    localize_all,
    localize_sensor,
)
from .metrics import ErrorStats, SnrReport, compute_snr, error_stats
from .sensing import (
    CalibrationSample,
    PointLog,
    ResponseModel,
    acquire_point_log,
    fit_response_model,
    mean_response,
    simulate_acquisition,
)
from .sweeps import SweepResult, run_pipeline, sweep_eta_resolution, sweep_point_log_count

__version__ = "0.1.0"

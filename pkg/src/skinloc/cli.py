"""Command-line front end.

Exit codes: 0 success, 1 runtime failure, 2 invalid arguments or
preconditions. Failures print one JSON line on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import io as fio
from .layout import ProbePlan, resolve_layout, uniform_probe_plan
from .localization import (
    DEFAULT_ETA,
    DEFAULT_PPCM,
    PointLogMap,
    _arrange,
    infer_plan,
    interpolate,
    localize_all,
    localize_sensor,
)
from .metrics import compute_snr, error_stats
from .sensing import (
    DEFAULT_JITTER_MM,
    DEFAULT_N_SAMPLES,
    RESPONSE_SHAPES,
    ResponseModel,
    calibrated_noise_sigma,
    calibration_samples,
    fit_response_model,
    simulate_acquisition,
    simulate_baseline,
)
from .sweeps import sweep_eta_resolution, sweep_point_log_count

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Invalid arguments or unmet preconditions (exit status 2)."""


@dataclass
class RunConfig:
    layout: str | None = "patch-b"
    eta: float = DEFAULT_ETA
    ppcm: float = DEFAULT_PPCM
    rows: int = 5
    cols: int = 20
    n_samples: int = DEFAULT_N_SAMPLES
    jitter: float = DEFAULT_JITTER_MM
    seed: int = 0
    # response model
    model: str | None = None
    calibration: str | None = None
    model_baseline: float = 0.0
    amplitude: float = 200.0
    half_distance: float = 5.0
    noise_sigma: float | None = None
    shape: str = "lorentzian"
    # inputs / outputs
    logs: str | None = None
    baseline_samples: str | None = None
    out: str | None = None
    layout_out: str | None = None
    baseline_out: str | None = None
    calibration_out: str | None = None
    errors_out: str | None = None
    maps_dir: str | None = None
    plot: bool = False
    # sweeps
    counts: str = "2x5,3x10,4x15,5x20"
    etas: str = "0.4:0.9:0.05"
    resolutions: str = "8,32,128"
    trials: int = 10


CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def _merge_config(args: argparse.Namespace) -> tuple[RunConfig, set[str]]:
    """Defaults, then the JSON config file, then explicit flags."""
    values: dict = {}
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        try:
            with open(cfg_path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {cfg_path}: {exc}") from None
        unknown = set(doc) - CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        values.update(doc)
    values.update({k: v for k, v in vars(args).items() if k in CONFIG_KEYS})
    return RunConfig(**values), set(values)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise UsageError(message)


def _existing(path: str | None, what: str) -> str:
    _require(path is not None, f"--{what} is required")
    _require(Path(path).is_file(), f"{what} file not found: {path}")
    return path


def _load_layout(cfg: RunConfig):
    try:
        return resolve_layout(cfg.layout)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        raise UsageError(f"invalid layout {cfg.layout!r}: {exc}") from None


def _load_model(cfg: RunConfig) -> ResponseModel:
    try:
        if cfg.model:
            return fio.read_model(_existing(cfg.model, "model"))
        sigma = cfg.noise_sigma if cfg.noise_sigma is not None else calibrated_noise_sigma(cfg.amplitude)
        model = ResponseModel(cfg.model_baseline, cfg.amplitude, cfg.half_distance, sigma, cfg.shape)
        if cfg.calibration:
            model = fit_response_model(fio.read_calibration(_existing(cfg.calibration, "calibration")), model)
        return model
    except ValueError as exc:
        raise UsageError(f"invalid response model: {exc}") from None


def _check_pipeline(cfg: RunConfig) -> None:
    _require(0 < cfg.eta <= 1, f"eta must be in (0, 1], got {cfg.eta}")
    _require(cfg.ppcm >= 1, f"ppcm must be >= 1, got {cfg.ppcm}")
    _require(cfg.n_samples >= 1, f"n_samples must be >= 1, got {cfg.n_samples}")
    _require(cfg.jitter >= 0, f"jitter must be >= 0, got {cfg.jitter}")


def _plan(cfg: RunConfig, layout) -> ProbePlan:
    _require(cfg.rows >= 2 and cfg.cols >= 2, f"probe plan needs rows >= 2 and cols >= 2, got rows={cfg.rows} cols={cfg.cols}")
    return uniform_probe_plan(layout, cfg.rows, cfg.cols)


def _out(cfg: RunConfig) -> Path:
    _require(cfg.out is not None, "--out is required")
    return Path(cfg.out)


def _sibling(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


def _report(**values) -> None:
    for k, v in values.items():
        print(f"{k}={fio._fmt(v)}")


# commands --------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig) -> int:
    layout = _load_layout(cfg)
    model = _load_model(cfg)
    _check_pipeline(cfg)
    plan = _plan(cfg, layout)
    out = _out(cfg)

    logs = simulate_acquisition(layout, model, plan, cfg.n_samples, cfg.jitter, cfg.seed)
    fio.write_point_logs(out, logs)
    layout_out = Path(cfg.layout_out) if cfg.layout_out else _sibling(out, ".layout.json")
    fio.write_layout(layout_out, layout)
    baseline_out = Path(cfg.baseline_out) if cfg.baseline_out else _sibling(out, ".baseline.csv")
    fio.write_baseline(baseline_out, simulate_baseline(layout, model, cfg.n_samples, cfg.seed))
    if cfg.calibration_out:
        fio.write_calibration(cfg.calibration_out, calibration_samples(layout, logs))
    _report(point_logs=len(logs), sensors=layout.n_sensors, logs_csv=out, layout_json=layout_out, baseline_csv=baseline_out)
    return EXIT_OK


def cmd_fit(cfg: RunConfig) -> int:
    path = _existing(cfg.calibration, "calibration")
    out = _out(cfg)
    initial = _load_model(RunConfig(**{**vars(cfg), "calibration": None}))
    try:
        samples = fio.read_calibration(path)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _require(len(samples) >= 4, f"need at least 4 calibration samples, got {len(samples)}")
    model = fit_response_model(samples, initial)
    fio.write_model(out, model)
    if cfg.plot:
        from .plotting import plot_calibration

        plot_calibration(samples, model, out.with_suffix(".png"))
    _report(baseline=model.baseline, amplitude=model.amplitude, half_distance_mm=model.half_distance_mm,
            noise_sigma=model.noise_sigma)
    return EXIT_OK


def cmd_snr(cfg: RunConfig) -> int:
    out = _out(cfg)
    try:
        logs = fio.read_point_logs(_existing(cfg.logs, "logs"))
        baseline = fio.read_baseline(_existing(cfg.baseline_samples, "baseline-samples"))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = compute_snr(baseline, logs)
    fio.write_snr(out, report)
    if cfg.plot:
        from .plotting import plot_snr

        plot_snr(report, out.with_suffix(".png"))
    _report(mean_snr_db=report.mean_db, undefined=len(report.undefined))
    return EXIT_OK


def cmd_localize(cfg: RunConfig) -> int:
    _check_pipeline(cfg)
    out = _out(cfg)
    try:
        logs = fio.read_point_logs(_existing(cfg.logs, "logs"), cfg.n_samples)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    layout = _load_layout(cfg) if cfg.layout else None

    plan = infer_plan(logs)
    predictions = localize_all(logs, plan, layout, cfg.eta, cfg.ppcm)
    fio.write_predictions(out, predictions)
    failed = [p.sensor_id for p in predictions if not p.ok]
    summary = {"sensors": len(predictions), "failed": len(failed)}

    if layout is not None:
        truth = layout.sensors()
        stats = error_stats(predictions, truth)
        errors_out = Path(cfg.errors_out) if cfg.errors_out else _sibling(out, ".errors.csv")
        fio.write_errors(errors_out, stats, truth, predictions)
        summary.update(sigma_pe_mm=stats.sigma_pe_mm, mean_error_mm=stats.mean_error_mm, rms_error_mm=stats.rms_error_mm)
        fio.write_summary(_sibling(out, ".summary.csv"), summary)
        if cfg.plot:
            from .plotting import plot_predictions

            plot_predictions(layout, predictions, out.with_suffix(".png"))

    if cfg.maps_dir:
        stacked = _arrange(logs, plan)
        maps_dir = Path(cfg.maps_dir)
        for p in predictions:
            pmap = PointLogMap(p.sensor_id, stacked[:, :, p.sensor_id], plan.x_mm, plan.y_mm)
            interp = interpolate(pmap, cfg.ppcm)
            fio.write_map_matrix(maps_dir / f"sensor_{p.sensor_id:03d}.csv", interp)
            if cfg.plot:
                from .plotting import plot_interpolated_map

                plot_interpolated_map(interp, localize_sensor(interp, cfg.eta) if p.ok else None,
                                      maps_dir / f"sensor_{p.sensor_id:03d}.png")
    _report(**summary)
    return EXIT_OK if not failed else EXIT_RUNTIME


def _parse_counts(text: str) -> list[tuple[int, int]]:
    try:
        counts = [tuple(int(v) for v in item.lower().split("x")) for item in text.split(",") if item.strip()]
    except ValueError:
        raise UsageError(f"counts must look like 2x5,3x10 (rows x cols), got {text!r}") from None
    _require(bool(counts) and all(len(c) == 2 for c in counts), f"counts must look like 2x5,3x10, got {text!r}")
    _require(all(r >= 2 and c >= 2 for r, c in counts), f"every probe grid needs rows >= 2 and cols >= 2: {text!r}")
    return counts


def _parse_floats(text: str, what: str) -> list[float]:
    """Comma list ``a,b,c`` or inclusive range ``start:stop:step``."""
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            n = int(round((stop - start) / step)) + 1
            return [round(start + i * step, 10) for i in range(n)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse {what} {text!r}") from None


def cmd_sweep_count(cfg: RunConfig) -> int:
    layout = _load_layout(cfg)
    model = _load_model(cfg)
    _check_pipeline(cfg)
    counts = _parse_counts(cfg.counts)
    _require(cfg.trials >= 1, f"trials must be >= 1, got {cfg.trials}")
    out = _out(cfg)
    result = sweep_point_log_count(
        layout, model, counts, cfg.eta, cfg.ppcm, cfg.trials, cfg.seed, cfg.n_samples, cfg.jitter
    )
    fio.write_sweep(out, result)
    if cfg.plot:
        from .plotting import plot_count_sweep

        plot_count_sweep(result, out.with_suffix(".png"))
    for (r, c), m in zip(result.cells, result.cell_means()):
        print(f"rows={r} cols={c} mean_sigma_pe_mm={fio._fmt(m)}")
    return EXIT_OK if not result.failed else EXIT_RUNTIME


def cmd_sweep_eta_res(cfg: RunConfig) -> int:
    layout = _load_layout(cfg)
    model = _load_model(cfg)
    _check_pipeline(cfg)
    plan = _plan(cfg, layout)
    etas = _parse_floats(cfg.etas, "etas")
    resolutions = _parse_floats(cfg.resolutions, "resolutions")
    _require(bool(etas) and all(0 < e <= 1 for e in etas), f"eta values must lie in (0, 1]: {etas}")
    _require(bool(resolutions) and all(r >= 1 for r in resolutions), f"resolutions must be >= 1: {resolutions}")
    _require(cfg.trials >= 1, f"trials must be >= 1, got {cfg.trials}")
    out = _out(cfg)
    result = sweep_eta_resolution(
        layout, model, etas, resolutions, cfg.trials, cfg.seed, plan.rows, plan.cols, cfg.n_samples, cfg.jitter
    )
    fio.write_sweep(out, result)
    if cfg.plot:
        from .plotting import plot_eta_resolution_sweep

        plot_eta_resolution_sweep(result, out.with_suffix(".png"))
    eta_axis, res_axis, grid = result.mean_grid()
    for j, res in enumerate(res_axis):
        best = eta_axis[int(np.nanargmin(grid[:, j]))]
        print(f"ppcm={fio._fmt(res)} best_eta={fio._fmt(best)} min_mean_sigma_pe_mm={fio._fmt(np.nanmin(grid[:, j]))}")
    return EXIT_OK if not result.failed else EXIT_RUNTIME


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "snr": cmd_snr,
    "localize": cmd_localize,
    "sweep-count": cmd_sweep_count,
    "sweep-eta-res": cmd_sweep_eta_res,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _Parser(prog="skinloc", description="Localize concealed sensors in mutual-capacitance skin patches.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--layout", default=S, help="patch-a, patch-b or a layout JSON file (default patch-b)")
    common.add_argument("--eta", type=float, default=S, help=f"threshold fraction (default {DEFAULT_ETA})")
    common.add_argument("--ppcm", type=float, default=S, help=f"interpolation pixels per cm (default {DEFAULT_PPCM})")
    common.add_argument("--seed", type=int, default=S, help="base RNG seed (default 0)")
    common.add_argument("--out", default=S, help="output CSV path")
    common.add_argument("--plot", action="store_true", default=S, help="also render a PNG next to the CSV")

    model = _Parser(add_help=False)
    model.add_argument("--model", default=S, help="response model CSV (from `fit`)")
    model.add_argument("--calibration", default=S, help="calibration CSV to fit the model from")
    model.add_argument("--model-baseline", type=float, default=S, help="no-contact reading (default 0)")
    model.add_argument("--amplitude", type=float, default=S, help="peak response above baseline (default 200)")
    model.add_argument("--half-distance", type=float, default=S, help="distance of half response, mm (default 5)")
    model.add_argument("--noise-sigma", type=float, default=S, help="per-sample noise (default: 64.7 dB calibration)")
    model.add_argument("--shape", choices=sorted(RESPONSE_SHAPES), default=S, help="response shape (default lorentzian)")

    acq = _Parser(add_help=False)
    acq.add_argument("--rows", type=int, default=S, help="probe grid rows (default 5)")
    acq.add_argument("--cols", type=int, default=S, help="probe grid columns (default 20)")
    acq.add_argument("--n-samples", type=int, default=S, help="raw samples per point log (default 50)")
    acq.add_argument("--jitter", type=float, default=S, help="probe placement error radius, mm (default 2)")

    p = sub.add_parser("simulate", parents=[common, model, acq], help="simulate point logs")
    p.add_argument("--layout-out", default=S, help="layout JSON path (default <out stem>.layout.json)")
    p.add_argument("--baseline-out", default=S, help="no-contact samples CSV (default <out stem>.baseline.csv)")
    p.add_argument("--calibration-out", default=S, help="also write (distance, reading) calibration samples")

    p = sub.add_parser("fit", parents=[common, model], help="fit the response model to calibration samples")

    p = sub.add_parser("snr", parents=[common], help="per-sensor SNR report")
    p.add_argument("--logs", default=S, help="point log CSV")
    p.add_argument("--baseline-samples", default=S, help="no-contact samples CSV")

    p = sub.add_parser("localize", parents=[common], help="localize sensors from a point log CSV")
    p.add_argument("--logs", default=S, help="point log CSV")
    p.add_argument("--n-samples", type=int, default=S, help="raw samples behind each point log (metadata only)")
    p.add_argument("--errors-out", default=S, help="per-sensor error CSV (default <out stem>.errors.csv)")
    p.add_argument("--maps-dir", default=S, help="export interpolated maps as CSV matrices")

    p = sub.add_parser("sweep-count", parents=[common, model, acq], help="error vs number of point logs")
    p.add_argument("--counts", default=S, help="probe grids, e.g. 2x5,3x10,4x15,5x20")
    p.add_argument("--trials", type=int, default=S, help="seeded trials per cell (default 10)")

    p = sub.add_parser("sweep-eta-res", parents=[common, model, acq], help="error vs threshold and resolution")
    p.add_argument("--etas", default=S, help="list a,b,c or range start:stop:step (default 0.4:0.9:0.05)")
    p.add_argument("--resolutions", default=S, help="px/cm list (default 8,32,128)")
    p.add_argument("--trials", type=int, default=S, help="seeded trials per cell (default 10)")
    return parser


def _fail(kind: str, message: str, status: int) -> int:
    print(json.dumps({"error": kind, "message": " ".join(str(message).split())}), file=sys.stderr)
    return status


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg, explicit = _merge_config(args)
        if args.command == "localize" and "layout" not in explicit:
            # ground truth is optional here
            cfg.layout = None
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        return _fail("invalid_argument", str(exc), EXIT_USAGE)
    except (ValueError, OSError, ArithmeticError) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())

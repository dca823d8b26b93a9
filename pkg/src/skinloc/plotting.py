"""Report figures. Each function renders one PNG next to a CSV report."""
from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure
from matplotlib.patches import Rectangle

from .layout import PatchLayout
from .localization import InterpolatedMap, PointLogMap, Prediction
from .metrics import SnrReport
from .sensing import CalibrationSample, ResponseModel
from .sweeps import SweepResult

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}

PATCH_ASPECT = 152.4 / 25.4


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata={"Software": None})
    return path


def _patch_axes(layout: PatchLayout, width: float = 8.0):
    fig = Figure(figsize=(width, width / PATCH_ASPECT + 0.9))
    ax = fig.add_subplot()
    ax.add_patch(Rectangle((0, 0), layout.width_mm, layout.height_mm, fill=False, lw=1.0, color="0.3"))
    ax.set_xlim(-2, layout.width_mm + 2)
    ax.set_ylim(-2, layout.height_mm + 2)
    ax.set_aspect("equal")
    ax.set_xlabel("x (mm)")
    ax.set_ylabel("y (mm)")
    return fig, ax


def plot_predictions(layout: PatchLayout, predictions: list[Prediction], path) -> Path:
    with matplotlib.rc_context(RC):
        fig, ax = _patch_axes(layout)
        truth = layout.sensors().positions_mm
        ax.scatter(truth[:, 0], truth[:, 1], marker="+", s=40, c="k", lw=1, label="true")
        good = np.array([p.position_mm for p in predictions if p.ok]).reshape(-1, 2)
        ax.scatter(good[:, 0], good[:, 1], s=12, facecolors="none", edgecolors="tab:red", label="predicted")
        for p in predictions:
            if p.ok:
                tx, ty = truth[p.sensor_id]
                ax.plot([tx, p.position_mm[0]], [ty, p.position_mm[1]], c="tab:red", lw=0.6)
        ax.legend(loc="upper right", ncol=2, frameon=False, bbox_to_anchor=(1.0, 1.25))
        return _save(fig, path)


def plot_point_log_map(pmap: PointLogMap, path) -> Path:
    with matplotlib.rc_context(RC):
        fig = Figure(figsize=(8, 2.2))
        ax = fig.add_subplot()
        im = ax.pcolormesh(pmap.x_mm, pmap.y_mm, pmap.values, shading="nearest", cmap="viridis")
        ax.set_aspect("equal")
        ax.set_title(f"sensor {pmap.sensor_id}: point log map")
        ax.set_xlabel("x (mm)")
        ax.set_ylabel("y (mm)")
        fig.colorbar(im, ax=ax, shrink=0.8, label="reading")
        return _save(fig, path)


def plot_interpolated_map(interp: InterpolatedMap, prediction: Prediction | None, path) -> Path:
    with matplotlib.rc_context(RC):
        fig = Figure(figsize=(8, 2.2))
        ax = fig.add_subplot()
        x, y = interp.x_centers_mm, interp.y_centers_mm
        im = ax.pcolormesh(x, y, interp.values, shading="nearest", cmap="viridis", rasterized=True)
        if prediction is not None and prediction.ok:
            level = prediction.eta * interp.values.max()
            if interp.values.min() < level:
                ax.contour(x, y, interp.values, levels=[level], colors="w", linewidths=0.8)
            ax.plot(*prediction.position_mm, "r+", ms=8)
            ax.set_title(f"sensor {interp.sensor_id}: eta = {prediction.eta:g}, {prediction.support_count} px")
        ax.set_aspect("equal")
        ax.set_xlabel("x (mm)")
        ax.set_ylabel("y (mm)")
        fig.colorbar(im, ax=ax, shrink=0.8, label="interpolated reading")
        return _save(fig, path)


def plot_calibration(samples: list[CalibrationSample], model: ResponseModel, path) -> Path:
    with matplotlib.rc_context(RC):
        fig = Figure(figsize=(5, 3.5))
        ax = fig.add_subplot()
        d = np.array([s.distance_mm for s in samples])
        r = np.array([s.reading for s in samples])
        ax.scatter(d, r, s=4, alpha=0.4, c="0.3", lw=0)
        grid = np.linspace(0, max(d.max(), 1e-9), 400)
        ax.plot(grid, model.mean(grid), c="tab:red", lw=1.2,
                label=f"A={model.amplitude:.4g}, d0={model.half_distance_mm:.3g} mm")
        ax.set_xlabel("probe-sensor distance (mm)")
        ax.set_ylabel("reading")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_snr(report: SnrReport, path) -> Path:
    with matplotlib.rc_context(RC):
        fig = Figure(figsize=(6, 3))
        ax = fig.add_subplot()
        ax.bar(np.arange(len(report.per_sensor_db)), report.per_sensor_db, color="tab:blue")
        ax.axhline(report.mean_db, c="k", lw=0.8, ls="--", label=f"mean {report.mean_db:.1f} dB")
        ax.set_xlabel("sensor id")
        ax.set_ylabel("SNR (dB)")
        ax.legend(frameon=False, loc="lower right")
        return _save(fig, path)


def plot_count_sweep(result: SweepResult, path) -> Path:
    with matplotlib.rc_context(RC):
        fig = Figure(figsize=(5, 3.5))
        ax = fig.add_subplot()
        n = [r * c for r, c in result.cells]
        per_cell = [
            [rec.sigma_pe_mm for rec in result.records if (rec.param1, rec.param2) == cell] for cell in result.cells
        ]
        ax.plot(n, result.cell_means(), "o-", c="tab:blue", label="mean over trials")
        for ni, vals in zip(n, per_cell):
            ax.scatter([ni] * len(vals), vals, s=6, c="0.6", lw=0)
        ax.set_xlabel("number of point logs")
        ax.set_ylabel(r"$\sigma_{PE}$ (mm)")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_eta_resolution_sweep(result: SweepResult, path) -> Path:
    with matplotlib.rc_context(RC):
        etas, res, grid = result.mean_grid()
        fig = Figure(figsize=(5, 3.5))
        ax = fig.add_subplot()
        im = ax.pcolormesh(np.arange(len(res)), etas, grid, shading="nearest", cmap="magma_r")
        ax.set_xticks(np.arange(len(res)), [f"{r:g}" for r in res])
        ax.set_xlabel("interpolation resolution (px/cm)")
        ax.set_ylabel(r"threshold $\eta$")
        best = np.nanargmin(grid, axis=0)
        ax.plot(np.arange(len(res)), np.asarray(etas)[best], "c^", ms=5)
        fig.colorbar(im, ax=ax, label=r"mean $\sigma_{PE}$ (mm)")
        return _save(fig, path)

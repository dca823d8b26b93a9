import json

import numpy as np
import pytest

from skinloc import io as fio
from skinloc.cli import main
from skinloc.layout import make_patch_b, uniform_probe_plan
from skinloc.localization import localize_all
from skinloc.metrics import error_stats
from skinloc.sensing import ResponseModel, calibration_samples, simulate_acquisition


def run(capsys, *argv):
    status = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return status, out, err


@pytest.fixture
def simulated(tmp_path, capsys):
    logs = tmp_path / "logs.csv"
    status, _, _ = run(capsys, "simulate", "--layout", "patch-b", "--rows", 5, "--cols", 20, "--seed", 7, "--out", logs)
    assert status == 0
    return logs


def test_simulate_outputs(simulated):
    lines = simulated.read_text().splitlines()
    assert len(lines) == 101
    assert len(lines[0].split(",")) == 32
    assert simulated.with_name("logs.layout.json").exists()
    base = fio.read_baseline(simulated.with_name("logs.baseline.csv"))
    assert base.shape == (30, 50)


def test_simulate_deterministic(tmp_path, capsys, simulated):
    again = tmp_path / "again" / "logs.csv"
    run(capsys, "simulate", "--layout", "patch-b", "--seed", 7, "--out", again)
    assert again.read_bytes() == simulated.read_bytes()
    assert again.with_name("logs.layout.json").read_bytes() == simulated.with_name("logs.layout.json").read_bytes()
    assert again.with_name("logs.baseline.csv").read_bytes() == simulated.with_name("logs.baseline.csv").read_bytes()


@pytest.mark.parametrize("argv, needle", [
    (["simulate", "--rows", "1", "--out", "x.csv"], "rows >= 2"),
    (["simulate", "--eta", "1.5", "--out", "x.csv"], "eta"),
    (["simulate", "--layout", "nope.json", "--out", "x.csv"], "layout"),
    (["simulate"], "--out"),
    (["localize", "--logs", "missing.csv", "--out", "p.csv"], "not found"),
    (["sweep-count", "--counts", "2x1", "--out", "s.csv"], "rows >= 2"),
    (["frobnicate"], "invalid choice"),
])
def test_usage_errors(tmp_path, capsys, monkeypatch, argv, needle):
    monkeypatch.chdir(tmp_path)
    status, _, err = run(capsys, *argv)
    assert status == 2
    lines = err.strip().splitlines()
    assert len(lines) == 1
    doc = json.loads(lines[0])
    assert doc["error"] == "invalid_argument" and needle in doc["message"]


def test_localize_roundtrip_matches_in_process(tmp_path, capsys, simulated):
    pred = tmp_path / "pred.csv"
    status, out, _ = run(capsys, "localize", "--logs", simulated, "--layout", simulated.with_name("logs.layout.json"),
                         "--ppcm", 32, "--out", pred)
    assert status == 0
    layout = make_patch_b()
    plan = uniform_probe_plan(layout, 5, 20)
    logs = simulate_acquisition(layout, ResponseModel(), plan, 50, 2.0, 7)
    preds = localize_all(logs, plan, layout, 0.65, 32)
    tmp_ref = tmp_path / "ref.csv"
    fio.write_predictions(tmp_ref, preds)
    assert pred.read_bytes() == tmp_ref.read_bytes()
    stats = error_stats(preds, layout.sensors())
    assert f"sigma_pe_mm={stats.sigma_pe_mm!r}" in out
    assert pred.with_name("pred.errors.csv").exists()


def test_localize_shuffled_rows(tmp_path, capsys, simulated):
    lines = simulated.read_text().splitlines()
    rng = np.random.default_rng(0)
    body = [lines[1 + i] for i in rng.permutation(100)]
    shuffled = tmp_path / "shuffled.csv"
    shuffled.write_text("\n".join([lines[0], *body]) + "\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "localize", "--logs", simulated, "--ppcm", 16, "--out", a)
    run(capsys, "localize", "--logs", shuffled, "--ppcm", 16, "--out", b)
    assert a.read_bytes() == b.read_bytes()


def test_localize_missing_cell(tmp_path, capsys, simulated):
    lines = simulated.read_text().splitlines()
    holed = tmp_path / "holed.csv"
    holed.write_text("\n".join(lines[:24] + lines[25:]) + "\n")
    status, _, err = run(capsys, "localize", "--logs", holed, "--out", tmp_path / "p.csv")
    assert status == 1
    assert "missing point log for cell (row=1, col=3)" in json.loads(err)["message"]


def test_localize_irregular_grid(tmp_path, capsys, patch_b):
    rng = np.random.default_rng(0)
    pts = rng.uniform([5, 5], [145, 20], (100, 2))
    path = tmp_path / "irregular.csv"
    from skinloc.sensing import PointLog

    fio.write_point_logs(path, [PointLog(tuple(p), np.ones(30)) for p in pts])
    status, _, err = run(capsys, "localize", "--logs", path, "--out", tmp_path / "p.csv")
    assert status == 1 and "regular grid" in err


def test_localize_exports_maps_and_plots(tmp_path, capsys, simulated):
    pred = tmp_path / "pred.csv"
    status, _, _ = run(capsys, "localize", "--logs", simulated, "--layout", "patch-b", "--ppcm", 4,
                       "--maps-dir", tmp_path / "maps", "--plot", "--out", pred)
    assert status == 0
    assert pred.with_suffix(".png").stat().st_size > 0
    assert len(list((tmp_path / "maps").glob("sensor_*.csv"))) == 30
    assert len(list((tmp_path / "maps").glob("sensor_*.png"))) == 30


def test_fit_zero_residual(tmp_path, capsys):
    layout = make_patch_b()
    plan = uniform_probe_plan(layout, 5, 20)
    gen = ResponseModel(baseline=12.0, amplitude=180.0, half_distance_mm=6.5, noise_sigma=0.0)
    cal = tmp_path / "cal.csv"
    fio.write_calibration(cal, calibration_samples(layout, simulate_acquisition(layout, gen, plan, 1, 0.0, 0)))
    out = tmp_path / "model.csv"
    status, _, _ = run(capsys, "fit", "--calibration", cal, "--plot", "--out", out)
    assert status == 0
    m = fio.read_model(out)
    assert abs(m.baseline - 12.0) < 1e-6 and abs(m.amplitude - 180.0) < 1e-6 and abs(m.half_distance_mm - 6.5) < 1e-6
    assert out.with_suffix(".png").exists()


def test_snr_command(tmp_path, capsys, simulated):
    out = tmp_path / "snr.csv"
    status, stdout, _ = run(capsys, "snr", "--logs", simulated, "--baseline-samples",
                            simulated.with_name("logs.baseline.csv"), "--out", out)
    assert status == 0
    rows = fio.read_snr(out)
    assert [s for s, _ in rows] == list(range(30))
    assert "mean_snr_db=" in stdout


def test_sweep_count_command(tmp_path, capsys):
    out = tmp_path / "count.csv"
    status, _, _ = run(capsys, "sweep-count", "--counts", "2x5,3x10", "--trials", 2, "--ppcm", 8, "--plot", "--out", out)
    assert status == 0
    names, rows = fio.read_sweep(out)
    assert names == ("rows", "cols")
    assert [r[:3] for r in rows] == [[2, 5, 0], [2, 5, 1], [3, 10, 0], [3, 10, 1]]
    assert out.with_suffix(".png").exists()


def test_sweep_eta_res_command(tmp_path, capsys):
    out = tmp_path / "eta.csv"
    status, stdout, _ = run(capsys, "sweep-eta-res", "--etas", "0.5:0.7:0.1", "--resolutions", "4,8", "--trials", 1,
                            "--plot", "--out", out)
    assert status == 0
    names, rows = fio.read_sweep(out)
    assert names == ("eta", "ppcm") and len(rows) == 6
    assert sorted({r[0] for r in rows}) == [0.5, 0.6, 0.7]
    assert "best_eta=" in stdout and out.with_suffix(".png").exists()


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"rows": 3, "cols": 10, "seed": 4, "layout": "patch-a"}))
    out = tmp_path / "logs.csv"
    assert run(capsys, "simulate", "--config", cfg, "--cols", 12, "--out", out)[0] == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 3 * 12 and len(lines[0].split(",")) == 2 + 22

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colz": 3}))
    status, _, err = run(capsys, "simulate", "--config", bad, "--out", out)
    assert status == 2 and "colz" in err

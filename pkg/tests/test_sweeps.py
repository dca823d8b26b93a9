import numpy as np
import pytest

from skinloc.layout import uniform_probe_plan
from skinloc.sensing import ResponseModel
from skinloc.sweeps import run_pipeline, sweep_eta_resolution, sweep_point_log_count

MODEL = ResponseModel()


def test_count_sweep_deterministic(patch_b):
    a = sweep_point_log_count(patch_b, MODEL, [(3, 10)], trials=1, seed=5, pixels_per_cm=16)
    b = sweep_point_log_count(patch_b, MODEL, [(3, 10)], trials=1, seed=5, pixels_per_cm=16)
    assert a == b
    assert np.array(a.cell_means()).tobytes() == np.array(b.cell_means()).tobytes()


def test_count_singleton_equals_direct_run(patch_b):
    res = sweep_point_log_count(patch_b, MODEL, [(5, 20)], eta=0.65, pixels_per_cm=32, trials=1, seed=11)
    direct = run_pipeline(patch_b, MODEL, uniform_probe_plan(patch_b, 5, 20), 0.65, 32, seed=11)
    assert res.records[0].sigma_pe_mm == direct.sigma_pe_mm
    assert res.seeds == (11,)


def test_count_sweep_shape(patch_b):
    res = sweep_point_log_count(patch_b, MODEL, [(2, 5), (5, 20)], trials=3, seed=0, pixels_per_cm=8)
    assert res.cells == ((2, 5), (5, 20))
    assert len(res.records) == 6
    assert [r.trial for r in res.records] == [0, 1, 2, 0, 1, 2]
    assert not res.failed


def test_count_sweep_rejects(patch_b):
    with pytest.raises(ValueError):
        sweep_point_log_count(patch_b, MODEL, [(1, 5)], trials=1)
    with pytest.raises(ValueError):
        sweep_point_log_count(patch_b, MODEL, [(2, 5)], trials=0)


def test_eta_res_singleton_equals_direct_run(patch_b):
    res = sweep_eta_resolution(patch_b, MODEL, [0.6], [16], trials=1, seed=3)
    direct = run_pipeline(patch_b, MODEL, uniform_probe_plan(patch_b, 5, 20), 0.6, 16, seed=3)
    assert res.records[0].sigma_pe_mm == direct.sigma_pe_mm


def test_eta_res_cells_share_draws(patch_b):
    res = sweep_eta_resolution(patch_b, MODEL, [0.5, 0.7], [8, 16], trials=2, seed=1)
    _, _, grid = res.mean_grid()
    assert grid.shape == (2, 2)
    for (e, r) in res.cells:
        for t in range(2):
            direct = run_pipeline(patch_b, MODEL, uniform_probe_plan(patch_b, 5, 20), e, r, seed=res.seeds[t])
            rec = [x for x in res.records if (x.param1, x.param2, x.trial) == (e, r, t)][0]
            assert rec.sigma_pe_mm == direct.sigma_pe_mm


def test_eta_res_deterministic(patch_b):
    a = sweep_eta_resolution(patch_b, MODEL, [0.6, 0.7], [8], trials=2, seed=9)
    b = sweep_eta_resolution(patch_b, MODEL, [0.6, 0.7], [8], trials=2, seed=9)
    assert a == b


@pytest.mark.parametrize("etas, res", [([0.0], [8]), ([1.1], [8]), ([0.5], [0.5]), ([], [8])])
def test_eta_res_rejects(patch_b, etas, res):
    with pytest.raises(ValueError):
        sweep_eta_resolution(patch_b, MODEL, etas, res, trials=1)


def test_failed_cells_reported(patch_b):
    flat = ResponseModel(amplitude=0.0, noise_sigma=0.0, baseline=5.0)
    res = sweep_eta_resolution(patch_b, flat, [0.6], [8], trials=1)
    assert (0.6, 8.0) in res.failed

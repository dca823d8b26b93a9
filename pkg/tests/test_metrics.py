import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skinloc.layout import SensorSet
from skinloc.localization import Prediction
from skinloc.metrics import compute_snr, error_stats, snr_db
from skinloc.sensing import PointLog


def _baseline_with(mean, std, n=50):
    z = np.random.default_rng(0).standard_normal(n)
    z = (z - z.mean()) / z.std(ddof=1)
    return mean + std * z


@pytest.mark.parametrize("s0, sigma, peak, expected", [
    (500.0, 4.0, 504.0, 0.0),
    (500.0, 4.0, 900.0, 40.0),
    (500.0, 4.0, 700.0, 20 * math.log10(50)),
])
def test_snr_fixtures(s0, sigma, peak, expected):
    assert abs(snr_db(peak, s0, sigma) - expected) <= 1e-9
    report = compute_snr([_baseline_with(s0, sigma)], [PointLog((0, 0), [peak]), PointLog((1, 0), [s0])])
    assert abs(report.per_sensor_db[0] - expected) <= 1e-9
    assert abs(report.mean_db - expected) <= 1e-9


def test_snr_33_98():
    assert round(snr_db(700.0, 500.0, 4.0), 2) == 33.98


def test_snr_uses_sample_std():
    base = [1.0, 3.0]  # sample std sqrt(2)
    r = compute_snr([base], [PointLog((0, 0), [2.0 + math.sqrt(2) * 10])])
    assert abs(r.per_sensor_db[0] - 20.0) < 1e-9


def test_snr_undefined_entries():
    logs = [PointLog((0, 0), [10.0, 1.0, 5.0])]
    r = compute_snr([[2.0, 2.0, 2.0], [3.0, 4.0, 5.0], [1.0, 2.0, 3.0]], logs)
    assert math.isnan(r.per_sensor_db[0]) and "zero" in r.undefined[0]
    assert math.isnan(r.per_sensor_db[1]) and "exceed" in r.undefined[1]
    assert r.mean_db == r.per_sensor_db[2]


def test_snr_preconditions():
    with pytest.raises(ValueError, match="at least 2"):
        compute_snr([[1.0]], [PointLog((0, 0), [3.0])])
    with pytest.raises(ValueError, match="point log"):
        compute_snr([[1.0, 2.0]], [])


@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3), st.floats(-1e4, 1e4))
@settings(max_examples=1000, deadline=None)
def test_snr_scale_translation_invariant(seed, k, c):
    rng = np.random.default_rng(seed)
    base = rng.normal(100.0, 2.0, (4, 20))
    logs = rng.normal(100.0, 30.0, (6, 4))
    logs[0] = 200.0
    ref = compute_snr(base, [PointLog((i, 0), r) for i, r in enumerate(logs)])
    scaled = compute_snr(base * k + c, [PointLog((i, 0), r * k + c) for i, r in enumerate(logs)])
    # a large offset on a tiny spread costs relative precision in the std
    tol = 1e-9 + 1e-13 * abs(c) / k
    np.testing.assert_allclose(scaled.per_sensor_db, ref.per_sensor_db, rtol=0, atol=tol)


# error statistics ------------------------------------------------------------

def _pred(i, x, y):
    return Prediction(i, (x, y), 1, 0.65)


def test_error_table_rows():
    truth = SensorSet(np.array([[5.5, 19.8], [148.4, 7.2]]))
    s = error_stats([_pred(0, 5.5, 21.3), _pred(1, 148.8, 7.4)], truth)
    assert s.per_sensor_error_mm[0] == pytest.approx(1.5, abs=1e-12)
    assert s.per_sensor_error_mm[1] == pytest.approx(math.hypot(0.4, 0.2), abs=1e-12)
    assert round(s.per_sensor_error_mm[1] / 10, 2) == 0.04


def test_error_exact_predictions():
    truth = SensorSet(np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]))
    s = error_stats([_pred(i, *p) for i, p in enumerate(truth.positions_mm)], truth)
    assert s.sigma_pe_mm == 0.0 and s.mean_error_mm == 0.0 and s.rms_error_mm == 0.0


def test_error_single_sensor_sigma_zero():
    s = error_stats([_pred(0, 1.0, 1.0)], SensorSet(np.array([[4.0, 5.0]])))
    assert s.per_sensor_error_mm == (5.0,) and s.sigma_pe_mm == 0.0 and s.rms_error_mm == 5.0


def test_error_population_std():
    truth = SensorSet(np.zeros((3, 2)))
    s = error_stats([_pred(0, 1, 0), _pred(1, 2, 0), _pred(2, 3, 0)], truth)
    assert s.sigma_pe_mm == pytest.approx(np.std([1, 2, 3]))
    assert s.rms_error_mm == pytest.approx(np.sqrt(14 / 3))


def test_error_id_mismatch():
    with pytest.raises(ValueError, match="do not match"):
        error_stats([_pred(0, 0, 0), _pred(2, 0, 0)], SensorSet(np.zeros((2, 2))))


def test_error_failed_excluded():
    truth = SensorSet(np.zeros((2, 2)))
    failed = Prediction(1, (math.nan, math.nan), 0, 0.65, error="flat")
    s = error_stats([_pred(0, 3.0, 4.0), failed], truth)
    assert s.failed_ids == (1,) and s.mean_error_mm == 5.0 and math.isnan(s.per_sensor_error_mm[1])


@given(st.lists(st.tuples(*[st.floats(-200, 200)] * 4), min_size=1, max_size=30))
@settings(max_examples=300, deadline=None)
def test_error_symmetric(rows):
    a = np.array([r[:2] for r in rows])
    b = np.array([r[2:] for r in rows])
    s1 = error_stats([_pred(i, *p) for i, p in enumerate(b)], SensorSet(a))
    s2 = error_stats([_pred(i, *p) for i, p in enumerate(a)], SensorSet(b))
    assert s1.per_sensor_error_mm == s2.per_sensor_error_mm

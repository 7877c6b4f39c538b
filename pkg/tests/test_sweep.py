import math
from dataclasses import replace

import numpy as np
import pytest

from qugrating.config import default_config
from qugrating.sweep import (
    FitError,
    SpectrumGrid,
    compare,
    find_peaks,
    fit_lorentzian,
    normalize_values,
    smooth_row,
    sweep,
)


def small_config(**overrides):
    base = dict(
        backend="analytic",
        scheme="complementary",
        delta_count=61,
        control_kind="rabi-mhz",
        control_start=20.0,
        control_stop=60.0,
        control_count=3,
    )
    base.update(overrides)
    return replace(default_config(), **base).validate()


def lorentzian(x, amp, center, width, offset=0.0):
    return amp / (1.0 + ((x - center) / width) ** 2) + offset


def test_single_point_grid_equals_backend_call():
    from qugrating.core import DriveSchedule, Scheme
    from qugrating.grating import mid_signal

    cfg = small_config(
        delta_count=1,
        delta_start_mhz=7.0,
        delta_stop_mhz=7.0,
        control_count=1,
        control_start=40.0,
        control_stop=40.0,
        normalize=False,
    )
    grid = sweep(cfg)
    expected = mid_signal(
        cfg.params_for(7.0, cfg.control_to_omega_c(40.0)),
        DriveSchedule(Scheme.COMPLEMENTARY, tau=0.05),
        4,
    )
    assert grid.values.shape == (1, 1)
    assert grid.values[0, 0] == expected


def test_sweep_rejects_incompatible_backend_scheme():
    with pytest.raises(ValueError):
        sweep(small_config(scheme="unmodulated"))
    with pytest.raises(ValueError):
        sweep(small_config(backend="gvv", scheme="simultaneous"))


def test_sweep_deterministic_across_worker_counts(monkeypatch):
    grids = []
    for workers in ("1", "4"):
        monkeypatch.setenv("QUGRATING_WORKERS", workers)
        grids.append(sweep(small_config()))
    # identical values and axes bit for bit, regardless of pool size
    assert np.array_equal(grids[0].values, grids[1].values)
    assert np.array_equal(grids[0].delta_mhz, grids[1].delta_mhz)
    assert np.array_equal(grids[0].control, grids[1].control)


def test_sweep_normalization_and_metadata():
    grid = sweep(small_config())
    assert np.nanmax(grid.values) == 1.0
    assert np.nanmin(grid.values) >= 0.0
    assert grid.meta["backend"] == "analytic"
    assert grid.meta["scheme"] == "complementary"
    assert grid.meta["normalized"] == "true"
    assert "defaults_applied" in grid.meta
    assert "timestamp" in grid.meta


def test_normalize_idempotent():
    rng = np.random.default_rng(4)
    values = rng.uniform(0.0, 7.0, size=(5, 11))
    once = normalize_values(values)
    twice = normalize_values(once)
    assert np.array_equal(once, twice)


def test_gvv_backend_runs():
    cfg = small_config(backend="gvv", delta_count=121)
    grid = sweep(cfg)
    assert grid.meta["failed_points"] == "0"
    assert np.nanmax(grid.values) == 1.0


def test_grid_shape_validation():
    with pytest.raises(ValueError):
        SpectrumGrid(
            delta_mhz=np.array([0.0, 1.0]),
            control=np.array([0.0]),
            control_kind="rabi-mhz",
            values=np.zeros((2, 2)),
        )
    with pytest.raises(ValueError):
        SpectrumGrid(
            delta_mhz=np.array([1.0, 0.0]),
            control=np.array([0.0]),
            control_kind="rabi-mhz",
            values=np.zeros((1, 2)),
        )


def test_find_peaks_single_lorentzian():
    x = np.linspace(-30.0, 30.0, 121)
    y = lorentzian(x, 1.0, 3.2, 4.0)
    centers = find_peaks(x, y, min_prominence=0.1)
    assert len(centers) == 1
    assert abs(centers[0] - 3.2) < 0.25  # half a grid step


def test_find_peaks_flat_row_empty():
    x = np.linspace(-10, 10, 41)
    assert find_peaks(x, np.full_like(x, 0.3), min_prominence=0.01).size == 0


def test_find_peaks_needs_five_points():
    with pytest.raises(ValueError):
        find_peaks(np.array([0.0, 1, 2, 3]), np.array([0.0, 1, 0, 0]), 0.1)


def test_fit_lorentzian_recovers_noiseless_parameters():
    x = np.linspace(-20.0, 20.0, 201)
    y = lorentzian(x, 0.8, 1.5, 3.0, offset=0.1)
    fit = fit_lorentzian(x, y, (-20.0, 20.0))
    assert fit.center == pytest.approx(1.5, rel=1e-6, abs=1e-8)
    assert fit.fwhm == pytest.approx(6.0, rel=1e-6)
    assert fit.amplitude == pytest.approx(0.8, rel=1e-6)
    assert fit.residual_rms < 1e-10


def test_fit_lorentzian_flags_overlapping_pair():
    x = np.linspace(-20.0, 20.0, 201)
    y = lorentzian(x, 1.0, -4.0, 3.0) + lorentzian(x, 1.0, 4.0, 3.0)
    clean = fit_lorentzian(x, lorentzian(x, 1.0, 0.0, 3.0), (-20.0, 20.0))
    messy = fit_lorentzian(x, y, (-20.0, 20.0))
    assert messy.residual_rms > 100.0 * max(clean.residual_rms, 1e-12)


def test_fit_lorentzian_window_too_small():
    x = np.linspace(-20.0, 20.0, 21)
    with pytest.raises(ValueError):
        fit_lorentzian(x, lorentzian(x, 1.0, 0.0, 3.0), (0.0, 2.0))


def test_smooth_row_preserves_mean_plateau():
    x = np.linspace(-10, 10, 201)
    y = np.sin(8.0 * x) + 2.0
    sm = smooth_row(x, y, width_mhz=3.0)
    assert np.all(np.abs(sm[40:-40] - 2.0) < 0.05)


def test_compare_self_is_zero():
    grid = sweep(small_config())
    report = compare(grid, grid)
    assert report.max_abs == 0.0
    assert report.mean_abs == 0.0
    for row in report.peak_offsets:
        for _, off in row:
            assert off == 0.0


def test_compare_rejects_axis_mismatch():
    a = sweep(small_config())
    b = sweep(small_config(delta_count=31))
    with pytest.raises(ValueError):
        compare(a, b)

"""2D spectra over (probe detuning, control strength) through any backend.

Grid points are independent work units; rows are farmed out to a thread pool
sized by the QUGRATING_WORKERS environment variable (default: available
parallelism).  Results land in a pre-sized matrix, so worker count and
completion order cannot change the output.
"""
from __future__ import annotations

import math
import os
import datetime
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal as sp_signal

from . import floquet as fl
from . import grating, gvv
from .config import RunConfig
from .core import Scheme, angular_to_mhz
from .lindblad import steady_state_signal

WORKERS_ENV = "QUGRATING_WORKERS"

_COMPATIBLE_SCHEMES = {
    "lindblad": {Scheme.UNMODULATED, Scheme.SIMULTANEOUS, Scheme.COMPLEMENTARY},
    "floquet": {Scheme.SIMULTANEOUS, Scheme.COMPLEMENTARY},
    "gvv": {Scheme.COMPLEMENTARY},
    "analytic": {Scheme.SIMULTANEOUS, Scheme.COMPLEMENTARY},
}


class FitError(RuntimeError):
    """Lorentzian fit did not converge; carries the best parameters found."""

    def __init__(self, message: str, best: "PeakFit | None" = None):
        super().__init__(message)
        self.best = best


@dataclass
class PeakFit:
    center: float
    fwhm: float
    amplitude: float
    offset: float
    residual_rms: float

    def __post_init__(self) -> None:
        if not self.fwhm > 0:
            raise ValueError(f"fwhm must be > 0, got {self.fwhm!r}")


@dataclass
class SpectrumGrid:
    """Normalized signal over (control, delta) with provenance metadata.

    ``values[i, j]`` belongs to ``control[i]`` and ``delta_mhz[j]``; a row is
    one spectrum versus probe detuning.  ``meta`` is a flat string-to-string
    mapping so that emitting and re-reading a grid is lossless.
    """

    delta_mhz: np.ndarray
    control: np.ndarray
    control_kind: str
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.delta_mhz = np.asarray(self.delta_mhz, dtype=float)
        self.control = np.asarray(self.control, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.control.size, self.delta_mhz.size):
            raise ValueError(
                f"values shape {self.values.shape} does not match axes "
                f"({self.control.size}, {self.delta_mhz.size})"
            )
        for name, axis in (("delta_mhz", self.delta_mhz), ("control", self.control)):
            if axis.size > 1 and not np.all(np.diff(axis) > 0):
                raise ValueError(f"{name} axis must be strictly increasing")

    def row(self, index: int) -> np.ndarray:
        return self.values[index]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpectrumGrid):
            return NotImplemented
        return (
            np.array_equal(self.delta_mhz, other.delta_mhz)
            and np.array_equal(self.control, other.control)
            and self.control_kind == other.control_kind
            and np.array_equal(self.values, other.values, equal_nan=True)
            and self.meta == other.meta
        )


@dataclass
class ResidualReport:
    max_abs: float
    mean_abs: float
    peak_offsets: list  # per control row: list of (center_a, center_b - center_a)

    def summary(self) -> str:
        lines = [
            f"max |a - b|  = {self.max_abs:.6g}",
            f"mean |a - b| = {self.mean_abs:.6g}",
        ]
        for i, offsets in enumerate(self.peak_offsets):
            if offsets:
                desc = ", ".join(f"{c:+.2f}->{d:+.3f}" for c, d in offsets)
                lines.append(f"row {i}: peak offsets (MHz) {desc}")
        return "\n".join(lines)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


def _slit_count(config: RunConfig, omega_c: float) -> int:
    if config.n_slits is not None:
        return config.n_slits
    return grating.default_slit_count(config.params_for(0.0, omega_c), config.schedule())


def _row_values(config: RunConfig, omega_c: float, deltas: np.ndarray):
    """One spectrum row; returns (values, unconverged, failed)."""
    backend = config.backend
    schedule = config.schedule()
    unconverged = 0
    failed = 0
    out = np.empty(deltas.size)
    if backend == "gvv":
        try:
            params = config.params_for(0.0, omega_c)
            cut = gvv.GvvCutoffs(q_max=config.q_max, l_span=config.l_span)
            out[:] = gvv.gvv_spectrum(
                deltas * 2.0 * math.pi, params, schedule, config.gamma_d_angular(), cut
            )
        except Exception:
            out[:] = np.nan
            failed = deltas.size
        return out, unconverged, failed
    for j, d in enumerate(deltas):
        try:
            params = config.params_for(float(d), omega_c)
            if backend == "lindblad":
                res = steady_state_signal(
                    params,
                    schedule,
                    dt=config.dt_us(),
                    tol=config.tol,
                    max_periods=config.max_periods,
                )
                if not res.converged:
                    unconverged += 1
                out[j] = res.signal
            elif backend == "floquet":
                out[j] = fl.excited_state_signal(fl.decompose(params, schedule, config.n_c))
            elif backend == "analytic":
                n = _slit_count(config, omega_c)
                if schedule.scheme is Scheme.SIMULTANEOUS:
                    out[j] = grating.modulated_at_signal(params, schedule, n)
                else:
                    out[j] = grating.mid_signal(params, schedule, n)
            else:  # pragma: no cover - guarded by sweep()
                raise ValueError(f"unknown backend {backend!r}")
        except Exception:
            out[j] = np.nan
            failed += 1
    return out, unconverged, failed


def normalize_values(values: np.ndarray) -> np.ndarray:
    """Scale to unit maximum (idempotent; NaN-safe; all-zero grids untouched)."""
    if values.size == 0 or np.all(np.isnan(values)):
        return values
    peak = np.nanmax(values)
    if peak > 0:
        return values / peak
    return values


def sweep(config: RunConfig) -> SpectrumGrid:
    """Evaluate the configured backend on the full (control, delta) grid.

    Deterministic for a given config: per-point failures are recorded as NaN
    together with failure counts in the metadata rather than aborting the
    whole grid.
    """
    config.validate()
    scheme = config.scheme_enum()
    if scheme not in _COMPATIBLE_SCHEMES[config.backend]:
        raise ValueError(
            f"backend {config.backend!r} does not support the {scheme.value!r} scheme"
        )
    deltas = config.delta_axis()
    controls = config.control_axis()
    values = np.empty((controls.size, deltas.size))
    stats = [None] * controls.size

    def run_row(i: int):
        omega_c = config.control_to_omega_c(float(controls[i]))
        return _row_values(config, omega_c, deltas)

    max_workers = min(worker_count(), max(1, controls.size))
    if max_workers == 1:
        results = [run_row(i) for i in range(controls.size)]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(run_row, range(controls.size)))
    for i, (row, unconv, failed) in enumerate(results):
        values[i] = row
        stats[i] = (unconv, failed)

    if config.normalize:
        values = normalize_values(values)
    unconverged = sum(s[0] for s in stats)
    failed = sum(s[1] for s in stats)
    meta = build_meta(config)
    meta["unconverged_points"] = str(unconverged)
    meta["failed_points"] = str(failed)
    return SpectrumGrid(
        delta_mhz=deltas,
        control=controls,
        control_kind=config.control_kind,
        values=values,
        meta=meta,
    )


def build_meta(config: RunConfig) -> dict:
    """Flat provenance mapping: backend, scheme, every parameter, defaults."""
    meta = {
        "backend": config.backend,
        "scheme": config.scheme,
        "control_kind": config.control_kind,
        "delta_count": repr(config.delta_count),
        "control_count": repr(config.control_count),
        "normalized": "true" if config.normalize else "false",
        "omega_p_mhz": repr(angular_to_mhz(config.omega_p_angular())),
        "gamma_10_mhz": repr(config.gamma_10_mhz),
        "gamma_21_mhz": repr(config.gamma_21_mhz),
        "gamma_11_mhz": repr(config.gamma_11_mhz),
        "gamma_22_mhz": repr(config.gamma_22_mhz),
        "gamma_d_mhz": repr(angular_to_mhz(config.gamma_d_angular())),
        "tau_ns": repr(config.tau_ns),
        "delta_start_mhz": repr(config.delta_start_mhz),
        "delta_stop_mhz": repr(config.delta_stop_mhz),
        "control_start": repr(config.control_start),
        "control_stop": repr(config.control_stop),
        "dt_ns": repr(config.dt_ns),
        "tol": repr(config.tol),
        "max_periods": repr(config.max_periods),
        "n_c": repr(config.n_c),
        "q_max": repr(config.q_max),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    if config.probe_power_dbm is not None:
        meta["probe_power_dbm"] = repr(config.probe_power_dbm)
    if config.l_span is not None:
        meta["l_span"] = repr(config.l_span)
    if config.n_slits is not None:
        meta["n_slits"] = repr(config.n_slits)
    if config.applied_defaults:
        meta["defaults_applied"] = ",".join(config.applied_defaults)
    return meta


def find_peaks(delta_mhz: np.ndarray, values: np.ndarray, min_prominence: float) -> np.ndarray:
    """Local maxima above the prominence floor, parabolically refined.

    Returns peak centers in MHz; empty when nothing clears the prominence.
    """
    delta_mhz = np.asarray(delta_mhz, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size < 5:
        raise ValueError(f"need at least 5 points, got {values.size}")
    if values.shape != delta_mhz.shape:
        raise ValueError("axis and values must have the same length")
    idx, _ = sp_signal.find_peaks(values, prominence=min_prominence)
    centers = []
    for i in idx:
        if 0 < i < values.size - 1:
            y0, y1, y2 = values[i - 1], values[i], values[i + 1]
            denom = y0 - 2.0 * y1 + y2
            shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
            step = 0.5 * (delta_mhz[i + 1] - delta_mhz[i - 1])
            centers.append(delta_mhz[i] + shift * step)
        else:  # pragma: no cover - find_peaks never returns endpoints
            centers.append(delta_mhz[i])
    return np.array(centers)


def _lorentzian_model(x, amplitude, center, width, offset):
    return amplitude / (1.0 + ((x - center) / width) ** 2) + offset


def fit_lorentzian(
    delta_mhz: np.ndarray,
    values: np.ndarray,
    window: tuple,
    max_nfev: int = 2000,
) -> PeakFit:
    """Least-squares Lorentzian fit inside ``window = (lo, hi)`` (MHz).

    Uses Levenberg-Marquardt; non-convergence raises FitError carrying the
    best parameters reached.  The residual rms is always reported.
    """
    delta_mhz = np.asarray(delta_mhz, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window
    mask = (delta_mhz >= lo) & (delta_mhz <= hi)
    x = delta_mhz[mask]
    y = values[mask]
    if x.size < 5:
        raise ValueError(f"window {window} selects {x.size} points; need at least 5")
    offset0 = float(np.min(y))
    amp0 = float(np.max(y) - np.min(y)) or 1.0
    center0 = float(x[np.argmax(y)])
    width0 = max((hi - lo) / 8.0, 1e-6)

    def residuals(p):
        return _lorentzian_model(x, *p) - y

    result = optimize.least_squares(
        residuals,
        x0=[amp0, center0, width0, offset0],
        method="lm",
        max_nfev=max_nfev,
    )
    amp, center, width, offset = result.x
    rms = float(np.sqrt(np.mean(result.fun**2)))
    fit = PeakFit(
        center=float(center),
        fwhm=2.0 * abs(float(width)),
        amplitude=float(amp),
        offset=float(offset),
        residual_rms=rms,
    )
    if result.status == 0:
        raise FitError(f"no convergence within {max_nfev} evaluations", best=fit)
    return fit


def smooth_row(delta_mhz: np.ndarray, values: np.ndarray, width_mhz: float) -> np.ndarray:
    """Moving average over a detuning window, edge-corrected to equal length."""
    delta_mhz = np.asarray(delta_mhz, dtype=float)
    values = np.asarray(values, dtype=float)
    if delta_mhz.size < 2:
        return values.copy()
    step = float(np.mean(np.diff(delta_mhz)))
    size = max(1, int(round(width_mhz / step)))
    if size % 2 == 0:
        size += 1
    kernel = np.ones(size)
    counts = np.convolve(np.ones_like(values), kernel, mode="same")
    return np.convolve(values, kernel, mode="same") / counts


def compare(grid_a: SpectrumGrid, grid_b: SpectrumGrid, peak_prominence: float = 0.05) -> ResidualReport:
    """Residuals between two grids on identical axes, plus per-row peak offsets."""
    if not (
        np.array_equal(grid_a.delta_mhz, grid_b.delta_mhz)
        and np.array_equal(grid_a.control, grid_b.control)
        and grid_a.control_kind == grid_b.control_kind
    ):
        raise ValueError("grids have different axes; nothing to compare")
    diff = np.abs(grid_a.values - grid_b.values)
    offsets_per_row = []
    for i in range(grid_a.control.size):
        centers_a = find_peaks(grid_a.delta_mhz, grid_a.values[i], peak_prominence)
        centers_b = find_peaks(grid_b.delta_mhz, grid_b.values[i], peak_prominence)
        row_offsets = []
        for c in centers_a:
            if centers_b.size:
                j = int(np.argmin(np.abs(centers_b - c)))
                row_offsets.append((float(c), float(centers_b[j] - c)))
        offsets_per_row.append(row_offsets)
    return ResidualReport(
        max_abs=float(np.nanmax(diff)) if diff.size else 0.0,
        mean_abs=float(np.nanmean(diff)) if diff.size else 0.0,
        peak_offsets=offsets_per_row,
    )

"""Closed-form grating model of the period-averaged excited-state signal.

N periods of square-wave gating act like an N-slit grating in the time domain:
``diffraction_d`` is the single-slit envelope, ``interference_g`` the N-slit
comb, and the two signal functions combine them for the simultaneous and
complementary modulation schemes.  The model is dissipation-free; N stands in
for the number of periods the system stays coherent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DriveSchedule, PhaseTriple, QutritParams, Scheme, period_phases

# Denominators closer to zero than this are treated as removable singularities.
_SINGULARITY_TOL = 1e-8


@dataclass(frozen=True)
class GratingConfig:
    """Effective slit count plus the per-period phases it applies to."""

    n_slits: int
    phases: PhaseTriple

    def __post_init__(self) -> None:
        _check_slits(self.n_slits)


def _check_slits(n_slits) -> int:
    if isinstance(n_slits, bool) or not isinstance(n_slits, (int, np.integer)):
        raise TypeError(f"n_slits must be an integer, got {n_slits!r}")
    if n_slits < 1:
        raise ValueError(f"n_slits must be >= 1, got {n_slits}")
    return int(n_slits)


def default_slit_count(params: QutritParams, schedule: DriveSchedule) -> int:
    """Effective slit count: coherence time over period, 1/(Gamma_linear * tau)."""
    gamma_linear = params.gamma_total / (2.0 * math.pi)  # linear MHz == 1/us
    return max(1, round(1.0 / (gamma_linear * schedule.tau)))


def diffraction_d(x):
    """Single-slit envelope sin(x)^2 / x^2, with D(0) = 1 at the removable singularity."""
    scalar = np.isscalar(x)
    x = np.asarray(x, dtype=float)
    out = np.square(np.sinc(x / np.pi))
    return float(out) if scalar else out


def interference_g(x, n_slits):
    """N-slit comb sin(2Nx)^2 / sin(2x)^2; equals N^2 wherever sin(2x) vanishes."""
    n = _check_slits(n_slits)
    scalar = np.isscalar(x)
    x = np.asarray(x, dtype=float)
    den = np.sin(2.0 * x)
    singular = np.abs(den) < _SINGULARITY_TOL
    num = np.square(np.sin(2.0 * n * x))
    out = np.where(singular, float(n * n), num / np.square(np.where(singular, 1.0, den)))
    return float(out) if scalar else out


def modulated_at_signal(params: QutritParams, schedule: DriveSchedule, n_slits: int):
    """Grating signal for simultaneous modulation: two independent moving gratings.

    Each term is a single-slit envelope centered on one dressed resonance times
    the N-slit comb of that branch.
    """
    if schedule.scheme is not Scheme.SIMULTANEOUS:
        raise ValueError("modulated_at_signal requires the simultaneous scheme")
    ph = period_phases(params, schedule)
    upper = diffraction_d(0.125 * (3.0 * ph.theta_p - ph.theta_q))
    lower = diffraction_d(0.125 * (3.0 * ph.theta_q - ph.theta_p))
    return upper * interference_g(0.25 * ph.theta_p, n_slits) + lower * interference_g(
        0.25 * ph.theta_q, n_slits
    )


def mid_signal(params: QutritParams, schedule: DriveSchedule, n_slits: int):
    """Grating signal for complementary modulation.

    The shared envelope depends only on the three-level phase theta_3 = 2 delta tau,
    so it is pinned to zero detuning and blind to the control strength; the two
    combs underneath carry the branch structure.
    """
    if schedule.scheme is not Scheme.COMPLEMENTARY:
        raise ValueError("mid_signal requires the complementary scheme")
    ph = period_phases(params, schedule)
    envelope = diffraction_d(0.125 * ph.theta_3)
    return envelope * (
        interference_g(0.25 * ph.theta_p, n_slits) + interference_g(0.25 * ph.theta_q, n_slits)
    )

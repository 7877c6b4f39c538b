"""Lindblad master-equation dynamics of the square-wave-driven qutrit.

The drive envelopes are piecewise constant, so a trajectory is a chain of
constant-generator segments.  On such a segment the classical fixed-step RK4
update of the linear equation d(vec rho)/dt = L vec(rho) is exactly the
fourth-order Taylor map R(L dt); stepping a whole segment is the matrix power
R^n, and within-segment time averages come from the matching geometric sum.
Steps are required to align with the envelope switch times so no step ever
straddles a discontinuity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DriveSchedule, QutritParams, Scheme, drive_envelope

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-8

#: Segment lengths must be integer multiples of dt to this relative precision.
_ALIGN_RTOL = 1e-9

_I9 = np.eye(9, dtype=complex)

# Signal row indices of vec(rho): (1,1) and (2,2) in row-major order.
_EXCITED_IDX = (4, 8)


@dataclass
class DensityMatrix:
    """3x3 complex density matrix in the dressed basis (|0>, |1>, |2>)."""

    rho: np.ndarray

    def __post_init__(self) -> None:
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (3, 3):
            raise ValueError(f"rho must be 3x3, got shape {rho.shape}")
        if not np.all(np.isfinite(rho.view(float))):
            raise ValueError("rho contains non-finite entries")
        self.rho = rho

    @classmethod
    def ground(cls) -> "DensityMatrix":
        return cls.pure(0)

    @classmethod
    def pure(cls, level: int) -> "DensityMatrix":
        if level not in (0, 1, 2):
            raise ValueError(f"level must be 0, 1 or 2, got {level!r}")
        rho = np.zeros((3, 3), dtype=complex)
        rho[level, level] = 1.0
        return cls(rho)

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.rho))

    def excited_population(self) -> float:
        """rho_11 + rho_22, the measured signal."""
        return float(np.real(self.rho[1, 1] + self.rho[2, 2]))

    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))

    def validate(self) -> "DensityMatrix":
        """Check Hermiticity, unit trace and positivity within tolerances."""
        herm = np.max(np.abs(self.rho - self.rho.conj().T))
        if herm >= HERMITICITY_TOL:
            raise ValueError(f"not Hermitian: max |rho - rho^dag| = {herm:.3e}")
        trace_err = abs(np.trace(self.rho) - 1.0)
        if trace_err >= TRACE_TOL:
            raise ValueError(f"trace deviates from 1 by {trace_err:.3e}")
        min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))))
        if min_eig < -POSITIVITY_TOL:
            raise ValueError(f"not positive semidefinite: min eigenvalue {min_eig:.3e}")
        return self


@dataclass
class SteadyStateResult:
    """Period-averaged excited-state signal at (or nearest to) steady state."""

    signal: float
    periods_used: int
    converged: bool
    rho_final: DensityMatrix


def hamiltonian_at(params: QutritParams, schedule: DriveSchedule, t: float) -> np.ndarray:
    """Rotating-frame Hamiltonian at time t (rad/us).

    A gated-on drive contributes -omega/2 on its off-diagonal: the stored
    omega_p / omega_c are the full Rabi strengths and the factor 1/2 is the
    rotating-wave coupling.  The (0, 2) entry is always zero.
    """
    e_p, e_c = drive_envelope(schedule, t)
    return _hamiltonian(params, float(e_p), float(e_c))


def _hamiltonian(params: QutritParams, e_p: float, e_c: float) -> np.ndarray:
    op = 0.5 * e_p * params.omega_p
    oc = 0.5 * e_c * params.omega_c
    half_delta = 0.5 * params.delta
    return np.array(
        [
            [-half_delta, -op, 0.0],
            [-op, half_delta, -oc],
            [0.0, -oc, half_delta],
        ],
        dtype=complex,
    )


def _dissipator(rate: float, lop: np.ndarray) -> np.ndarray:
    # rate/2 * (2 L rho L^dag - L^dag L rho - rho L^dag L) on vec(rho), row-major
    ldl = lop.conj().T @ lop
    i3 = np.eye(3)
    return 0.5 * rate * (
        2.0 * np.kron(lop, lop.conj()) - np.kron(ldl, i3) - np.kron(i3, ldl.T)
    )


def liouvillian(params: QutritParams, e_p: float, e_c: float) -> np.ndarray:
    """Generator of vec(rho) for fixed envelope values (9x9, row-major vec)."""
    h = _hamiltonian(params, e_p, e_c)
    i3 = np.eye(3)
    lmat = -1j * (np.kron(h, i3) - np.kron(i3, h.T))
    sigma_01 = np.zeros((3, 3), dtype=complex)
    sigma_01[0, 1] = 1.0
    sigma_12 = np.zeros((3, 3), dtype=complex)
    sigma_12[1, 2] = 1.0
    lmat += _dissipator(params.gamma_10, sigma_01)
    lmat += _dissipator(params.gamma_21, sigma_12)
    for level, rate in ((1, params.gamma_11), (2, params.gamma_22)):
        proj = np.zeros((3, 3), dtype=complex)
        proj[level, level] = 1.0
        lmat += _dissipator(2.0 * rate, proj)  # dephasing terms carry no 1/2 prefactor
    return lmat


def _rk4_matrix(lmat: np.ndarray, dt: float) -> np.ndarray:
    # One fixed-step RK4 update of a constant linear system == 4th-order Taylor map.
    a = lmat * dt
    m = _I9 + 0.25 * a
    m = _I9 + (a @ m) / 3.0
    m = _I9 + 0.5 * (a @ m)
    return _I9 + a @ m


def _aligned_steps(length: float, dt: float, what: str) -> int:
    ratio = length / dt
    n = round(ratio)
    if n < 1 or abs(ratio - n) > _ALIGN_RTOL * max(ratio, 1.0):
        raise ValueError(
            f"dt = {dt!r} does not divide {what} = {length!r}; "
            "steps would straddle an envelope switch"
        )
    return n


def _segment_ops(lmat: np.ndarray, dt: float, n_steps: int):
    """n-step propagator and the time-average map over the segment.

    The average uses the trapezoid rule over the RK4 samples plus the
    Euler-Maclaurin end correction, keeping the overall dt^4 accuracy.
    """
    r = _rk4_matrix(lmat, dt)
    block = np.zeros((18, 18), dtype=complex)
    block[:9, :9] = r
    block[:9, 9:] = _I9
    block[9:, 9:] = _I9
    powered = np.linalg.matrix_power(block, n_steps)
    prop = powered[:9, :9]
    geo = powered[:9, 9:]  # sum of R^k for k = 0 .. n-1
    trap = (geo - 0.5 * _I9 + 0.5 * prop) / n_steps
    avg = trap - (dt / (12.0 * n_steps)) * (lmat @ (prop - _I9))
    return prop, avg


def _half_envelopes(schedule: DriveSchedule, shift_origin: bool = False):
    """Envelope values for the two half-periods, first half first."""
    quarter = 0.25 * schedule.tau
    halves = [drive_envelope(schedule, quarter), drive_envelope(schedule, 3.0 * quarter)]
    if shift_origin:
        halves.reverse()
    return halves


def evolve(
    rho0: DensityMatrix,
    params: QutritParams,
    schedule: DriveSchedule,
    t_end: float,
    dt: float,
) -> DensityMatrix:
    """Propagate rho0 to t_end with fixed-step RK4 aligned to envelope switches.

    For modulated schedules dt must divide tau/2 exactly, and t_end must be a
    whole number of steps; misaligned steps are rejected.
    """
    rho0.validate()
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    if t_end < 0.0:
        raise ValueError(f"t_end must be >= 0, got {t_end!r}")
    if t_end == 0.0:
        return DensityMatrix(rho0.rho.copy())
    total_steps = _aligned_steps(t_end, dt, "t_end")
    modulated = schedule.scheme is not Scheme.UNMODULATED

    vec = rho0.rho.reshape(9).astype(complex)
    if not modulated:
        lmat = liouvillian(params, 1.0, 1.0)
        r = _rk4_matrix(lmat, dt)
        vec = np.linalg.matrix_power(r, total_steps) @ vec
        return DensityMatrix(vec.reshape(3, 3))

    per_half = _aligned_steps(0.5 * schedule.tau, dt, "tau/2")
    maps = {}
    for e_p, e_c in _half_envelopes(schedule):
        key = (e_p, e_c)
        if key not in maps:
            maps[key] = _rk4_matrix(liouvillian(params, e_p, e_c), dt)
    pos = 0
    while pos < total_steps:
        half_index = pos // per_half
        boundary = (half_index + 1) * per_half
        steps = min(boundary, total_steps) - pos
        e_p, e_c = _half_envelopes(schedule)[half_index % 2]
        vec = np.linalg.matrix_power(maps[(e_p, e_c)], steps) @ vec
        pos += steps
    return DensityMatrix(vec.reshape(3, 3))


def steady_state_signal(
    params: QutritParams,
    schedule: DriveSchedule,
    dt: float | None = None,
    tol: float = 1e-4,
    max_periods: int = 400,
    shift_origin: bool = False,
) -> SteadyStateResult:
    """Iterate whole periods from the ground state until the period-averaged
    excited-state signal settles.

    Convergence means consecutive period averages differ by less than ``tol``
    (relative).  For the unmodulated scheme the schedule period serves as a
    fixed averaging window.  ``shift_origin`` starts the square wave half a
    period late; steady-state observables must not care.
    """
    if max_periods < 2:
        raise ValueError(f"max_periods must be >= 2, got {max_periods!r}")
    if tol <= 0.0:
        raise ValueError(f"tol must be > 0, got {tol!r}")
    window = schedule.tau
    if dt is None:
        dt = window / 500.0
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt!r}")

    modulated = schedule.scheme is not Scheme.UNMODULATED
    if modulated:
        envelopes = _half_envelopes(schedule, shift_origin)
        seg_len = 0.5 * window
        seg_name = "tau/2"
    else:
        envelopes = [(1.0, 1.0)]
        seg_len = window
        seg_name = "the averaging window"
    n_steps = _aligned_steps(seg_len, dt, seg_name)

    segments = []
    for e_p, e_c in envelopes:
        lmat = liouvillian(params, e_p, e_c)
        prop, avg = _segment_ops(lmat, dt, n_steps)
        segments.append((prop, avg[_EXCITED_IDX[0], :] + avg[_EXCITED_IDX[1], :]))

    vec = DensityMatrix.ground().rho.reshape(9).astype(complex)
    previous = None
    converged = False
    periods = 0
    average = 0.0
    for periods in range(1, max_periods + 1):
        seg_values = []
        for prop, row in segments:
            seg_values.append(float(np.real(row @ vec)))
            vec = prop @ vec
        average = float(np.mean(seg_values))
        if previous is not None:
            scale = max(abs(average), abs(previous), 1e-300)
            if abs(average - previous) < tol * scale:
                converged = True
                break
        previous = average

    if average < -1e-6 or average > 1.0 + 1e-6:
        raise RuntimeError(f"unphysical period-averaged signal {average!r}")
    signal = min(max(average, 0.0), 1.0)
    return SteadyStateResult(
        signal=signal,
        periods_used=periods,
        converged=converged,
        rho_final=DensityMatrix(vec.reshape(3, 3)),
    )


def steady_state_ratio(params: QutritParams) -> float:
    """Predicted rho_22 / rho_11 for constant drives with a weak probe.

    Valid when omega_p << omega_c; uses the recomputed total damping rate.
    """
    oc2 = params.omega_c * params.omega_c
    return oc2 / (2.0 * params.gamma_total * params.gamma_21 + oc2)


def transmission(signal, norm_const: float):
    """Readout transmission, a fixed scaling of the excited-state signal."""
    if not norm_const > 0.0:
        raise ValueError(f"norm_const must be > 0, got {norm_const!r}")
    return norm_const * signal

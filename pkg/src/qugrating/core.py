"""Unit conventions, drive parameters, square-wave envelopes, and phase bookkeeping.

Internal convention: every frequency-like quantity (Rabi strengths, detunings,
decay and dephasing rates) is angular, in rad/us; times are in us.  Human-facing
values are linear frequencies in MHz (nu = omega / 2 pi), times in ns, and
microwave powers in dBm; the converters below keep the factor of 2 pi in one
place.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

#: Calibration constant of the power <-> Rabi-frequency map,
#: P [dBm] = 10 log10(POWER_CAL * nu**2), nu in MHz (linear).
POWER_CAL = 1.38e-4

_RATE_FIELDS = ("omega_p", "omega_c", "gamma_10", "gamma_21", "gamma_11", "gamma_22")


def mhz_to_angular(value_mhz: float) -> float:
    """Linear frequency in MHz -> angular frequency in rad/us."""
    return TWO_PI * value_mhz


def angular_to_mhz(value: float) -> float:
    """Angular frequency in rad/us -> linear frequency in MHz."""
    return value / TWO_PI


def ns_to_us(value_ns: float) -> float:
    return value_ns * 1e-3


def us_to_ns(value_us: float) -> float:
    return value_us * 1e3


class Scheme(enum.Enum):
    """Square-wave modulation scheme applied to the probe and control drives."""

    UNMODULATED = "unmodulated"
    SIMULTANEOUS = "simultaneous"
    COMPLEMENTARY = "complementary"


@dataclass(frozen=True)
class QutritParams:
    """Drive strengths, probe detuning, and dissipation rates of the qutrit.

    Parameters
    ----------
    delta:
        Probe detuning (rad/us); may be negative.
    omega_p, omega_c:
        Full probe / control Rabi strengths (rad/us), >= 0.
    gamma_10, gamma_21:
        Population decay rates of |1> -> |0> and |2> -> |1> (rad/us).
    gamma_11, gamma_22:
        Pure dephasing rates of the two excited levels (rad/us).

    The total damping rate is exposed as the derived property
    ``gamma_total`` and is always recomputed, never stored.
    """

    delta: float = 0.0
    omega_p: float = 0.0
    omega_c: float = 0.0
    gamma_10: float = mhz_to_angular(2.267)
    gamma_21: float = mhz_to_angular(4.534)
    gamma_11: float = mhz_to_angular(0.9165)
    gamma_22: float = mhz_to_angular(0.9165)

    def __post_init__(self) -> None:
        for name in _RATE_FIELDS:
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
        if not math.isfinite(self.delta):
            raise ValueError(f"delta must be finite, got {self.delta!r}")

    @property
    def gamma_total(self) -> float:
        """Total damping rate (gamma_10 + gamma_21)/2 + gamma_11 + gamma_22 (rad/us)."""
        return 0.5 * (self.gamma_10 + self.gamma_21) + self.gamma_11 + self.gamma_22

    @classmethod
    def from_mhz(
        cls,
        *,
        delta: float = 0.0,
        omega_p: float = 0.0,
        omega_c: float = 0.0,
        gamma_10: float = 2.267,
        gamma_21: float = 4.534,
        gamma_11: float = 0.9165,
        gamma_22: float = 0.9165,
    ) -> "QutritParams":
        """Build a parameter record from linear frequencies in MHz."""
        return cls(
            delta=mhz_to_angular(delta),
            omega_p=mhz_to_angular(omega_p),
            omega_c=mhz_to_angular(omega_c),
            gamma_10=mhz_to_angular(gamma_10),
            gamma_21=mhz_to_angular(gamma_21),
            gamma_11=mhz_to_angular(gamma_11),
            gamma_22=mhz_to_angular(gamma_22),
        )


@dataclass(frozen=True)
class DriveSchedule:
    """Modulation scheme plus period.  Only 50% duty square waves are supported."""

    scheme: Scheme
    tau: float = 0.05  # modulation period, us
    duty: float = 0.5

    def __post_init__(self) -> None:
        if not isinstance(self.scheme, Scheme):
            raise TypeError(f"scheme must be a Scheme, got {self.scheme!r}")
        if not (math.isfinite(self.tau) and self.tau > 0.0):
            raise ValueError(f"tau must be > 0, got {self.tau!r}")
        if self.duty != 0.5:
            raise ValueError("duty cycle is fixed at 0.5")

    @property
    def omega(self) -> float:
        """Modulation angular frequency 2 pi / tau (rad/us)."""
        return TWO_PI / self.tau


@dataclass(frozen=True)
class PhaseTriple:
    """Two-level relative phases and their sum, the three-level relative phase.

    theta_3 equals theta_p + theta_q in exact arithmetic; the constructor
    tolerates the last-ulp wiggle of floating point.
    """

    theta_p: float | np.ndarray
    theta_q: float | np.ndarray
    theta_3: float | np.ndarray

    def __post_init__(self) -> None:
        tp = np.asarray(self.theta_p)
        tq = np.asarray(self.theta_q)
        t3 = np.asarray(self.theta_3)
        scale = np.maximum(1.0, np.maximum(np.abs(tp), np.abs(tq)))
        if not np.all(np.abs(t3 - (tp + tq)) <= 8.0 * np.finfo(float).eps * scale):
            raise ValueError("theta_3 must equal theta_p + theta_q")


def _maybe_scalar(value: np.ndarray, scalar: bool):
    return float(value) if scalar else value


def level_phases(params: QutritParams, t):
    """Phases accumulated by the ground state and the two dressed excited states.

    Returns the triple (phi_0, phi_p, phi_q) at time(s) ``t`` (us):
    phi_0 = -delta t / 2, phi_p = (delta - omega_c) t / 2,
    phi_q = (delta + omega_c) t / 2.
    """
    scalar = np.isscalar(t)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("t must be >= 0")
    phi_0 = -0.5 * params.delta * t
    phi_p = 0.5 * (params.delta - params.omega_c) * t
    phi_q = 0.5 * (params.delta + params.omega_c) * t
    return tuple(_maybe_scalar(p, scalar) for p in (phi_0, phi_p, phi_q))


def relative_phases(params: QutritParams, t) -> PhaseTriple:
    """Relative phases theta_p, theta_q of the excited doublet against the ground state.

    theta_3 = 2 delta t is computed without touching omega_c, so it is
    bit-identical across control strengths.
    """
    scalar = np.isscalar(t)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("t must be >= 0")
    u = params.delta * t
    v = 0.5 * (params.omega_c * t)
    return PhaseTriple(
        theta_p=_maybe_scalar(u - v, scalar),
        theta_q=_maybe_scalar(u + v, scalar),
        theta_3=_maybe_scalar(2.0 * u, scalar),
    )


def period_phases(params: QutritParams, schedule: DriveSchedule) -> PhaseTriple:
    """Relative phases accumulated over one full modulation period.

    Both modulated schemes gate the control on for half the period, so the
    per-period phases are theta_p = delta tau - omega_c tau / 4 and
    theta_q = delta tau + omega_c tau / 4.  Rejects the unmodulated scheme,
    for which a "period" is not defined.
    """
    if schedule.scheme is Scheme.UNMODULATED:
        raise ValueError("period phases are defined only for modulated schedules")
    u = params.delta * schedule.tau
    v = 0.25 * (params.omega_c * schedule.tau)
    return PhaseTriple(theta_p=u - v, theta_q=u + v, theta_3=2.0 * u)


def drive_envelope(schedule: DriveSchedule, t):
    """Instantaneous gating (exactly 0 or 1) of the probe and control drives.

    The probe-on half period is [0, tau/2); for the complementary scheme the
    control occupies the other half, so e_p(t) + e_c(t) = 1 at every instant.
    Accepts scalars or arrays; t must be >= 0.
    """
    scalar = np.isscalar(t)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("t must be >= 0")
    if schedule.scheme is Scheme.UNMODULATED:
        ones = np.ones_like(t)
        return _maybe_scalar(ones, scalar), _maybe_scalar(ones.copy(), scalar)
    first_half = (np.mod(t, schedule.tau) / schedule.tau < schedule.duty).astype(float)
    if schedule.scheme is Scheme.SIMULTANEOUS:
        return _maybe_scalar(first_half, scalar), _maybe_scalar(first_half.copy(), scalar)
    return _maybe_scalar(first_half, scalar), _maybe_scalar(1.0 - first_half, scalar)


def dbm_to_rabi(power_dbm: float) -> float:
    """Microwave power in dBm -> angular Rabi strength in rad/us.

    Inverts P = 10 log10(POWER_CAL * nu**2); nu is the linear Rabi frequency
    in MHz, and the returned value is 2 pi nu.
    """
    nu_mhz = math.sqrt(10.0 ** (power_dbm / 10.0) / POWER_CAL)
    return mhz_to_angular(nu_mhz)


def rabi_to_dbm(omega: float) -> float:
    """Angular Rabi strength in rad/us -> microwave power in dBm.  Requires omega > 0."""
    if not omega > 0.0:
        raise ValueError(f"omega must be > 0, got {omega!r}")
    nu_mhz = angular_to_mhz(omega)
    return 10.0 * math.log10(POWER_CAL * nu_mhz * nu_mhz)

"""Effective near-degenerate model of the complementarily modulated qutrit.

Folding the square-wave gating into the frame of the oscillating dressed-state
energies turns the probe coupling into nested products of Bessel functions,
one factor per odd harmonic of the control gating.  The squared couplings form
an envelope that depends only on the scaled detuning alpha = delta tau / 4;
the spectrum is that envelope times two ladders of Lorentzians.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .core import DriveSchedule, QutritParams, Scheme

_SQRT2 = math.sqrt(2.0)

#: Extra odd probe harmonics beyond the largest fundamental Bessel order in
#: play; contributions die super-exponentially past the Bessel argument.
_PROBE_HARMONIC_MARGIN = 20

#: Convolution coefficients below this relative weight are dropped.
_PRUNE_REL = 1e-18

#: Bessel-argument bound under which the harmonic ladder may be truncated.
_TAIL_ARG_MAX = 0.05

BESSEL_MAX_ORDER = 60
BESSEL_MAX_ARG = 50.0


class CutoffWarning(UserWarning):
    """The last harmonic shell still moves the result more than 1e-6."""


@dataclass(frozen=True)
class GvvCutoffs:
    """Truncation knobs: harmonic depth and Bessel-index half-width.

    ``l_span`` of None sizes each index window from its argument
    (ceil|arg| + 6), which keeps the dropped tail far below 1e-6.
    """

    q_max: int = 4
    l_span: int | None = None

    def __post_init__(self) -> None:
        if self.q_max < 1:
            raise ValueError(f"q_max must be >= 1, got {self.q_max!r}")
        if self.l_span is not None and self.l_span < 1:
            raise ValueError(f"l_span must be >= 1 or None, got {self.l_span!r}")


@dataclass(frozen=True)
class ResonanceGrid:
    """Ladder positions of the two quasi-level families and their linewidths."""

    n_values: np.ndarray
    delta_p: np.ndarray
    delta_q: np.ndarray
    linewidth_p: np.ndarray
    linewidth_q: np.ndarray


def bessel_j(n: int, x):
    """First-kind Bessel function of integer order.

    Negative orders follow J(-n) = (-1)^n J(n).  Orders beyond +-60 or
    arguments beyond +-50 are outside the supported accuracy window and are
    rejected.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise TypeError(f"order must be an integer, got {n!r}")
    if abs(n) > BESSEL_MAX_ORDER:
        raise ValueError(f"order {n} outside supported range +-{BESSEL_MAX_ORDER}")
    scalar = np.isscalar(x)
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > BESSEL_MAX_ARG):
        raise ValueError(f"argument outside supported range +-{BESSEL_MAX_ARG}")
    out = special.jv(n, x)
    return float(out) if scalar else out


def _harmonic_coeffs(b: float, q_max: int, l_span: int | None):
    """Convolved Bessel weights of the control-phase factor, harmonics >= 3.

    Returns (offsets, coeffs): coeffs[i] multiplies the term whose fundamental
    Bessel order is shifted by offsets[i].
    """
    offsets = np.array([0], dtype=int)
    coeffs = np.array([1.0])
    for k in range(2, q_max + 1):
        stride = 2 * k - 1
        arg = b * (-1.0) ** (k + 1) / (stride * stride)
        span = l_span if l_span is not None else int(math.ceil(abs(arg))) + 6
        orders = np.arange(-span, span + 1)
        vals = special.jv(orders, arg)
        lo = offsets[0] - span * stride
        hi = offsets[-1] + span * stride
        dense = np.zeros(hi - lo + 1)
        for m, v in zip(orders, vals):
            idx = offsets - lo + m * stride
            dense[idx] += coeffs * v
        keep = np.abs(dense) > _PRUNE_REL * np.max(np.abs(dense))
        offsets = np.arange(lo, hi + 1)[keep]
        coeffs = dense[keep]
    return offsets, coeffs


def _probe_brace(zeta: np.ndarray, b: float) -> np.ndarray:
    """DC plus odd-harmonic probe weights at fundamental Bessel orders zeta.

    A shifted order zeta -+ (2j-1) can land back near zero for large |zeta|,
    so the harmonic count follows the largest order in play.
    """
    out = -special.jv(zeta, b) / (4.0 * _SQRT2)
    max_order = int(np.max(np.abs(zeta))) + int(math.ceil(abs(b))) + _PROBE_HARMONIC_MARGIN
    j = np.arange(1, (max_order + 1) // 2 + 2)
    odd = 2 * j - 1
    a_j = ((-1.0) ** j) / (2.0 * _SQRT2 * odd * math.pi)
    shifted = special.jv(zeta[:, None] + odd[None, :], b) + special.jv(
        zeta[:, None] - odd[None, :], b
    )
    return out + shifted @ a_j


@functools.lru_cache(maxsize=200_000)
def _coupling_value(n: int, b: float, q_max: int, l_span: int | None) -> float:
    """Probe-strength-free nested-sum coupling for quasi-level index n."""
    offsets, coeffs = _harmonic_coeffs(b, q_max, l_span)
    return float(np.dot(coeffs, _probe_brace(n - offsets, b)))


def _check_tail(b: float, q_max: int) -> None:
    tail_arg = abs(b) / ((2 * q_max - 1) ** 2)
    if tail_arg >= _TAIL_ARG_MAX:
        raise ValueError(
            f"q_max = {q_max} leaves a harmonic tail argument {tail_arg:.3f} >= "
            f"{_TAIL_ARG_MAX}; increase q_max"
        )


def _min_q_max(b: float) -> int:
    # smallest q with |b| / (2q-1)^2 < _TAIL_ARG_MAX
    q = max(1, math.ceil((math.sqrt(abs(b) / _TAIL_ARG_MAX) + 1.0) / 2.0))
    while abs(b) / ((2 * q - 1) ** 2) >= _TAIL_ARG_MAX:
        q += 1
    return q


def _warn_if_cutoff_short(n: int, b: float, cutoffs: GvvCutoffs, value: float) -> None:
    if cutoffs.q_max < 2:
        return
    previous = _coupling_value(n, b, cutoffs.q_max - 1, cutoffs.l_span)
    if abs(value - previous) > 1e-6 * max(abs(value), 1e-300):
        warnings.warn(
            f"last harmonic shell (q = {cutoffs.q_max}) still moves the coupling by "
            f"{abs(value - previous):.2e}; consider a larger q_max",
            CutoffWarning,
            stacklevel=3,
        )


def gvv_coupling(
    n: int,
    params: QutritParams,
    schedule: DriveSchedule,
    cutoffs: GvvCutoffs | None = None,
    branch: str = "P",
) -> float:
    """Effective coupling (rad/us) between the ground state and quasi-level n.

    ``branch`` selects the lowered ("P") or raised ("Q") dressed family; the
    two are related by flipping the sign of the Bessel argument.
    """
    if schedule.scheme is not Scheme.COMPLEMENTARY:
        raise ValueError("the effective model applies to the complementary scheme")
    if branch not in ("P", "Q"):
        raise ValueError(f"branch must be 'P' or 'Q', got {branch!r}")
    cutoffs = cutoffs or GvvCutoffs()
    b = -params.omega_c / (schedule.omega * math.pi)
    _check_tail(b, cutoffs.q_max)
    sign, b_eff = (1.0, b) if branch == "P" else (-1.0, -b)
    value = _coupling_value(int(n), b_eff, cutoffs.q_max, cutoffs.l_span)
    _warn_if_cutoff_short(int(n), b_eff, cutoffs, value)
    return sign * params.omega_p * value


def envelope_omega_sq(
    alpha,
    params: QutritParams,
    schedule: DriveSchedule,
    cutoffs: GvvCutoffs | None = None,
):
    """Squared-coupling envelope at scaled detuning alpha = delta tau / 4.

    Even in alpha by construction.  The harmonic depth is raised automatically
    whenever the configured q_max would leave a visible tail at this alpha.
    """
    cutoffs = cutoffs or GvvCutoffs()
    scalar = np.isscalar(alpha)
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    out = np.empty_like(alpha)
    for i, a in enumerate(alpha):
        # The envelope is the index-0 coupling evaluated where the ladder
        # position equals the detuning; that collapses to a Bessel argument
        # depending on alpha alone.
        b_eff = -8.0 * abs(a) / (math.pi * math.pi)
        q_eff = max(cutoffs.q_max, _min_q_max(b_eff))
        value = params.omega_p * _coupling_value(0, b_eff, q_eff, cutoffs.l_span)
        out[i] = value * value
    return float(out[0]) if scalar else out


def total_linewidth(omega_sq, gamma_d: float):
    """Lorentzian linewidth: environmental damping plus drive-induced width."""
    if gamma_d < 0.0:
        raise ValueError(f"gamma_d must be >= 0, got {gamma_d!r}")
    return np.sqrt(gamma_d * gamma_d + 4.0 * np.asarray(omega_sq, dtype=float))


def resonance_grid(
    params: QutritParams,
    schedule: DriveSchedule,
    n_window: int,
    gamma_d: float | None = None,
    cutoffs: GvvCutoffs | None = None,
) -> ResonanceGrid:
    """Ladder positions delta = -n omega -+ omega_c/4 with their linewidths."""
    if n_window < 0:
        raise ValueError(f"n_window must be >= 0, got {n_window!r}")
    if gamma_d is None:
        gamma_d = params.gamma_total
    n_values = np.arange(-n_window, n_window + 1)
    delta_p = -n_values * schedule.omega - 0.25 * params.omega_c
    delta_q = -n_values * schedule.omega + 0.25 * params.omega_c
    quarter_tau = 0.25 * schedule.tau
    width_p = total_linewidth(
        envelope_omega_sq(delta_p * quarter_tau, params, schedule, cutoffs), gamma_d
    )
    width_q = total_linewidth(
        envelope_omega_sq(delta_q * quarter_tau, params, schedule, cutoffs), gamma_d
    )
    return ResonanceGrid(
        n_values=n_values,
        delta_p=delta_p,
        delta_q=delta_q,
        linewidth_p=width_p,
        linewidth_q=width_q,
    )


def _lorentzian_comb(x, gamma, omega: float):
    """Sum over the full ladder of 1/((x - n omega)^2 + gamma^2).

    Resummed in closed form, so the ladder carries no truncation tail at all.
    """
    x = np.asarray(x, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    a = 2.0 * math.pi * gamma / omega
    cos_term = np.cos(2.0 * math.pi * x / omega)
    big = a > 30.0  # sinh/cosh overflow guard; the comb is flat there anyway
    a_safe = np.where(big, 1.0, a)
    ratio = np.where(
        big, 1.0, np.sinh(a_safe) / (np.cosh(a_safe) - cos_term)
    )
    return (math.pi / (gamma * omega)) * ratio


def gvv_spectrum(
    delta_grid,
    params: QutritParams,
    schedule: DriveSchedule,
    gamma_d: float | None = None,
    cutoffs: GvvCutoffs | None = None,
) -> np.ndarray:
    """Excited-state spectrum: envelope times the two Lorentzian ladders.

    ``delta_grid`` is angular (rad/us); ``gamma_d`` defaults to the total
    damping rate of ``params`` and may be zero, in which case the width is
    purely drive-induced.
    """
    if schedule.scheme is not Scheme.COMPLEMENTARY:
        raise ValueError("gvv_spectrum requires the complementary scheme")
    if gamma_d is None:
        gamma_d = params.gamma_total
    if gamma_d < 0.0:
        raise ValueError(f"gamma_d must be >= 0, got {gamma_d!r}")
    delta = np.atleast_1d(np.asarray(delta_grid, dtype=float))
    if not np.all(np.isfinite(delta)):
        raise ValueError("delta grid must be finite")
    env = envelope_omega_sq(0.25 * delta * schedule.tau, params, schedule, cutoffs)
    env = np.atleast_1d(env)
    gamma = total_linewidth(env, gamma_d)
    alive = env > 0.0
    gamma_safe = np.where(alive, gamma, 1.0)
    comb = _lorentzian_comb(
        delta + 0.25 * params.omega_c, gamma_safe, schedule.omega
    ) + _lorentzian_comb(delta - 0.25 * params.omega_c, gamma_safe, schedule.omega)
    out = np.where(alive, env * comb, 0.0)
    return out if np.ndim(delta_grid) else float(out[0])

"""Floquet treatment of the square-wave-modulated qutrit.

The periodic Hamiltonian is expanded in harmonics of the modulation frequency;
the resulting block-Toeplitz matrix over the composite (level, photon-index)
basis is diagonalized, and infinite-time-averaged populations follow from the
eigenvector weights.  Dissipation is deliberately absent here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DriveSchedule, QutritParams, Scheme


class FloquetError(RuntimeError):
    """Diagonalization failure, wrapping the underlying solver report."""


@dataclass(frozen=True)
class FourierBlocks:
    """Harmonic blocks H^[k] of the time-periodic Hamiltonian.

    Only k = 0 and odd k carry weight for 50% duty square waves; even k != 0
    vanish identically.  Blocks satisfy H^[k] = H^[-k] and are real symmetric.
    """

    blocks: dict
    omega: float
    n_c: int

    @property
    def max_harmonic(self) -> int:
        return 2 * self.n_c + 1

    def block(self, k: int) -> np.ndarray:
        if abs(k) > self.max_harmonic:
            raise KeyError(f"harmonic {k} outside stored range +-{self.max_harmonic}")
        return self.blocks.get(abs(k), np.zeros((3, 3)))


@dataclass(frozen=True)
class FloquetDecomposition:
    """Quasi-energies and eigenvectors of the truncated Floquet matrix."""

    quasi_energies: np.ndarray
    eigenvectors: np.ndarray  # columns, in the composite |level, photon> basis
    omega: float
    n_c: int

    @property
    def matrix_dim(self) -> int:
        return 3 * (2 * self.n_c + 1)


def fourier_blocks(params: QutritParams, schedule: DriveSchedule, n_c: int = 40) -> FourierBlocks:
    """Harmonic decomposition of the square-wave-gated Hamiltonian.

    The DC block carries -omega/4 couplings (half-duty average of the -omega/2
    on-values); odd harmonics carry omega/((2n-1) pi) amplitudes.  For the
    complementary scheme the probe and control harmonic signs alternate in
    opposition; for the simultaneous scheme the two fields share one envelope,
    so the signs coincide.
    """
    if schedule.scheme is Scheme.UNMODULATED:
        raise ValueError("fourier blocks require a modulated schedule")
    if n_c < 1:
        raise ValueError(f"n_c must be >= 1, got {n_c!r}")
    dc = np.array(
        [
            [-0.5 * params.delta, -0.25 * params.omega_p, 0.0],
            [-0.25 * params.omega_p, 0.5 * params.delta, -0.25 * params.omega_c],
            [0.0, -0.25 * params.omega_c, 0.5 * params.delta],
        ]
    )
    blocks = {0: dc}
    for n in range(1, n_c + 2):
        k = 2 * n - 1
        if k > 2 * n_c + 1:
            break
        probe_sign = (-1.0) ** n
        control_sign = probe_sign if schedule.scheme is Scheme.SIMULTANEOUS else -probe_sign
        p = 0.5 * probe_sign * params.omega_p / (k * math.pi)
        c = 0.5 * control_sign * params.omega_c / (k * math.pi)
        blocks[k] = np.array([[0.0, p, 0.0], [p, 0.0, c], [0.0, c, 0.0]])
    return FourierBlocks(blocks=blocks, omega=schedule.omega, n_c=n_c)


def reconstruct_hamiltonian(blocks: FourierBlocks, t) -> np.ndarray:
    """Resum the harmonic blocks at time t.

    The cosine series is even about t = 0, so the reconstructed gating is the
    canonical envelope shifted a quarter period earlier: the probe-on window
    is (-tau/4, tau/4).
    """
    t = np.asarray(t, dtype=float)
    out = np.broadcast_to(blocks.block(0), t.shape + (3, 3)).copy()
    for k in range(1, blocks.max_harmonic + 1, 2):
        out += 2.0 * np.cos(k * blocks.omega * t)[..., None, None] * blocks.block(k)
    return out


def build_floquet_matrix(blocks: FourierBlocks, n_c: int) -> np.ndarray:
    """Assemble the real symmetric Floquet matrix of dimension 3 (2 n_c + 1).

    Block (n, m) is H^[n - m]; photon index n adds n omega on the diagonal.
    """
    if n_c < 1:
        raise ValueError(f"n_c must be >= 1, got {n_c!r}")
    if 2 * n_c > blocks.max_harmonic + 1:
        raise ValueError(
            f"blocks hold harmonics up to {blocks.max_harmonic}, not enough for n_c = {n_c}"
        )
    size = 2 * n_c + 1
    out = np.zeros((3 * size, 3 * size))
    for i, n in enumerate(range(-n_c, n_c + 1)):
        for j, m in enumerate(range(-n_c, n_c + 1)):
            k = n - m
            if k == 0:
                out[3 * i : 3 * i + 3, 3 * j : 3 * j + 3] = blocks.block(0) + n * blocks.omega * np.eye(3)
            elif abs(k) <= blocks.max_harmonic and k % 2 != 0:
                out[3 * i : 3 * i + 3, 3 * j : 3 * j + 3] = blocks.block(k)
    return out


def diagonalize(matrix: np.ndarray) -> FloquetDecomposition:
    """Full spectrum of a real symmetric Floquet matrix.

    Residuals ||H v - q v|| are checked against 1e-9 ||H||; solver failures
    surface as FloquetError.
    """
    matrix = np.asarray(matrix, dtype=float)
    dim = matrix.shape[0]
    if matrix.ndim != 2 or matrix.shape[1] != dim or dim % 3 != 0 or dim < 9:
        raise ValueError(f"expected a 3(2n_c+1)-dimensional square matrix, got {matrix.shape}")
    asym = np.max(np.abs(matrix - matrix.T))
    if asym > 1e-12 * max(1.0, np.max(np.abs(matrix))):
        raise ValueError(f"matrix is not symmetric: max |A - A^T| = {asym:.3e}")
    try:
        energies, vectors = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails here
        raise FloquetError(f"eigensolver did not converge: {exc}") from exc
    scale = float(np.max(np.abs(energies))) or 1.0
    residual = np.max(np.abs(matrix @ vectors - vectors * energies))
    if residual > 1e-9 * scale:
        raise FloquetError(f"eigenpair residual {residual:.3e} exceeds 1e-9 * ||H||")
    n_c = (dim // 3 - 1) // 2
    return FloquetDecomposition(
        quasi_energies=energies,
        eigenvectors=vectors,
        omega=float("nan"),
        n_c=n_c,
    )


def decompose(params: QutritParams, schedule: DriveSchedule, n_c: int = 40) -> FloquetDecomposition:
    """Convenience path: blocks -> matrix -> spectrum, tagged with omega."""
    blocks = fourier_blocks(params, schedule, n_c)
    decomp = diagonalize(build_floquet_matrix(blocks, n_c))
    return FloquetDecomposition(
        quasi_energies=decomp.quasi_energies,
        eigenvectors=decomp.eigenvectors,
        omega=blocks.omega,
        n_c=n_c,
    )


def _basis_index(n: int, level: int, n_c: int) -> int:
    return 3 * (n + n_c) + level


def time_averaged_population(decomp: FloquetDecomposition, alpha: int, beta: int) -> float:
    """Infinite-time-averaged population of level alpha, starting from level beta.

    Sums eigenvector weights over all photon indices:
    sum_n sum_q |<alpha n|q>|^2 |<q|beta 0>|^2.
    """
    for name, level in (("alpha", alpha), ("beta", beta)):
        if level not in (0, 1, 2):
            raise ValueError(f"{name} must be 0, 1 or 2, got {level!r}")
    vectors = decomp.eigenvectors
    start_row = vectors[_basis_index(0, beta, decomp.n_c), :]
    alpha_rows = vectors[alpha::3, :]
    weights = np.sum(alpha_rows * alpha_rows, axis=0)
    return float(np.dot(weights, start_row * start_row))


def excited_state_signal(decomp: FloquetDecomposition) -> float:
    """Time-averaged excited-state signal, the alpha in {1, 2} population sum."""
    return time_averaged_population(decomp, 1, 0) + time_averaged_population(decomp, 2, 0)

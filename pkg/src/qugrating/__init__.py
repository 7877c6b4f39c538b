"""Spectra of a square-wave-modulated driven qutrit.

Four mutually cross-validating backends (Lindblad integration, closed-form
time-domain gratings, Floquet diagonalization, and an effective
nearly-degenerate model) behind one sweep harness and CLI.
"""

from .config import ConfigError, RunConfig, default_config, parse_config
from .core import (
    DriveSchedule,
    PhaseTriple,
    QutritParams,
    Scheme,
    dbm_to_rabi,
    drive_envelope,
    level_phases,
    period_phases,
    rabi_to_dbm,
    relative_phases,
)
from .floquet import (
    FloquetDecomposition,
    FourierBlocks,
    build_floquet_matrix,
    decompose,
    diagonalize,
    excited_state_signal,
    fourier_blocks,
    time_averaged_population,
)
from .grating import (
    GratingConfig,
    default_slit_count,
    diffraction_d,
    interference_g,
    mid_signal,
    modulated_at_signal,
)
from .gridio import emit_csv, read_csv
from .gvv import (
    GvvCutoffs,
    ResonanceGrid,
    bessel_j,
    envelope_omega_sq,
    gvv_coupling,
    gvv_spectrum,
    resonance_grid,
    total_linewidth,
)
from .lindblad import (
    DensityMatrix,
    SteadyStateResult,
    evolve,
    hamiltonian_at,
    steady_state_ratio,
    steady_state_signal,
    transmission,
)
from .sweep import (
    FitError,
    PeakFit,
    ResidualReport,
    SpectrumGrid,
    compare,
    find_peaks,
    fit_lorentzian,
    smooth_row,
    sweep,
)

__version__ = "0.1.0"

import math

import numpy as np
import pytest

from qugrating.core import DriveSchedule, QutritParams, Scheme
from qugrating.grating import (
    default_slit_count,
    diffraction_d,
    interference_g,
    mid_signal,
    modulated_at_signal,
)

from oracles import grating_signal_reference

TAU = 0.05
SIM = DriveSchedule(Scheme.SIMULTANEOUS, tau=TAU)
COMP = DriveSchedule(Scheme.COMPLEMENTARY, tau=TAU)


def test_diffraction_values():
    assert diffraction_d(0.0) == 1.0
    assert diffraction_d(math.pi) == pytest.approx(0.0, abs=1e-30)
    assert diffraction_d(math.pi / 2) == pytest.approx(4.0 / math.pi**2, rel=1e-12)


def test_interference_values():
    x = np.linspace(-3.0, 3.0, 301)
    assert np.allclose(interference_g(x, 1), 1.0, atol=1e-12)
    assert interference_g(0.0, 4) == 16.0
    assert interference_g(math.pi / 8, 2) == pytest.approx(2.0, rel=1e-12)


def test_interference_removable_singularities():
    for k in range(-3, 4):
        assert interference_g(0.5 * math.pi * k, 5) == pytest.approx(25.0, rel=1e-9)


def test_interference_validates_slits():
    with pytest.raises(ValueError):
        interference_g(0.3, 0)
    with pytest.raises(TypeError):
        interference_g(0.3, 2.5)


def test_shapes_even_periodic_nonnegative():
    rng = np.random.default_rng(2)
    x = rng.uniform(-20, 20, size=2000)
    d = diffraction_d(x)
    g = interference_g(x, 4)
    assert np.array_equal(d, diffraction_d(-x))
    assert np.array_equal(g, interference_g(-x, 4))
    assert np.all(d >= 0) and np.all(g >= 0)
    assert np.allclose(g, interference_g(x + math.pi, 4), rtol=1e-6, atol=1e-6)


def test_default_slit_count_reference_rates():
    p = QutritParams.from_mhz()
    assert default_slit_count(p, COMP) == 4


def test_modulated_at_center_value():
    p = QutritParams(delta=0.0, omega_c=0.0)
    assert modulated_at_signal(p, SIM, 4) == pytest.approx(2.0 * 16.0, rel=1e-12)


def test_modulated_at_requires_simultaneous():
    p = QutritParams.from_mhz(delta=1.0, omega_c=10.0)
    with pytest.raises(ValueError):
        modulated_at_signal(p, COMP, 4)
    with pytest.raises(ValueError):
        mid_signal(p, SIM, 4)


def test_modulated_at_peaks_on_branch_ladder():
    # local maxima sit within 1 MHz of the teeth where the lowered-branch
    # per-period phase is a multiple of 2 pi (the envelope slope pulls a bit)
    oc = 40.0
    for n in (-1, 0, 1, 2):
        tooth = oc / 4.0 + n * 20.0  # theta_p = 2 pi n at tau = 50 ns
        local = tooth + np.linspace(-3.0, 3.0, 241)
        vals = [
            modulated_at_signal(QutritParams.from_mhz(delta=d, omega_c=oc), SIM, 4)
            for d in local
        ]
        assert abs(local[int(np.argmax(vals))] - tooth) < 1.0


def test_mid_center_value_at_full_turn_control():
    # omega_c tau = 8 pi puts both branch phases on a comb tooth
    p = QutritParams(delta=0.0, omega_c=8.0 * math.pi / TAU)
    assert mid_signal(p, COMP, 4) == pytest.approx(2.0 * 16.0, rel=1e-12)


def test_mid_envelope_zeros():
    # the shared envelope vanishes when theta_3 = 8 pi n, i.e. every 40 MHz/n
    for n in (1, 2):
        delta_mhz = 2.0 * n / TAU  # 40, 80 MHz
        p = QutritParams.from_mhz(delta=delta_mhz, omega_c=40.0)
        assert mid_signal(p, COMP, 4) == pytest.approx(0.0, abs=1e-20)


def test_mid_envelope_max_at_zero_detuning():
    for oc in (10.0, 40.0, 80.0):
        deltas = np.linspace(-60, 60, 241)
        vals = np.array(
            [mid_signal(QutritParams.from_mhz(delta=d, omega_c=oc), COMP, 4) for d in deltas]
        )
        smooth = np.convolve(vals, np.ones(41) / 41.0, mode="same")
        center = deltas[np.argmax(smooth)]
        assert abs(center) <= 10.0


def test_mid_symmetric_in_detuning_bitwise():
    rng = np.random.default_rng(9)
    for _ in range(100):
        d = rng.uniform(0.1, 80.0)
        oc = rng.uniform(0.0, 90.0)
        a = mid_signal(QutritParams.from_mhz(delta=d, omega_c=oc), COMP, 4)
        b = mid_signal(QutritParams.from_mhz(delta=-d, omega_c=oc), COMP, 4)
        assert a == b
        a = modulated_at_signal(QutritParams.from_mhz(delta=d, omega_c=oc), SIM, 4)
        b = modulated_at_signal(QutritParams.from_mhz(delta=-d, omega_c=oc), SIM, 4)
        assert a == b


def test_mid_envelope_control_invariant_bitwise():
    # the envelope factor depends only on theta_3 = 2 delta tau
    from qugrating.core import period_phases

    rng = np.random.default_rng(13)
    for _ in range(100):
        d = rng.uniform(-80, 80)
        envs = set()
        for oc in rng.uniform(0, 90, size=4):
            ph = period_phases(QutritParams.from_mhz(delta=d, omega_c=oc), COMP)
            envs.add(diffraction_d(0.125 * ph.theta_3))
        assert len(envs) == 1


@pytest.mark.parametrize(
    "schedule, signal_fn",
    [(COMP, mid_signal), (SIM, modulated_at_signal)],
    ids=["complementary", "simultaneous"],
)
def test_grating_matches_unitary_reference(schedule, signal_fn):
    """Both closed forms track the dissipation-free propagation of the gated
    three-level system (weak probe, N periods), up to one global scale."""
    n_slits = 4
    deltas = np.linspace(-60.0, 60.0, 201)
    brute = np.empty_like(deltas)
    formula = np.empty_like(deltas)
    for i, d in enumerate(deltas):
        p = QutritParams.from_mhz(delta=d, omega_p=0.02, omega_c=40.0)
        brute[i] = grating_signal_reference(p, schedule, n_slits)
        formula[i] = signal_fn(p, schedule, n_slits)
    brute /= brute.max()
    formula /= formula.max()
    assert np.max(np.abs(brute - formula)) < 0.05


def test_modulated_at_branch_support():
    # lowered-branch comb teeth far outside the single-slit support stay small
    oc = 20.0
    p_in = QutritParams.from_mhz(delta=oc / 4.0, omega_c=oc)
    peak = modulated_at_signal(p_in, SIM, 4)
    p_out = QutritParams.from_mhz(delta=-55.0, omega_c=oc)  # tooth outside both branches
    assert modulated_at_signal(p_out, SIM, 4) < 0.10 * peak

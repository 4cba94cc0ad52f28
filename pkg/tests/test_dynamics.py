import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cqad.core import ModeSet, ValidationError
from cqad.dynamics import (
    IntegrationError,
    Regime,
    RegimeThresholds,
    classify_regime,
    decay_scan,
    dressed_eigenvalues,
    effective_hamiltonian,
    emitted_pulse_metrics,
    evolve_amplitudes,
    evolve_single_excitation,
    multimode_decay_rate,
    phonon_emission_probability,
    purcell_factor,
    purcell_rate,
)
from cqad.estimation import decay_rate_from_curve

import devices as dev

WQ = 5e9
BAND = (4e9, 6e9)


def single(detuning=0.0, kappa=1e6, g=1e5):
    return ModeSet.from_arrays([WQ + detuning], [kappa], [g], band=BAND)


def test_purcell_rate_examples():
    assert purcell_rate(1.0, 4.0) == 1.0
    assert purcell_rate(0.0, 4.0) == 0.0
    assert purcell_rate(0.36e6, 2.275e6) == pytest.approx(2.279e5, rel=1e-3)
    with pytest.raises(ValueError):
        purcell_rate(1.0, 0.0)


def test_rate_on_resonance_and_half_width():
    g, k, g0 = 2e5, 1e6, 1e3
    assert multimode_decay_rate(WQ, single(0.0, k, g), g0) == pytest.approx(g0 + 4 * g * g / k, rel=1e-14)
    assert multimode_decay_rate(WQ, single(k / 2, k, g), g0) == pytest.approx(g0 + 2 * g * g / k, rel=1e-14)


def test_empty_bath_gives_intrinsic_rate():
    empty = ModeSet((), BAND)
    assert multimode_decay_rate(WQ, empty, 123.0) == 123.0
    scan = decay_scan(np.linspace(4.5e9, 5.5e9, 5), empty, 123.0)
    assert np.all(scan.rates == 123.0)


def test_rate_matches_loop_oracle():
    rng = np.random.default_rng(1)
    f = np.sort(rng.uniform(4.5e9, 5.5e9, 30))
    k = rng.uniform(1e5, 5e6, 30)
    g = rng.uniform(0, 1e6, 30)
    ms = ModeSet.from_arrays(f, k, g, band=BAND)
    for wq in rng.uniform(4.5e9, 5.5e9, 20):
        assert multimode_decay_rate(wq, ms, 1e4) == pytest.approx(dev.lorentzian_sum(wq, f, k, g, 1e4), rel=1e-12)


def test_microring_purcell_with_ten_neighbours():
    spec = dev.ring_spec()
    band = (dev.RING_F0 - 10.5 * dev.RING_FSR, dev.RING_F0 + 10.5 * dev.RING_FSR)
    from cqad.cavity import ring_mode_set

    modes = ring_mode_set(spec, band)
    assert len(modes) == 21
    f_p = purcell_factor(multimode_decay_rate(dev.RING_F0, modes, dev.RING_GAMMA0), dev.RING_GAMMA0)
    assert 15 <= f_p <= 21


def test_coupled_lossless_mode_rejected():
    with pytest.raises(ValueError):
        multimode_decay_rate(WQ, single(0.0, 0.0, 1e5), 0.0)


def test_purcell_and_probability():
    assert purcell_factor(5.0, 5.0) == 1.0
    assert phonon_emission_probability(5.0, 5.0) == 0.0
    assert phonon_emission_probability(19.2, 1.0) == pytest.approx(0.9479, abs=1e-3)
    assert phonon_emission_probability(14.0, 1.0) == pytest.approx(0.9286, abs=1e-4)
    with pytest.raises(ValueError):
        purcell_factor(1.0, 0.0)
    with pytest.raises(ValueError):
        phonon_emission_probability(0.5, 1.0)


def test_pulse_metrics():
    d, length = emitted_pulse_metrics(2.67e6, 3600.0)
    assert d == pytest.approx(374.5e-9, rel=1e-3)
    assert length == pytest.approx(1348e-6, rel=1e-3)
    d2, _ = emitted_pulse_metrics(2 * 2.67e6, 3600.0)
    assert d2 == pytest.approx(d / 2, rel=1e-15)
    assert emitted_pulse_metrics(2.67e6, 0.0)[1] == 0.0
    d_hz, _ = emitted_pulse_metrics(2.67e6 / (2 * math.pi), 3600.0, convention="hz")
    assert d_hz == pytest.approx(d, rel=1e-12)
    with pytest.raises(ValueError):
        emitted_pulse_metrics(1.0, 1.0, convention="rad")
    with pytest.raises(ValueError):
        emitted_pulse_metrics(0.0, 1.0)


def test_decoupled_qubit_decays_exponentially():
    g0 = 2e4
    t = np.linspace(0, 5 / (2 * np.pi * g0), 100)
    pe = evolve_single_excitation(WQ, single(0, 1e6, 0.0), g0, t).populations
    np.testing.assert_allclose(pe, np.exp(-2 * np.pi * g0 * t), rtol=1e-6)


def test_bad_cavity_limit():
    g = 1e5
    k = 50 * g
    ms = single(0.0, k, g)
    rate = purcell_rate(g, k)
    t = np.linspace(0, 4 / (2 * np.pi * rate), 200)
    fitted = decay_rate_from_curve(evolve_single_excitation(WQ, ms, 0.0, t))
    assert fitted == pytest.approx(rate, rel=0.05)


def test_vacuum_rabi_oscillation():
    g = 3e5
    t = np.linspace(0, 4 / g, 300)
    pe = evolve_single_excitation(WQ, single(0, 0.0, g), 0.0, t).populations
    assert np.max(np.abs(pe - dev.rabi_population(g, t))) < 1e-6


def test_hamiltonian_layout():
    ms = ModeSet.from_arrays([WQ + 1e6, WQ + 2e6], [1e5, 2e5], [3e4, 4e4], band=BAND)
    h = effective_hamiltonian(WQ, ms, 1e3)
    assert h[0, 0] == pytest.approx(-1j * np.pi * 1e3)
    assert h[2, 2] == pytest.approx(2 * np.pi * 2e6 - 1j * np.pi * 2e5)
    assert h[0, 2] == h[2, 0] == pytest.approx(2 * np.pi * 4e4)
    assert h[1, 2] == 0


def test_amplitudes_require_grid_from_zero():
    with pytest.raises(ValueError):
        evolve_amplitudes(WQ, single(), 0.0, [1e-9, 2e-9])
    with pytest.raises(ValueError):
        evolve_amplitudes(WQ, single(), 0.0, [0.0, 2e-9, 1e-9])


def test_integration_failure_reported(monkeypatch):
    import cqad.dynamics as dyn

    class Failed:
        success = False
        message = "step size underflow"
        y = np.array([[1.0, 1.1, 1.0]], dtype=complex)

    monkeypatch.setattr(dyn, "solve_ivp", lambda *a, **k: Failed())
    with pytest.raises(IntegrationError) as exc:
        dyn.evolve_amplitudes(WQ, single(), 0.0, np.linspace(0, 1e-6, 10))
    assert exc.value.max_local_error == pytest.approx(0.21)
    assert "max local error" in str(exc.value)


def test_dressed_eigenvalues_decoupled():
    ms = ModeSet.from_arrays([WQ - 1e6, WQ + 1e6], [1e5, 2e5], [0.0, 0.0], band=BAND)
    ev = dressed_eigenvalues(WQ, ms, 1e3)
    expected = np.array([WQ - 1e6 - 0.5e5j, WQ - 0.5e3j, WQ + 1e6 - 1e5j])
    np.testing.assert_allclose(ev, expected, rtol=1e-14)


def test_vacuum_rabi_splitting():
    g = 2.1e6
    ev = dressed_eigenvalues(WQ, single(0, 0.0, g), 0.0)
    assert ev[1].real - ev[0].real == pytest.approx(2 * g, rel=1e-12)


def test_strong_coupling_splitting():
    g, k, g0 = 2.1e6, 2.4e6, 3.3e4
    ev = dressed_eigenvalues(WQ, single(0, k, g), g0)
    exact = 2 * math.sqrt(g * g - ((k - g0) / 4) ** 2)
    assert ev[1].real - ev[0].real == pytest.approx(exact, rel=1e-9)


def test_fp_scan_couplings_follow_idt():
    spec = dev.fp_spec()
    from cqad.cavity import fp_mode_set

    modes = fp_mode_set(spec, (5.2e9, 5.3e9))
    f = np.array([5.22e9, 5.35e9])
    scan = decay_scan(f, modes, 1e3, spec.idt, spec.material.phase_velocity, g_scale=0.0)
    np.testing.assert_array_equal(scan.rates, [1e3, 1e3])
    with pytest.raises(ValueError):
        decay_scan(f[::-1], modes, 1e3)


def test_regimes_of_fp_device():
    spec = dev.fp_spec()
    assert classify_regime(5.00e9, spec) is Regime.LOSSY_CAVITY
    assert classify_regime(5.25e9, spec) is Regime.CQAD
    annotated = RegimeThresholds(anomaly_bands=((5.15e9, 5.17e9),))
    assert classify_regime(5.16e9, spec, annotated) is Regime.ANOMALOUS
    assert classify_regime(5.35e9 * 1.05, spec) is Regime.UNCOUPLED


# --- properties ----------------------------------------------------------------

mode_sets = st.integers(1, 4).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(-20000, 20000), min_size=n, max_size=n, unique=True),
        st.lists(st.floats(1e4, 5e6), min_size=n, max_size=n),
        st.lists(st.floats(0.0, 2e6), min_size=n, max_size=n),
    )
)


def _modes(spec):
    det, k, g = spec
    order = np.argsort(det)
    return ModeSet.from_arrays(WQ + 1e3 * np.array(det, dtype=float)[order], np.array(k)[order], np.array(g)[order], band=BAND)


@settings(max_examples=100, deadline=None)
@given(mode_sets, st.floats(-50e6, 50e6), st.floats(0.0, 1e5))
def test_rate_bounds(spec, offset, gamma0):
    ms = _modes(spec)
    rate = multimode_decay_rate(WQ + offset, ms, gamma0)
    assert rate >= gamma0
    assert rate - gamma0 <= np.sum(4 * ms.couplings**2 / ms.linewidths) * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 50e6), st.floats(1e4, 5e6), st.floats(0.0, 2e6))
def test_detuning_symmetry(delta, k, g):
    ms = single(0.0, k, g)
    assert multimode_decay_rate(WQ + delta, ms, 10.0) == multimode_decay_rate(WQ - delta, ms, 10.0)


@settings(max_examples=100, deadline=None)
@given(mode_sets, st.floats(0.0, 1e5))
def test_eigenvalue_trace(spec, gamma0):
    ms = _modes(spec)
    ev = dressed_eigenvalues(WQ, ms, gamma0)
    total = -(gamma0 + ms.linewidths.sum()) / 2
    assert ev.imag.sum() == pytest.approx(total, rel=1e-9, abs=1e-9 * WQ * 1e-6)
    assert np.all(np.diff(ev.real) >= 0)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1e6), st.floats(1.0, 1e3))
def test_purcell_identity(gamma0, factor):
    ge = gamma0 * factor
    assert phonon_emission_probability(ge, gamma0) == 1 - 1 / purcell_factor(ge, gamma0)


@settings(max_examples=25, deadline=None)
@given(mode_sets, st.floats(0.0, 1e5))
def test_norm_never_grows(spec, gamma0):
    ms = _modes(spec)
    t = np.linspace(0, 2e-6, 60)
    amps = evolve_amplitudes(WQ, ms, gamma0, t)
    norm = np.sum(np.abs(amps) ** 2, axis=1)
    assert norm[0] == 1.0
    assert np.all(np.diff(norm) <= 1e-9)


def test_norm_conserved_without_loss():
    ms = ModeSet.from_arrays([WQ - 1e6, WQ + 2e6], [0.0, 0.0], [3e5, 5e5], band=BAND)
    amps = evolve_amplitudes(WQ, ms, 0.0, np.linspace(0, 5e-6, 200))
    assert np.max(np.abs(np.sum(np.abs(amps) ** 2, axis=1) - 1)) < 1e-7

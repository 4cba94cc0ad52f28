"""Qubit decay in a structured phonon bath.

Everything works in the single-excitation sector of the multimode
Jaynes-Cummings model: the state is the amplitude on ``|e, vac>`` plus one
amplitude per phonon mode on ``|g, 1_n>``. Losses enter through a
non-Hermitian effective Hamiltonian, which is the Lindblad equation with
the jump (re-excitation free) terms dropped.

Inputs are ordinary frequencies in Hz; conversion to angular units happens
only inside :func:`evolve_single_excitation`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import DecayCurve, FPCavitySpec, IDTSpec, ModeSet, ScanData, ensure_valid
from .cavity import DEFAULT_R_MIN, round_trip_retention
from .wave import coupling_profile

RTOL = 1e-9
ATOL = 1e-12


class IntegrationError(RuntimeError):
    """The ODE solver gave up; ``max_local_error`` is the largest norm growth seen."""

    def __init__(self, message, max_local_error=math.nan):
        self.max_local_error = max_local_error
        super().__init__(f"{message} (max local error estimate {max_local_error:.3g})")


def purcell_rate(g, kappa):
    """Bad-cavity emission rate ``4 g^2 / kappa`` into a resonant mode."""
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa <= 0):
        raise ValueError("kappa must be > 0")
    out = 4.0 * np.asarray(g, dtype=float) ** 2 / kappa
    return float(out) if out.ndim == 0 else out


def _lorentz_sum(wq, freqs, kappas, couplings):
    wq = np.asarray(wq, dtype=float)
    det = wq[..., None] - freqs
    terms = 4 * couplings**2 * kappas / (4 * det**2 + kappas**2)
    return terms.sum(axis=-1)


def multimode_decay_rate(qubit_frequency, modes: ModeSet, intrinsic_rate: float):
    """Qubit decay rate in Hz summed over every mode of ``modes``.

    ``gamma_e = gamma_0 + sum_n 4 g_n^2 kappa_n / (4 (w_q - w_n)^2 + kappa_n^2)``.
    ``qubit_frequency`` may be an array.
    """
    if np.any((modes.linewidths == 0) & (modes.couplings > 0)):
        raise ValueError("a coupled lossless mode has no decay rate; evolve the state instead")
    if len(modes) == 0:
        out = np.full(np.shape(qubit_frequency), float(intrinsic_rate))
    else:
        out = intrinsic_rate + _lorentz_sum(
            qubit_frequency, modes.frequencies, modes.linewidths, modes.couplings
        )
    return float(out) if np.ndim(out) == 0 else out


def purcell_factor(gamma_e, gamma_0):
    if not gamma_0 > 0:
        raise ValueError("gamma_0 must be > 0")
    return gamma_e / gamma_0


def phonon_emission_probability(gamma_e, gamma_0):
    """Share of the decay that goes into the cavity, ``1 - 1/F_P``."""
    if not gamma_0 > 0:
        raise ValueError("gamma_0 must be > 0")
    if gamma_e < gamma_0:
        raise ValueError("gamma_e must be >= gamma_0")
    return 1.0 - 1.0 / purcell_factor(gamma_e, gamma_0)


def emitted_pulse_metrics(rate, group_velocity, convention="per_second"):
    """Duration (s) and spatial length (m) of an emitted phonon wavepacket.

    With ``convention="per_second"`` the rate is used as given, in 1/s. With
    ``convention="hz"`` it is a stored /2pi rate and is multiplied by 2 pi
    first. The duration is the reciprocal of the resulting rate.
    """
    if convention == "per_second":
        gamma = rate
    elif convention == "hz":
        gamma = 2 * math.pi * rate
    else:
        raise ValueError(f"unknown rate convention {convention!r}")
    if not gamma > 0:
        raise ValueError("rate must be > 0")
    duration = 1.0 / gamma
    return duration, group_velocity * duration


def effective_hamiltonian(qubit_frequency, modes: ModeSet, intrinsic_rate) -> np.ndarray:
    """Angular-frequency H_eff in the frame rotating at the qubit frequency.

    Index 0 is the qubit; index n + 1 is mode n.
    """
    n = len(modes)
    h = np.zeros((n + 1, n + 1), dtype=complex)
    h[0, 0] = -1j * math.pi * intrinsic_rate
    if n:
        idx = np.arange(1, n + 1)
        h[idx, idx] = 2 * math.pi * (modes.frequencies - qubit_frequency) - 1j * math.pi * modes.linewidths
        h[0, idx] = h[idx, 0] = 2 * math.pi * modes.couplings
    return h


def evolve_amplitudes(qubit_frequency, modes, intrinsic_rate, t_grid, rtol=RTOL, atol=ATOL):
    """Single-excitation amplitudes at ``t_grid`` starting from ``c_e = 1``.

    Returns a ``(len(t_grid), len(modes) + 1)`` complex array.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1 or t_grid[0] != 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must start at 0 and increase strictly")
    h = effective_hamiltonian(qubit_frequency, modes, intrinsic_rate)
    minus_ih = -1j * h
    y0 = np.zeros(h.shape[0], dtype=complex)
    y0[0] = 1.0
    if t_grid.size == 1:
        return y0[None, :]
    sol = solve_ivp(
        lambda t, y: minus_ih @ y,
        (0.0, t_grid[-1]),
        y0,
        method="DOP853",
        t_eval=t_grid,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        # the norm can only decay, so any growth along the partial
        # trajectory is integration error
        err = math.nan
        if sol.y.shape[1] > 1:
            norm = np.sum(np.abs(sol.y) ** 2, axis=0)
            err = float(max(np.max(np.diff(norm)), 0.0))
        raise IntegrationError(sol.message, err)
    return sol.y.T


def evolve_single_excitation(
    qubit_frequency, modes: ModeSet, intrinsic_rate, t_grid, rtol=RTOL, atol=ATOL
) -> DecayCurve:
    """Excited-state population ``P_e(t)`` after preparing ``|e, vac>``."""
    amps = evolve_amplitudes(qubit_frequency, modes, intrinsic_rate, t_grid, rtol, atol)
    pe = np.abs(amps[:, 0]) ** 2
    return DecayCurve(np.asarray(t_grid, dtype=float), np.clip(pe, 0.0, None))


def dressed_eigenvalues(qubit_frequency, modes: ModeSet, intrinsic_rate) -> np.ndarray:
    """Complex eigenfrequencies (Hz) of the single-excitation block.

    Diagonal ``w_q - i gamma_0 / 2`` and ``w_n - i kappa_n / 2``,
    off-diagonal ``g_n``. Sorted by real part.
    """
    n = len(modes)
    m = np.zeros((n + 1, n + 1), dtype=complex)
    m[0, 0] = qubit_frequency - 0.5j * intrinsic_rate
    if n:
        idx = np.arange(1, n + 1)
        m[idx, idx] = modes.frequencies - 0.5j * modes.linewidths
        m[0, idx] = m[idx, 0] = modes.couplings
    try:
        # shift to the qubit frequency so small splittings keep their precision
        vals = np.linalg.eigvals(m - qubit_frequency * np.eye(n + 1)) + qubit_frequency
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"eigenvalue solver did not converge: {exc}") from exc
    return vals[np.argsort(vals.real, kind="stable")]


def decay_scan(
    qubit_frequencies,
    modes: ModeSet,
    intrinsic_rate,
    idt: IDTSpec | None = None,
    phase_velocity=None,
    g_scale=1.0,
) -> ScanData:
    """Decay rate at each qubit frequency.

    With ``idt`` given, every mode's coupling is replaced by the IDT coupling
    at the qubit frequency (times ``g_scale``), i.e. the qubit only reaches
    the phonon bath through the transducer passband it currently sits in.
    """
    wq = np.asarray(qubit_frequencies, dtype=float)
    if np.any(np.diff(wq) <= 0):
        raise ValueError("qubit frequencies must increase strictly")
    if idt is None or len(modes) == 0:
        rates = multimode_decay_rate(wq, modes, intrinsic_rate)
    else:
        g = g_scale * np.asarray(coupling_profile(wq, idt, phase_velocity))
        det = wq[:, None] - modes.frequencies
        k = modes.linewidths
        rates = intrinsic_rate + (4 * g[:, None] ** 2 * k / (4 * det**2 + k**2)).sum(axis=1)
    return ScanData(wq, np.atleast_1d(rates))


class Regime(str, enum.Enum):
    LOSSY_CAVITY = "lossy_cavity"
    ANOMALOUS = "anomalous"
    CQAD = "cqad"
    UNCOUPLED = "uncoupled"


@dataclass(frozen=True)
class RegimeThresholds:
    r_min: float = DEFAULT_R_MIN
    g_min_fraction: float = 0.05
    anomaly_bands: tuple = ()


def classify_regime(f, spec: FPCavitySpec, thresholds: RegimeThresholds = RegimeThresholds()):
    """Label the operating regime of an FP device at qubit frequency ``f``.

    ``anomalous`` is returned only inside a user-annotated band, since the
    model has no mechanism for it. Below the coupling threshold the qubit is
    reported ``uncoupled``.
    """
    for lo, hi in thresholds.anomaly_bands:
        if lo <= f <= hi:
            return Regime.ANOMALOUS
    ensure_valid(spec)
    g = float(coupling_profile(f, spec.idt, spec.material.phase_velocity))
    if g < thresholds.g_min_fraction * spec.idt.peak_coupling:
        return Regime.UNCOUPLED
    retention = float(round_trip_retention([f], spec)[0])
    return Regime.LOSSY_CAVITY if retention < thresholds.r_min else Regime.CQAD

"""Phonon mode combs of Fabry-Perot and microring cavities."""
from __future__ import annotations

import math

import numpy as np

from .core import FPCavitySpec, ModeSet, RingCavitySpec, ensure_valid
from .wave import bragg_frequency, coupling_profile, mirror_reflectance

DEFAULT_R_MIN = 0.1
# floor on the round-trip retention so a transparent mirror gives a finite width
_MIN_RETENTION = 1e-300


def fsr(group_velocity: float, length: float, kind: str = "fp") -> float:
    """Free spectral range in Hz.

    For a Fabry-Perot cavity ``length`` is the mirror separation and the round
    trip is twice that; for a ring it is the circumference.
    """
    if not (group_velocity > 0 and length > 0):
        raise ValueError("group velocity and length must be > 0")
    if kind == "fp":
        return group_velocity / (2 * length)
    if kind == "ring":
        return group_velocity / length
    raise ValueError(f"unknown cavity kind {kind!r}")


def comb(anchor: float, spacing: float, band) -> np.ndarray:
    """Frequencies ``anchor + m * spacing`` that fall inside ``band``."""
    lo, hi = _check_band(band)
    m_lo = math.ceil((lo - anchor) / spacing)
    m_hi = math.floor((hi - anchor) / spacing)
    f = anchor + spacing * np.arange(m_lo, m_hi + 1)
    return f[(f >= lo) & (f <= hi)]


def _check_band(band):
    lo, hi = float(band[0]), float(band[1])
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
        raise ValueError(f"empty band {band!r}")
    if lo <= 0:
        raise ValueError("band must lie at positive frequencies")
    return lo, hi


def fp_fsr(spec: FPCavitySpec) -> float:
    return fsr(spec.material.group_velocity, spec.mirror_separation, "fp")


def fp_anchor(spec: FPCavitySpec) -> float:
    if spec.anchor_frequency is not None:
        return spec.anchor_frequency
    left = bragg_frequency(spec.left_mirror, spec.material)
    right = bragg_frequency(spec.right_mirror, spec.material)
    return 0.5 * (left + right)


def round_trip_retention(freqs, spec: FPCavitySpec, grid=None) -> np.ndarray:
    """Power left after one round trip, ``|r_left|^2 |r_right|^2``.

    With ``grid`` set, reflectances are tabulated at that spacing and
    interpolated, which is much cheaper when the same band is queried often.
    """
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    if grid is None:
        left = mirror_reflectance(freqs, spec.left_mirror, spec.material)
        right = mirror_reflectance(freqs, spec.right_mirror, spec.material)
        return left * right
    if not grid > 0:
        raise ValueError("grid must be > 0")
    lo, hi = freqs.min(), freqs.max()
    n = max(2, int(math.ceil((hi - lo) / grid)) + 1)
    table = np.linspace(lo, hi, n) if hi > lo else np.array([lo, lo + grid])
    rt = mirror_reflectance(table, spec.left_mirror, spec.material) * mirror_reflectance(
        table, spec.right_mirror, spec.material
    )
    return np.interp(freqs, table, rt)


def leakage_linewidth(retention, free_spectral_range):
    """Linewidth from mirror leakage, ``FSR * (-ln R_t) / (2 pi)``."""
    retention = np.clip(retention, _MIN_RETENTION, 1.0)
    return free_spectral_range * (-np.log(retention)) / (2 * np.pi)


def fp_mode_arrays(
    freqs,
    spec: FPCavitySpec,
    free_spectral_range=None,
    intrinsic_q=None,
    g_scale=1.0,
    retention=None,
    grid=None,
):
    """Linewidths and couplings of FP modes at given frequencies.

    Lower level than :func:`fp_mode_set`: the estimation code calls it with
    trial values for the FSR, intrinsic Q and coupling scale.
    """
    freqs = np.asarray(freqs, dtype=float)
    f_fsr = fp_fsr(spec) if free_spectral_range is None else free_spectral_range
    q_i = spec.intrinsic_q if intrinsic_q is None else intrinsic_q
    if retention is None:
        retention = round_trip_retention(freqs, spec, grid)
    kappa = leakage_linewidth(retention, f_fsr)
    if q_i is not None:
        kappa = kappa + freqs / q_i
    g = g_scale * coupling_profile(freqs, spec.idt, spec.material.phase_velocity)
    return kappa, np.asarray(g, dtype=float), retention


def fp_mode_set(spec: FPCavitySpec, band, grid=None, r_min=DEFAULT_R_MIN) -> ModeSet:
    """Standing-wave modes of a Fabry-Perot cavity inside ``band``.

    Modes sit on a uniform comb anchored at ``spec.anchor_frequency`` (the
    mirrors' Bragg frequency by default). Each linewidth adds mirror leakage
    to ``f / intrinsic_q``; couplings follow the IDT profile. Modes whose
    round-trip retention is below ``r_min`` are flagged ``lossy`` but kept.
    """
    ensure_valid(spec)
    _check_band(band)
    f_fsr = fp_fsr(spec)
    freqs = comb(fp_anchor(spec), f_fsr, band)
    kappa, g, retention = fp_mode_arrays(freqs, spec, f_fsr, grid=grid)
    if np.any(kappa <= 0):
        raise ValueError("zero linewidth: lossless mirrors need a finite intrinsic_q")
    return ModeSet.from_arrays(freqs, kappa, g, band=band, lossy=retention < r_min)


def ring_fsr(spec: RingCavitySpec) -> float:
    return fsr(spec.material.group_velocity, spec.circumference, "ring")


def ring_mode_set(spec: RingCavitySpec, band) -> ModeSet:
    """Uniform microring comb: every mode has ``kappa = f / Q`` and the same g."""
    ensure_valid(spec)
    freqs = comb(spec.reference_frequency, ring_fsr(spec), band)
    kappa = freqs / spec.uniform_q
    g = np.full(freqs.shape, spec.uniform_coupling)
    return ModeSet.from_arrays(freqs, kappa, g, band=band)


def cavity_fsr(spec) -> float:
    if isinstance(spec, FPCavitySpec):
        return fp_fsr(spec)
    if isinstance(spec, RingCavitySpec):
        return ring_fsr(spec)
    raise TypeError(f"not a cavity spec: {type(spec).__name__}")


def device_mode_set(spec, band, pad_modes: int = 0) -> ModeSet:
    """Mode set of either cavity kind, with ``band`` widened by ``pad_modes`` FSRs.

    Padding keeps the off-resonant tails of modes just outside a scan window.
    """
    _check_band(band)
    pad = pad_modes * cavity_fsr(spec)
    wide = (max(band[0] - pad, 0.5 * band[0]), band[1] + pad)
    if isinstance(spec, FPCavitySpec):
        return fp_mode_set(spec, wide)
    return ring_mode_set(spec, wide)

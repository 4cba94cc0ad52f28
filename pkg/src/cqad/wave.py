"""Frequency response of the passive acoustic elements.

Mirrors are modelled as a scalar 1-D stack of metallised and bare waveguide
segments. Amplitudes are (forward, backward) displacement waves and a
transfer matrix ``M`` maps the amplitudes just left of an element onto those
just right of it, so for a wave incident from the left

    r = -M[1, 0] / M[1, 1],    t = det(M) / M[1, 1].

Segment impedance is taken proportional to the local velocity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DBRSpec, IDTSpec, MaterialParams, ensure_valid

SINGULAR_M22 = 1e-30


class NumericFailure(ArithmeticError):
    """A frequency response could not be evaluated reliably."""


@dataclass(frozen=True)
class ComplexReflectivity:
    r: complex
    t: complex

    @property
    def reflectance(self) -> float:
        return abs(self.r) ** 2

    @property
    def transmittance(self) -> float:
        return abs(self.t) ** 2


def _interface(z_from, z_to):
    rho = z_from / z_to
    return 0.5 * np.array([[1 + rho, 1 - rho], [1 - rho, 1 + rho]], dtype=complex)


def _propagate(phase, loss=0.0):
    return np.array(
        [[np.exp(1j * phase - loss), 0.0], [0.0, np.exp(-1j * phase + loss)]],
        dtype=complex,
    )


def _metal_velocity(spec: DBRSpec, material: MaterialParams) -> float:
    return material.phase_velocity * (1.0 - spec.velocity_contrast)


def bragg_frequency(spec: DBRSpec, material: MaterialParams) -> float:
    """Frequency at which one period accumulates a propagation phase of pi."""
    v = material.phase_velocity
    vm = _metal_velocity(spec, material)
    transit = spec.duty_cycle * spec.period / vm + (1 - spec.duty_cycle) * spec.period / v
    return 1.0 / (2.0 * transit)


def dbr_unit_cell_matrix(f: float, spec: DBRSpec, material: MaterialParams) -> np.ndarray:
    """Transfer matrix of one mirror period (metallised strip, then bare gap)."""
    if not f > 0:
        raise ValueError(f"frequency must be > 0 (got {f})")
    ensure_valid(spec)
    ensure_valid(material)
    v = material.phase_velocity
    vm = _metal_velocity(spec, material)
    metal = spec.duty_cycle * spec.period
    bare = (1 - spec.duty_cycle) * spec.period
    into_metal = _interface(v, vm)
    out_of_metal = _interface(vm, v)
    p_metal = _propagate(2 * math.pi * f * metal / vm)
    p_bare = _propagate(2 * math.pi * f * bare / v, spec.per_cell_amplitude_loss)
    return p_bare @ out_of_metal @ p_metal @ into_metal


def _to_reflectivity(m: np.ndarray) -> ComplexReflectivity:
    m22 = m[1, 1]
    if abs(m22) < SINGULAR_M22:
        raise NumericFailure(f"|M22| = {abs(m22):.3g} too small to invert")
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    return ComplexReflectivity(complex(-m[1, 0] / m22), complex(det / m22))


def mirror_matrix(f: float, spec: DBRSpec, material: MaterialParams, cells=None) -> np.ndarray:
    n = spec.strip_count if cells is None else cells
    if n == 0:
        return np.eye(2, dtype=complex)
    return np.linalg.matrix_power(dbr_unit_cell_matrix(f, spec, material), int(n))


def mirror_reflectivity(
    f: float, spec: DBRSpec, material: MaterialParams, cells=None
) -> ComplexReflectivity:
    """Amplitude reflectivity and transmissivity of a Bragg mirror.

    ``cells`` overrides ``spec.strip_count``; zero cells is a bare waveguide.
    """
    if not f > 0:
        raise ValueError(f"frequency must be > 0 (got {f})")
    return _to_reflectivity(mirror_matrix(f, spec, material, cells))


def mirror_reflectance(freqs, spec: DBRSpec, material: MaterialParams) -> np.ndarray:
    """Vectorised ``|r|**2`` over a frequency array."""
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    if np.any(freqs <= 0):
        raise ValueError("frequencies must be > 0")
    ensure_valid(spec)
    ensure_valid(material)
    v = material.phase_velocity
    vm = _metal_velocity(spec, material)
    ph_m = 2 * np.pi * freqs * spec.duty_cycle * spec.period / vm
    ph_b = 2 * np.pi * freqs * (1 - spec.duty_cycle) * spec.period / v
    cell = np.empty(freqs.shape + (2, 2), dtype=complex)
    p_metal = np.zeros_like(cell)
    p_metal[:, 0, 0] = np.exp(1j * ph_m)
    p_metal[:, 1, 1] = np.exp(-1j * ph_m)
    p_bare = np.zeros_like(cell)
    a = spec.per_cell_amplitude_loss
    p_bare[:, 0, 0] = np.exp(1j * ph_b - a)
    p_bare[:, 1, 1] = np.exp(-1j * ph_b + a)
    cell = p_bare @ _interface(vm, v) @ p_metal @ _interface(v, vm)
    total = np.linalg.matrix_power(cell, int(spec.strip_count))
    m22 = total[:, 1, 1]
    if np.any(np.abs(m22) < SINGULAR_M22):
        raise NumericFailure("mirror transfer matrix is singular in the band")
    return np.abs(total[:, 1, 0] / m22) ** 2


def idt_response(f, spec: IDTSpec, phase_velocity=None):
    """Normalised array factor of an IDT, ``|sin(N pi d) / (N sin(pi d))|``.

    ``d = (f - f0) / f0`` is the fractional detuning from the synchronous
    frequency. Accepts scalars or arrays and returns values in [0, 1].
    """
    f0 = spec.resolved_center(phase_velocity)
    n = spec.finger_pairs
    f_arr = np.asarray(f, dtype=float)
    delta = (f_arr - f0) / f0
    s = np.sin(np.pi * delta)
    # near the grating orders the kernel -> 1; use the limit there
    near = np.abs(s) < 1e-12
    safe = np.where(near, 1.0, s)
    a = np.abs(np.sin(n * np.pi * delta) / (n * safe))
    a = np.where(near, 1.0, a)
    a = np.clip(a, 0.0, 1.0)
    return float(a) if np.ndim(a) == 0 else a


def coupling_profile(f, spec: IDTSpec, phase_velocity=None):
    """Qubit-phonon coupling (Hz) set by the IDT lineshape."""
    return spec.peak_coupling * idt_response(f, spec, phase_velocity)

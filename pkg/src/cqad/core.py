"""Shared domain types for cQAD device modelling.

Unit convention
---------------
Every rate, linewidth, coupling and frequency is an ordinary frequency in Hz,
i.e. the "/2pi" value usually quoted in experiments. A stored rate ``r``
corresponds to an energy relaxation time ``T1 = 1 / (2 pi r)``. Lengths are in
metres, velocities in m/s and times in seconds.

Linewidths are full widths at half maximum, ``kappa = f / Q``.

Device description dataclasses do not validate on construction so that malformed
descriptions can be inspected with :func:`validate`. Operations that need a
sound description call :func:`ensure_valid`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields, is_dataclass
from typing import Optional

import numpy as np

POPULATION_HEADROOM = 0.05
MIN_DECAY_SAMPLES = 8


class ValidationError(ValueError):
    """Raised when a spec or data container breaks one of its invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class Violation:
    field: str
    message: str

    def __str__(self):
        return f"{self.field}: {self.message}"


@dataclass(frozen=True)
class MaterialParams:
    phase_velocity: float
    group_velocity: float
    substrate_velocity: Optional[float] = None


@dataclass(frozen=True)
class DBRSpec:
    period: float
    duty_cycle: float = 0.5
    strip_count: int = 100
    velocity_contrast: float = 0.02
    per_cell_amplitude_loss: float = 0.0


@dataclass(frozen=True)
class IDTSpec:
    finger_pairs: int
    period: float
    peak_coupling: float
    center_frequency: Optional[float] = None

    def resolved_center(self, phase_velocity: Optional[float] = None) -> float:
        """Centre frequency, falling back to ``phase_velocity / period``."""
        if self.center_frequency is not None:
            return self.center_frequency
        if phase_velocity is None:
            raise ValueError("IDT centre frequency needs a phase velocity")
        return phase_velocity / self.period


@dataclass(frozen=True)
class FPCavitySpec:
    mirror_separation: float
    left_mirror: DBRSpec
    right_mirror: DBRSpec
    idt: IDTSpec
    material: MaterialParams
    intrinsic_q: Optional[float] = None
    anchor_frequency: Optional[float] = None


@dataclass(frozen=True)
class RingCavitySpec:
    circumference: float
    uniform_q: float
    uniform_coupling: float
    reference_frequency: float
    material: MaterialParams


@dataclass(frozen=True)
class QubitSpec:
    frequency: float
    intrinsic_rate: float

    @property
    def t1(self) -> float:
        return rate_to_t1(self.intrinsic_rate)


@dataclass(frozen=True)
class Mode:
    frequency: float
    linewidth: float
    coupling: float
    lossy: bool = False


@dataclass(frozen=True)
class ModeSet:
    modes: tuple = ()
    band: tuple = (0.0, math.inf)

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "band", (float(self.band[0]), float(self.band[1])))
        problems = _modeset_violations(self)
        if problems:
            raise ValidationError(problems)

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([m.frequency for m in self.modes], dtype=float)

    @property
    def linewidths(self) -> np.ndarray:
        return np.array([m.linewidth for m in self.modes], dtype=float)

    @property
    def couplings(self) -> np.ndarray:
        return np.array([m.coupling for m in self.modes], dtype=float)

    @classmethod
    def from_arrays(cls, frequencies, linewidths, couplings, band=None, lossy=None):
        frequencies = np.asarray(frequencies, dtype=float)
        if lossy is None:
            lossy = np.zeros(frequencies.shape, dtype=bool)
        modes = tuple(
            Mode(float(f), float(k), float(g), bool(lo))
            for f, k, g, lo in zip(frequencies, linewidths, couplings, lossy)
        )
        if band is None:
            band = (frequencies.min(), frequencies.max()) if len(modes) else (0.0, math.inf)
        return cls(modes, band)


class FitStatus(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    SINGULAR = "singular"


@dataclass(frozen=True, eq=False)
class DecayCurve:
    times: np.ndarray
    populations: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "populations", np.asarray(self.populations, dtype=float))
        problems = _curve_violations(self)
        if problems:
            raise ValidationError(problems)

    def __eq__(self, other):
        if not isinstance(other, DecayCurve):
            return NotImplemented
        return np.array_equal(self.times, other.times) and np.array_equal(
            self.populations, other.populations
        )

    def __len__(self):
        return self.times.size


@dataclass(frozen=True, eq=False)
class ScanData:
    frequencies: np.ndarray
    rates: np.ndarray
    uncertainties: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "frequencies", np.asarray(self.frequencies, dtype=float))
        object.__setattr__(self, "rates", np.asarray(self.rates, dtype=float))
        if self.uncertainties is not None:
            object.__setattr__(
                self, "uncertainties", np.asarray(self.uncertainties, dtype=float)
            )
        problems = _scan_violations(self)
        if problems:
            raise ValidationError(problems)

    def __eq__(self, other):
        if not isinstance(other, ScanData):
            return NotImplemented
        if (self.uncertainties is None) != (other.uncertainties is None):
            return False
        same = np.array_equal(self.frequencies, other.frequencies) and np.array_equal(
            self.rates, other.rates
        )
        if self.uncertainties is not None:
            same = same and np.array_equal(self.uncertainties, other.uncertainties)
        return same

    def __len__(self):
        return self.frequencies.size


@dataclass(frozen=True)
class FitResult:
    """Outcome of a least-squares fit.

    ``errors`` maps every free parameter to its standard error and is ``None``
    unless the fit converged. ``fixed`` names the parameters held constant.
    ``flags`` carries diagnostics such as ``at_bound:<name>`` or
    ``poorly_constrained:<name>``.
    """

    parameters: dict
    residual_norm: float
    status: FitStatus
    errors: Optional[dict] = None
    fixed: tuple = ()
    flags: tuple = ()
    iterations: int = 0
    initial_residual_norm: float = math.nan

    def __post_init__(self):
        object.__setattr__(self, "status", FitStatus(self.status))
        object.__setattr__(self, "fixed", tuple(self.fixed))
        object.__setattr__(self, "flags", tuple(self.flags))
        if self.residual_norm < 0:
            raise ValidationError([Violation("residual_norm", "must be >= 0")])
        if self.status is not FitStatus.CONVERGED and self.errors is not None:
            raise ValidationError(
                [Violation("errors", "only reported for converged fits")]
            )

    def __getitem__(self, name):
        return self.parameters[name]

    @property
    def converged(self) -> bool:
        return self.status is FitStatus.CONVERGED

    def relative_error(self, name: str) -> float:
        if self.errors is None:
            return math.inf
        value = self.parameters[name]
        return abs(self.errors[name] / value) if value else math.inf


def rate_to_t1(rate: float) -> float:
    """Energy relaxation time for a rate stored in Hz."""
    if not rate > 0:
        raise ValueError(f"rate must be > 0 (got {rate})")
    return 1.0 / (2.0 * math.pi * rate)


def t1_to_rate(t1: float) -> float:
    if not t1 > 0:
        raise ValueError(f"T1 must be > 0 (got {t1})")
    return 1.0 / (2.0 * math.pi * t1)


def linewidth(frequency, q):
    """Full linewidth of a resonance with quality factor ``q``."""
    return frequency / q


# --- validation -------------------------------------------------------------


def _positive(problems, name, value):
    if value is None or not np.isfinite(value) or value <= 0:
        problems.append(Violation(name, f"must be > 0 (got {value})"))


def _nonnegative(problems, name, value):
    if value is None or not np.isfinite(value) or value < 0:
        problems.append(Violation(name, f"must be >= 0 (got {value})"))


def _material_violations(spec, prefix=""):
    out = []
    _positive(out, prefix + "phase_velocity", spec.phase_velocity)
    _positive(out, prefix + "group_velocity", spec.group_velocity)
    if spec.substrate_velocity is not None:
        _positive(out, prefix + "substrate_velocity", spec.substrate_velocity)
    v = spec.group_velocity
    if v is not None and np.isfinite(v) and v > 0 and not 1000.0 <= v <= 10000.0:
        out.append(
            Violation(prefix + "group_velocity", f"outside [1000, 10000] m/s (got {v})")
        )
    return out


def _dbr_violations(spec, prefix=""):
    out = []
    _positive(out, prefix + "period", spec.period)
    d = spec.duty_cycle
    if not (np.isfinite(d) and 0.0 < d < 1.0):
        out.append(Violation(prefix + "duty_cycle", f"must lie in (0, 1) (got {d})"))
    if int(spec.strip_count) != spec.strip_count or spec.strip_count < 1:
        out.append(
            Violation(prefix + "strip_count", f"must be an integer >= 1 (got {spec.strip_count})")
        )
    c = spec.velocity_contrast
    if not (np.isfinite(c) and abs(c) < 0.5):
        out.append(Violation(prefix + "velocity_contrast", f"|value| must be < 0.5 (got {c})"))
    _nonnegative(out, prefix + "per_cell_amplitude_loss", spec.per_cell_amplitude_loss)
    return out


def _idt_violations(spec, prefix=""):
    out = []
    if int(spec.finger_pairs) != spec.finger_pairs or spec.finger_pairs < 1:
        out.append(
            Violation(prefix + "finger_pairs", f"must be an integer >= 1 (got {spec.finger_pairs})")
        )
    _positive(out, prefix + "period", spec.period)
    if spec.center_frequency is not None:
        _positive(out, prefix + "center_frequency", spec.center_frequency)
    _nonnegative(out, prefix + "peak_coupling", spec.peak_coupling)
    return out


def _fp_violations(spec, prefix=""):
    out = []
    _positive(out, prefix + "mirror_separation", spec.mirror_separation)
    out += _dbr_violations(spec.left_mirror, prefix + "left_mirror.")
    out += _dbr_violations(spec.right_mirror, prefix + "right_mirror.")
    out += _idt_violations(spec.idt, prefix + "idt.")
    out += _material_violations(spec.material, prefix + "material.")
    if spec.intrinsic_q is not None:
        _positive(out, prefix + "intrinsic_q", spec.intrinsic_q)
    if spec.anchor_frequency is not None:
        _positive(out, prefix + "anchor_frequency", spec.anchor_frequency)
    return out


def _ring_violations(spec, prefix=""):
    out = []
    _positive(out, prefix + "circumference", spec.circumference)
    _positive(out, prefix + "uniform_q", spec.uniform_q)
    _nonnegative(out, prefix + "uniform_coupling", spec.uniform_coupling)
    _positive(out, prefix + "reference_frequency", spec.reference_frequency)
    out += _material_violations(spec.material, prefix + "material.")
    return out


def _qubit_violations(spec, prefix=""):
    out = []
    _positive(out, prefix + "frequency", spec.frequency)
    _nonnegative(out, prefix + "intrinsic_rate", spec.intrinsic_rate)
    return out


def _modeset_violations(ms):
    out = []
    f = np.array([m.frequency for m in ms.modes], dtype=float)
    for i, m in enumerate(ms.modes):
        # zero width is allowed for idealised lossless modes (coherent dynamics only)
        if not (np.isfinite(m.linewidth) and m.linewidth >= 0):
            out.append(Violation(f"modes[{i}].linewidth", f"must be >= 0 (got {m.linewidth})"))
        if not (np.isfinite(m.coupling) and m.coupling >= 0):
            out.append(Violation(f"modes[{i}].coupling", f"must be >= 0 (got {m.coupling})"))
    if f.size > 1 and np.any(np.diff(f) <= 0):
        out.append(Violation("modes", "frequencies must be strictly increasing"))
    lo, hi = ms.band
    if not lo <= hi:
        out.append(Violation("band", f"lower edge above upper edge ({lo} > {hi})"))
    if f.size and (f.min() < lo or f.max() > hi):
        out.append(Violation("modes", "mode outside band"))
    return out


def _curve_violations(curve):
    out = []
    t, p = curve.times, curve.populations
    if t.ndim != 1 or t.shape != p.shape:
        return [Violation("populations", "times and populations must be equal-length 1-D arrays")]
    if t.size < MIN_DECAY_SAMPLES:
        out.append(Violation("times", f"need at least {MIN_DECAY_SAMPLES} samples (got {t.size})"))
    if np.any(np.diff(t) <= 0):
        out.append(Violation("times", "must be strictly increasing"))
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1 + POPULATION_HEADROOM):
        out.append(Violation("populations", f"must lie in [0, {1 + POPULATION_HEADROOM}]"))
    return out


def _scan_violations(scan):
    out = []
    f, r = scan.frequencies, scan.rates
    if f.ndim != 1 or f.shape != r.shape:
        return [Violation("rates", "frequencies and rates must be equal-length 1-D arrays")]
    if scan.uncertainties is not None:
        if scan.uncertainties.shape != f.shape:
            out.append(Violation("uncertainties", "must match frequencies in length"))
        elif np.any(scan.uncertainties <= 0):
            out.append(Violation("uncertainties", "must be > 0"))
    if np.any(np.diff(f) <= 0):
        out.append(Violation("frequencies", "must be strictly increasing"))
    if np.any(~np.isfinite(r)) or np.any(r < 0):
        out.append(Violation("rates", "must be finite and >= 0"))
    return out


_VALIDATORS = {
    MaterialParams: _material_violations,
    DBRSpec: _dbr_violations,
    IDTSpec: _idt_violations,
    FPCavitySpec: _fp_violations,
    RingCavitySpec: _ring_violations,
    QubitSpec: _qubit_violations,
}


def validate(spec) -> list:
    """List every invariant ``spec`` breaks; empty when it is sound.

    Works on any device spec dataclass. Each :class:`Violation` names the
    offending field (dotted for nested specs) and the bound it breaks.
    """
    check = _VALIDATORS.get(type(spec))
    if check is None:
        raise TypeError(f"no validator for {type(spec).__name__}")
    return check(spec)


def ensure_valid(spec):
    problems = validate(spec)
    if problems:
        raise ValidationError(problems)
    return spec


def as_dict(spec) -> dict:
    """Shallow field map of a spec dataclass (nested specs stay objects)."""
    if not is_dataclass(spec):
        raise TypeError("expected a dataclass instance")
    return {f.name: getattr(spec, f.name) for f in fields(spec)}

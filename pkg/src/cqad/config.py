"""Device configuration files.

An INI-like text format::

    # Fabry-Perot device
    [material]
    phase_velocity = 4905.5
    group_velocity = 3840

    [dbr.left]
    period = 430nm
    ...

Sections are ``[material]``, ``[dbr.left]``, ``[dbr.right]``, ``[idt]``,
``[cavity]`` (``kind = fp`` or ``ring``), ``[qubit]`` and an optional
``[fit]``. Keys are the field names of the corresponding spec classes.
Numbers take SI unit suffixes (``430nm``, ``6.4MHz``, ``4.8us``) and are
normalised to SI on parse. Unknown sections or keys are errors.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Optional, Union

from .core import (
    DBRSpec,
    FPCavitySpec,
    IDTSpec,
    MaterialParams,
    QubitSpec,
    RingCavitySpec,
    ValidationError,
    t1_to_rate,
    validate,
)

# unit -> (dimension, factor to SI); matched case-sensitively
UNITS = {
    "Hz": ("frequency", "1"),
    "kHz": ("frequency", "1e3"),
    "MHz": ("frequency", "1e6"),
    "GHz": ("frequency", "1e9"),
    "nm": ("length", "1e-9"),
    "um": ("length", "1e-6"),
    "µm": ("length", "1e-6"),
    "mm": ("length", "1e-3"),
    "m": ("length", "1"),
    "ns": ("time", "1e-9"),
    "us": ("time", "1e-6"),
    "µs": ("time", "1e-6"),
    "s": ("time", "1"),
    "m/s": ("velocity", "1"),
}

_NUMBER = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([^\s\d].*?)?\s*$")

F, L, T, V, X, I, S = "frequency", "length", "time", "velocity", "number", "integer", "text"

SCHEMA = {
    "material": {"phase_velocity": V, "group_velocity": V, "substrate_velocity": V},
    "dbr": {
        "period": L,
        "duty_cycle": X,
        "strip_count": I,
        "velocity_contrast": X,
        "per_cell_amplitude_loss": X,
    },
    "idt": {"finger_pairs": I, "period": L, "center_frequency": F, "peak_coupling": F},
    "cavity": {
        "kind": S,
        "mirror_separation": L,
        "intrinsic_q": X,
        "anchor_frequency": F,
        "circumference": L,
        "fsr": F,
        "uniform_q": X,
        "uniform_coupling": F,
        "reference_frequency": F,
    },
    "qubit": {"frequency": F, "intrinsic_rate": F, "t1": T},
    "fit": {
        "fixed": S,
        "loss": S,
        "huber_delta": X,
        "starts": I,
        "max_iter": I,
        "pad_modes": I,
        "reference_frequency": F,
    },
}
SECTIONS = ("material", "dbr.left", "dbr.right", "idt", "cavity", "qubit", "fit")
FP_KEYS = {"kind", "mirror_separation", "intrinsic_q", "anchor_frequency"}
RING_KEYS = {"kind", "circumference", "fsr", "uniform_q", "uniform_coupling", "reference_frequency"}


class ConfigError(ValueError):
    """Malformed or incomplete configuration; carries a position when known."""

    def __init__(self, message, line=None, column=None, section=None):
        self.line = line
        self.column = column
        self.section = section
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


def parse_quantity(text: str, dimension: str = None) -> float:
    """Parse ``"430nm"`` style quantities to SI floats.

    ``dimension`` restricts the accepted suffixes; a bare number is taken to
    be in SI already.
    """
    m = _NUMBER.match(text)
    if not m:
        raise ValueError(f"not a number: {text!r}")
    number, unit = m.group(1), m.group(2)
    try:
        value = Decimal(number)
    except InvalidOperation as exc:
        raise ValueError(f"not a number: {text!r}") from exc
    if unit:
        entry = UNITS.get(unit.strip().replace("\u03bc", "\u00b5"))
        if entry is None:
            raise ValueError(f"unknown unit {unit!r}")
        dim, factor = entry
        if dimension is not None and dim != dimension:
            raise ValueError(f"unit {unit!r} is a {dim}, expected a {dimension}")
        value *= Decimal(factor)
    return float(value)


@dataclass(frozen=True)
class FitSettings:
    fixed: tuple = ()
    loss: str = "least_squares"
    huber_delta: float = 1.0
    starts: int = 8
    max_iter: int = 200
    pad_modes: int = 20
    reference_frequency: Optional[float] = None


@dataclass(frozen=True)
class DeviceConfig:
    material: MaterialParams
    cavity: Union[FPCavitySpec, RingCavitySpec]
    qubit: Optional[QubitSpec] = None
    fit: FitSettings = field(default_factory=FitSettings)

    @property
    def kind(self) -> str:
        return "fp" if isinstance(self.cavity, FPCavitySpec) else "ring"

    def require(self, section: str):
        """Return a section's spec or fail with an error naming it."""
        value = {"qubit": self.qubit, "cavity": self.cavity, "material": self.material}[section]
        if value is None:
            raise ConfigError(f"missing [{section}] section", section=section)
        return value


def _tokenise(text):
    """Yield ``(section, key, value, line, key_col, value_col)``; headers have key None."""
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        indent = len(line) - len(line.lstrip())
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError("unterminated section header", lineno, len(line) + 1)
            section = stripped[1:-1].strip().lower()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno, indent + 2, section)
            yield section, None, None, lineno, indent + 1, None
            continue
        if "=" not in stripped:
            raise ConfigError("expected 'key = value'", lineno, indent + 1)
        if section is None:
            raise ConfigError("key outside of any section", lineno, indent + 1)
        key, _, value = line.partition("=")
        value_col = len(key) + 2 + (len(value) - len(value.lstrip()))
        yield section, key.strip(), value.strip(), lineno, indent + 1, value_col


def _read_sections(text):
    sections = {}
    for section, key, value, line, key_col, col in _tokenise(text):
        if key is None:
            if section in sections:
                raise ConfigError(f"duplicate section [{section}]", line, key_col, section)
            sections[section] = {}
            continue
        schema = SCHEMA["dbr" if section.startswith("dbr") else section]
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} in [{section}]", line, key_col, section)
        if key in sections[section]:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", line, key_col, section)
        dim = schema[key]
        if dim == S:
            parsed = value
        else:
            try:
                parsed = parse_quantity(value, dim)
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}", line, col, section) from None
            if dim == I:
                if parsed != int(parsed):
                    raise ConfigError(f"{key}: expected an integer", line, col, section)
                parsed = int(parsed)
        sections[section][key] = parsed
    return sections


def _need(sections, name):
    if name not in sections:
        raise ConfigError(f"missing [{name}] section", section=name)
    return sections[name]


def _build(cls, values, section, required):
    missing = [k for k in required if k not in values]
    if missing:
        raise ConfigError(f"[{section}] is missing {', '.join(missing)}", section=section)
    return cls(**values)


def parse_config(text: str) -> DeviceConfig:
    """Parse and validate a device configuration document."""
    sections = _read_sections(text)
    material = _build(MaterialParams, _need(sections, "material"), "material", ["phase_velocity", "group_velocity"])
    cav = dict(_need(sections, "cavity"))
    kind = cav.pop("kind", None)
    if kind not in ("fp", "ring"):
        raise ConfigError("[cavity] kind must be 'fp' or 'ring'", section="cavity")
    if kind == "fp":
        extra = set(cav) - FP_KEYS
        if extra:
            raise ConfigError(f"[cavity] keys {sorted(extra)} do not apply to an fp cavity", section="cavity")
        left = _build(DBRSpec, _need(sections, "dbr.left"), "dbr.left", ["period"])
        right = _build(DBRSpec, _need(sections, "dbr.right"), "dbr.right", ["period"])
        idt = _build(IDTSpec, _need(sections, "idt"), "idt", ["finger_pairs", "period", "peak_coupling"])
        if "mirror_separation" not in cav:
            raise ConfigError("[cavity] is missing mirror_separation", section="cavity")
        cavity = FPCavitySpec(left_mirror=left, right_mirror=right, idt=idt, material=material, **cav)
    else:
        extra = set(cav) - RING_KEYS
        for name in ("dbr.left", "dbr.right", "idt"):
            if name in sections:
                raise ConfigError(f"[{name}] does not apply to a ring cavity", section=name)
        if extra:
            raise ConfigError(f"[cavity] keys {sorted(extra)} do not apply to a ring cavity", section="cavity")
        spacing = cav.pop("fsr", None)
        if "circumference" not in cav:
            if spacing is None:
                raise ConfigError("ring cavity needs circumference or fsr", section="cavity")
            cav["circumference"] = material.group_velocity / spacing
        elif spacing is not None:
            raise ConfigError("give either circumference or fsr, not both", section="cavity")
        cavity = _build(
            lambda **kw: RingCavitySpec(material=material, **kw),
            cav,
            "cavity",
            ["circumference", "uniform_q", "uniform_coupling", "reference_frequency"],
        )
    qubit = None
    if "qubit" in sections:
        q = dict(sections["qubit"])
        if "t1" in q:
            if "intrinsic_rate" in q:
                raise ConfigError("give either intrinsic_rate or t1, not both", section="qubit")
            q["intrinsic_rate"] = t1_to_rate(q.pop("t1"))
        qubit = _build(QubitSpec, q, "qubit", ["frequency", "intrinsic_rate"])
    fit = FitSettings()
    if "fit" in sections:
        f = dict(sections["fit"])
        if "fixed" in f:
            f["fixed"] = tuple(s.strip() for s in f["fixed"].split(",") if s.strip())
        fit = FitSettings(**f)

    problems = validate(cavity)
    if qubit is not None:
        problems += [type(v)(f"qubit.{v.field}", v.message) for v in validate(qubit)]
    if problems:
        raise ValidationError(problems)
    return DeviceConfig(material, cavity, qubit, fit)


def load_config(path) -> DeviceConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _fmt(value):
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def _section(lines, name, values):
    lines.append(f"[{name}]")
    for k, v in values.items():
        if v is not None:
            lines.append(f"{k} = {_fmt(v)}")
    lines.append("")


def dump_config(cfg: DeviceConfig) -> str:
    """Serialise a :class:`DeviceConfig`; ``parse_config`` reads it back equal."""
    lines = []
    m = cfg.material
    _section(lines, "material", {
        "phase_velocity": m.phase_velocity,
        "group_velocity": m.group_velocity,
        "substrate_velocity": m.substrate_velocity,
    })
    c = cfg.cavity
    if isinstance(c, FPCavitySpec):
        for name, mirror in (("dbr.left", c.left_mirror), ("dbr.right", c.right_mirror)):
            _section(lines, name, vars(mirror))
        _section(lines, "idt", vars(c.idt))
        keys = ("mirror_separation", "intrinsic_q", "anchor_frequency")
        kind = "fp"
    else:
        keys = ("circumference", "uniform_q", "uniform_coupling", "reference_frequency")
        kind = "ring"
    lines += ["[cavity]", f"kind = {kind}"]
    lines += [f"{k} = {_fmt(getattr(c, k))}" for k in keys if getattr(c, k) is not None]
    lines.append("")
    if cfg.qubit is not None:
        _section(lines, "qubit", vars(cfg.qubit))
    if cfg.fit != FitSettings():
        f = cfg.fit
        values = {
            "fixed": ", ".join(f.fixed) if f.fixed else None,
            "loss": f.loss,
            "huber_delta": f.huber_delta,
            "starts": f.starts,
            "max_iter": f.max_iter,
            "pad_modes": f.pad_modes,
            "reference_frequency": f.reference_frequency,
        }
        lines.append("[fit]")
        for k, v in values.items():
            if v is not None:
                lines.append(f"{k} = {v if isinstance(v, str) else _fmt(v)}")
        lines.append("")
    return "\n".join(lines)

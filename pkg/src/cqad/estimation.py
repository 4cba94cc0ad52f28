"""Parameter extraction from decay curves and decay-rate scans.

Three model families are fitted with the box-constrained Levenberg-Marquardt
solver in :mod:`cqad.lm`:

* ``exponential``: ``P_e(t) = A exp(-t / T1) + B``
* ``ring_model``: uniform microring comb, free ``gamma0_hz, q, g_hz, fsr_hz,
  f_offset_hz``
* ``fp_model``: Fabry-Perot comb with mirror leakage and IDT coupling shape
  taken from a device spec, free ``gamma0_hz, g_scale, intrinsic_q, fsr_hz,
  f_anchor_hz``

Multimode fits run several deterministic starts around the initial guess and
keep the lowest residual, which guards against locking onto an aliased comb.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import find_peaks

from .cavity import fp_fsr, leakage_linewidth
from .core import (
    DecayCurve,
    FitResult,
    FitStatus,
    FPCavitySpec,
    ScanData,
    ValidationError,
    Violation,
    ensure_valid,
)
from .lm import LMStatus, levenberg_marquardt
from .wave import coupling_profile, mirror_reflectance

RING_PARAMS = ("gamma0_hz", "q", "g_hz", "fsr_hz", "f_offset_hz")
FP_PARAMS = ("gamma0_hz", "g_scale", "intrinsic_q", "fsr_hz", "f_anchor_hz")
EXP_PARAMS = ("t1_s", "amplitude", "offset")
TLS_PARAMS = ("q_tls", "n_c", "beta", "q_other")

MODELS = ("fp_model", "ring_model", "exponential", "tls")
PAD_MODES = 20
N_STARTS = 8
JITTER = 0.1
JITTER_SEED = 20240601
POORLY_CONSTRAINED = 0.5
MIN_SPAN_FSR = 2.0
Q_GRID = np.logspace(1.5, 5.5, 81)


@dataclass(frozen=True)
class Parameter:
    value: float
    lower: float = -math.inf
    upper: float = math.inf
    fixed: bool = False
    scale: float | None = None
    jitter: float | None = None


@dataclass(frozen=True)
class FitProblem:
    """Everything a fit needs besides the data.

    ``context`` carries model-specific constants: ``reference_frequency`` and
    ``mode_indices`` for the ring model, ``spec``, ``mode_indices`` and
    ``grid`` for the FP model.
    """

    model: str
    parameters: dict
    loss: str = "least_squares"
    huber_delta: float = 1.0
    starts: int = N_STARTS
    max_iter: int = 200
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        problems = []
        if self.model not in MODELS:
            problems.append(Violation("model", f"unknown model {self.model!r}"))
        if self.loss not in ("least_squares", "huber"):
            problems.append(Violation("loss", f"unknown loss {self.loss!r}"))
        if self.loss == "huber" and not self.huber_delta > 0:
            problems.append(Violation("huber_delta", "must be > 0"))
        for name, p in self.parameters.items():
            if p.fixed:
                continue
            if not (np.isfinite(p.lower) and np.isfinite(p.upper)):
                problems.append(Violation(f"parameters.{name}", "free parameter needs finite bounds"))
            elif not p.lower <= p.value <= p.upper:
                problems.append(
                    Violation(
                        f"parameters.{name}",
                        f"initial value {p.value} outside [{p.lower}, {p.upper}]",
                    )
                )
        if problems:
            raise ValidationError(problems)

    @property
    def free(self):
        return [k for k, p in self.parameters.items() if not p.fixed]

    def with_fixed(self, **values):
        """Copy with the named parameters pinned to the given values."""
        params = dict(self.parameters)
        for name, v in values.items():
            params[name] = Parameter(v, fixed=True)
        return replace(self, parameters=params)


# --- forward models ---------------------------------------------------------


def _lorentz_rates(freqs, gamma0, mode_f, kappa, g):
    det = freqs[:, None] - mode_f[None, :]
    return gamma0 + (4 * g**2 * kappa / (4 * det**2 + kappa**2)).sum(axis=1)


def comb_indices(anchor, spacing, band, pad=PAD_MODES):
    """Integer comb indices covering ``band`` plus ``pad`` modes each side."""
    lo, hi = band
    return np.arange(
        math.floor((lo - anchor) / spacing) - pad, math.ceil((hi - anchor) / spacing) + pad + 1
    )


def ring_model(freqs, params, reference_frequency, mode_indices):
    """Decay rate of a qubit beside a uniform microring comb.

    Modes sit at ``reference_frequency + f_offset_hz + m * fsr_hz`` for each
    integer ``m`` in ``mode_indices``.
    """
    freqs = np.asarray(freqs, dtype=float)
    mode_f = reference_frequency + params["f_offset_hz"] + params["fsr_hz"] * mode_indices
    kappa = mode_f / params["q"]
    return _lorentz_rates(freqs, params["gamma0_hz"], mode_f, kappa, params["g_hz"])


class RetentionTable:
    """Tabulated round-trip retention of an FP spec for fast re-evaluation."""

    def __init__(self, spec: FPCavitySpec, lo, hi, grid):
        n = max(2, int(math.ceil((hi - lo) / grid)) + 1)
        self.f = np.linspace(lo, hi, n)
        self.rt = mirror_reflectance(self.f, spec.left_mirror, spec.material) * mirror_reflectance(
            self.f, spec.right_mirror, spec.material
        )

    def __call__(self, freqs):
        return np.interp(freqs, self.f, self.rt)


def fp_model(freqs, params, spec: FPCavitySpec, mode_indices, retention=None):
    """Decay rate of a qubit in an FP cavity; mirrors and IDT from ``spec``.

    Modes sit at ``f_anchor_hz + m * fsr_hz``. Linewidths combine mirror
    leakage with ``f / intrinsic_q``; couplings are the IDT profile times
    ``g_scale``.
    """
    freqs = np.asarray(freqs, dtype=float)
    mode_f = params["f_anchor_hz"] + params["fsr_hz"] * mode_indices
    if np.any(mode_f <= 0):
        raise ValueError("FP comb reaches non-positive frequencies")
    if retention is None:
        rt = mirror_reflectance(mode_f, spec.left_mirror, spec.material) * mirror_reflectance(
            mode_f, spec.right_mirror, spec.material
        )
    else:
        rt = retention(mode_f)
    kappa = leakage_linewidth(rt, params["fsr_hz"]) + mode_f / params["intrinsic_q"]
    g = params["g_scale"] * coupling_profile(mode_f, spec.idt, spec.material.phase_velocity)
    return _lorentz_rates(freqs, params["gamma0_hz"], mode_f, kappa, g)


def exponential_model(t, params):
    return params["amplitude"] * np.exp(-np.asarray(t) / params["t1_s"]) + params["offset"]


def tls_inverse_q(n, params):
    """``1/Q(n) = (1/Q_TLS) (1 + n/n_c)^-beta + 1/Q_other``."""
    n = np.asarray(n, dtype=float)
    return (1 + n / params["n_c"]) ** (-params["beta"]) / params["q_tls"] + 1 / params["q_other"]


def tls_quality_factor(n, params):
    return 1.0 / tls_inverse_q(n, params)


# --- generic driver ---------------------------------------------------------


def _huber(r, delta):
    a = np.abs(r)
    big = a > delta
    out = r.copy()
    out[big] = np.sign(r[big]) * np.sqrt(2 * delta * a[big] - delta**2)
    return out


def _jittered_starts(problem: FitProblem):
    free = problem.free
    x0 = np.array([problem.parameters[k].value for k in free])
    lo = np.array([problem.parameters[k].lower for k in free])
    hi = np.array([problem.parameters[k].upper for k in free])
    starts = [x0]
    rng = np.random.default_rng(JITTER_SEED)
    for _ in range(1, problem.starts):
        u = rng.uniform(-1, 1, size=x0.size)
        amp = np.array([_jitter(problem.parameters[k]) for k in free])
        starts.append(np.clip(x0 + u * amp, lo, hi))
    return starts


def _jitter(p: Parameter):
    return JITTER * _scale(p) if p.jitter is None else p.jitter


def _scale(p: Parameter):
    if p.scale is not None:
        return p.scale
    if p.value != 0:
        return abs(p.value)
    return max(abs(p.lower), abs(p.upper), 1.0)


def run_fit(problem: FitProblem, predict, y, sigma=None) -> FitResult:
    """Fit ``predict(params) ~ y`` under ``problem`` and package the result."""
    y = np.asarray(y, dtype=float)
    w = None if sigma is None else 1.0 / np.asarray(sigma, dtype=float)
    free = problem.free
    fixed_values = {k: p.value for k, p in problem.parameters.items() if p.fixed}
    lo = np.array([problem.parameters[k].lower for k in free])
    hi = np.array([problem.parameters[k].upper for k in free])
    scale = np.array([_scale(problem.parameters[k]) for k in free])

    def unpack(x):
        params = dict(fixed_values)
        params.update(zip(free, x))
        return params

    def residuals(x):
        r = predict(unpack(x)) - y
        if w is not None:
            r = r * w
        if problem.loss == "huber":
            r = _huber(r, problem.huber_delta)
        return r

    if not free:
        r = residuals(np.array([]))
        norm = float(np.linalg.norm(r))
        return FitResult(unpack([]), norm, FitStatus.CONVERGED, {}, tuple(fixed_values), (), 0, norm)

    best = None
    for x0 in _jittered_starts(problem):
        out = levenberg_marquardt(residuals, x0, lo, hi, scale=scale, max_iter=problem.max_iter)
        # strict '<' keeps the earliest start on ties
        if best is None or out.cost < best.cost:
            best = out
    initial_norm = float(np.linalg.norm(residuals(_jittered_starts(problem)[0])))

    params = unpack(best.x)
    status = FitStatus(best.status.value)
    errors = None
    flags = []
    if status is FitStatus.CONVERGED and best.covariance is not None:
        se = np.sqrt(np.clip(np.diag(best.covariance), 0, None))
        errors = {k: float(e) for k, e in zip(free, se)}
        errors.update({k: 0.0 for k in fixed_values})
        for k in free:
            # offsets near zero are judged against their declared scale
            p = problem.parameters[k]
            ref = max(abs(params[k]), p.scale) if p.scale is not None else abs(params[k])
            if ref > 0 and errors[k] > POORLY_CONSTRAINED * ref:
                flags.append(f"poorly_constrained:{k}")
    elif status is FitStatus.CONVERGED:
        status = FitStatus.SINGULAR
    for k, x, a, b in zip(free, best.x, lo, hi):
        tol = 1e-9 * min(b - a, _scale(problem.parameters[k]))
        if x - a <= tol or b - x <= tol:
            flags.append(f"at_bound:{k}")
    if status is FitStatus.SINGULAR:
        flags.append("singular")
    return FitResult(
        parameters={k: float(v) for k, v in params.items()},
        residual_norm=float(np.sqrt(2 * best.cost)),
        status=status,
        errors=errors,
        fixed=tuple(fixed_values),
        flags=tuple(flags),
        iterations=best.iterations,
        initial_residual_norm=initial_norm,
    )


# --- exponential decay ------------------------------------------------------


def _exponential_guess(t, p):
    offset = p.min() - 0.01 * (p.max() - p.min())
    z = p - offset
    keep = z > 0.05 * z.max()
    if keep.sum() < 2:
        keep = slice(None)
    slope, intercept = np.polyfit(t[keep], np.log(z[keep]), 1)
    t1 = -1.0 / slope if slope < 0 else (t[-1] - t[0])
    return t1, float(np.exp(intercept)), float(offset)


def fit_exponential(curve: DecayCurve, max_iter=200) -> FitResult:
    """Fit ``A exp(-t/T1) + B`` to an excited-state population curve.

    Starts from a log-linear estimate. A flat curve carries no decay time and
    comes back with status ``singular`` and ``t1_s = inf``.
    """
    t, p = curve.times, curve.populations
    span = t[-1] - t[0]
    if not span > 0:
        raise ValidationError([Violation("times", "need a positive time span")])
    p_range = p.max() - p.min()
    if p_range <= 1e-12 * max(abs(p).max(), 1.0):
        return FitResult(
            {"t1_s": math.inf, "amplitude": 0.0, "offset": float(p.mean())},
            0.0,
            FitStatus.SINGULAR,
            flags=("singular",),
        )
    t1, amp, off = _exponential_guess(t, p)
    dt = np.min(np.diff(t))
    t1 = float(np.clip(t1, dt, 100 * span))
    problem = FitProblem(
        "exponential",
        {
            "t1_s": Parameter(t1, dt / 100, 1000 * span),
            "amplitude": Parameter(float(np.clip(amp, -2, 2)), -2.0, 2.0, scale=1.0),
            "offset": Parameter(float(np.clip(off, -1, 2)), -1.0, 2.0, scale=1.0),
        },
        starts=1,
        max_iter=max_iter,
    )
    return run_fit(problem, lambda q: exponential_model(t, q), p)


def decay_rate_from_curve(curve: DecayCurve) -> float:
    """Decay rate in Hz (``1 / (2 pi T1)``) from an exponential fit."""
    res = fit_exponential(curve)
    return 1.0 / (2 * math.pi * res["t1_s"])


# --- peak-based initial guesses ---------------------------------------------


def comb_from_peaks(freqs, rates, prominence=0.2):
    """Estimate comb spacing and one tooth position from scan maxima.

    Returns ``(spacing, anchor, peak_freqs)`` with the anchor the fitted comb
    tooth nearest the middle of the scan. Needs at least two peaks.
    """
    freqs = np.asarray(freqs, dtype=float)
    rates = np.asarray(rates, dtype=float)
    span = rates.max() - rates.min()
    idx, _ = find_peaks(rates, prominence=prominence * span)
    if idx.size < 2:
        raise ValueError("need at least two resolved peaks to estimate the comb spacing")
    pk = _refine_peaks(freqs, rates, idx)
    step0 = np.median(np.diff(pk))
    order = np.round((pk - pk[0]) / step0)
    spacing, first = np.polyfit(order, pk, 1)
    mid = 0.5 * (freqs[0] + freqs[-1])
    anchor = first + spacing * round((mid - first) / spacing)
    return float(spacing), float(anchor), pk


def _refine_peaks(freqs, rates, idx):
    out = []
    for i in idx:
        if 0 < i < freqs.size - 1:
            y0, y1, y2 = rates[i - 1 : i + 2]
            denom = y0 - 2 * y1 + y2
            shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
            h = 0.5 * (freqs[i + 1] - freqs[i - 1])
            out.append(freqs[i] + np.clip(shift, -1, 1) * h)
        else:
            out.append(freqs[i])
    return np.array(out)


def _linear_amplitude_scan(rates, basis_for_q, q_grid):
    """Grid over Q; for each, least-squares ``rates ~ gamma0 + s * basis``."""
    best = None
    for q in q_grid:
        basis = basis_for_q(q)
        a = np.column_stack([np.ones_like(basis), basis])
        coef, *_ = np.linalg.lstsq(a, rates, rcond=None)
        if coef[1] <= 0:
            continue
        coef[0] = max(coef[0], 1e-3 * rates.min())
        ssr = float(np.sum((a @ coef - rates) ** 2))
        if best is None or ssr < best[0]:
            best = (ssr, q, coef[0], coef[1])
    if best is None:
        raise ValueError("scan shows no cavity enhancement to fit")
    return best[1:]


def guess_ring_parameters(scan: ScanData, reference_frequency=None, fsr_hz=None):
    """Data-driven starting point for :func:`fit_ring_model`.

    Returns ``(params, reference_frequency)``. Comb spacing and position come
    from the scan maxima (``fsr_hz`` may be supplied when fewer than two peaks
    are visible); ``Q``, ``g`` and ``gamma_0`` from a linear solve on a Q grid.
    """
    f, y = scan.frequencies, scan.rates
    if fsr_hz is None:
        spacing, anchor, _ = comb_from_peaks(f, y)
    else:
        spacing = fsr_hz
        anchor = float(f[np.argmax(y)])
    if reference_frequency is None:
        reference_frequency = anchor
    offset = anchor - reference_frequency
    offset -= spacing * round(offset / spacing)
    m = comb_indices(reference_frequency + offset, spacing, (f[0], f[-1]))

    def basis(q):
        return ring_model(
            f, {"gamma0_hz": 0.0, "q": q, "g_hz": 1.0, "fsr_hz": spacing, "f_offset_hz": offset},
            reference_frequency, m,
        )

    q, gamma0, g2 = _linear_amplitude_scan(y, basis, Q_GRID)
    params = {"gamma0_hz": gamma0, "q": q, "g_hz": math.sqrt(g2), "fsr_hz": spacing, "f_offset_hz": offset}
    return params, reference_frequency


def guess_fp_parameters(scan: ScanData, spec: FPCavitySpec, fsr_hz=None, grid=None):
    f, y = scan.frequencies, scan.rates
    if fsr_hz is None:
        try:
            spacing, anchor, _ = comb_from_peaks(f, y)
        except ValueError:
            spacing = fp_fsr(spec)
            anchor = float(f[np.argmax(y)])
    else:
        spacing = fsr_hz
        anchor = float(f[np.argmax(y)])
    m = comb_indices(anchor, spacing, (f[0], f[-1]))
    table = _fp_table(spec, f, spacing, anchor, m, grid)

    def basis(q):
        p = {"gamma0_hz": 0.0, "g_scale": 1.0, "intrinsic_q": q, "fsr_hz": spacing, "f_anchor_hz": anchor}
        return fp_model(f, p, spec, m, table)

    q, gamma0, s2 = _linear_amplitude_scan(y, basis, Q_GRID)
    return {"gamma0_hz": gamma0, "g_scale": math.sqrt(s2), "intrinsic_q": q, "fsr_hz": spacing, "f_anchor_hz": anchor}


# --- multimode fits ---------------------------------------------------------


def _positive_bounds(value, factor):
    return Parameter(value, value / factor, value * factor)


# comb parameters get small jitter: a 10 % FSR error aliases every tooth
def _comb_spacing(spacing):
    return Parameter(spacing, 0.8 * spacing, 1.2 * spacing, jitter=0.005 * spacing)


def _comb_position(value, spacing):
    return Parameter(value, value - 0.5 * spacing, value + 0.5 * spacing, scale=spacing, jitter=0.05 * spacing)


def ring_problem(scan: ScanData, initial=None, reference_frequency=None, fixed=(), **kwargs) -> FitProblem:
    """Default ring-model problem around ``initial`` (guessed from data if None)."""
    if initial is None:
        initial, reference_frequency = guess_ring_parameters(scan, reference_frequency)
    elif reference_frequency is None:
        raise ValueError("reference_frequency is required with an explicit initial guess")
    init = dict(initial)
    spacing = init["fsr_hz"]
    params = {
        "gamma0_hz": _positive_bounds(init["gamma0_hz"], 20.0),
        "q": _positive_bounds(init["q"], 10.0),
        "g_hz": _positive_bounds(init["g_hz"], 10.0),
        "fsr_hz": _comb_spacing(spacing),
        "f_offset_hz": _comb_position(init["f_offset_hz"], spacing),
    }
    for name in fixed:
        params[name] = Parameter(init[name], fixed=True)
    anchor = reference_frequency + init["f_offset_hz"]
    m = comb_indices(anchor, spacing, (scan.frequencies[0], scan.frequencies[-1]))
    context = {"reference_frequency": reference_frequency, "mode_indices": m}
    return FitProblem("ring_model", params, context=context, **kwargs)


def fit_ring_model(scan: ScanData, problem: FitProblem | None = None) -> FitResult:
    """Fit a uniform microring comb to a decay-rate scan."""
    if problem is None:
        problem = ring_problem(scan)
    if problem.model != "ring_model":
        raise ValueError("problem is not a ring_model problem")
    ctx = problem.context
    f = scan.frequencies
    result = run_fit(
        problem,
        lambda p: ring_model(f, p, ctx["reference_frequency"], ctx["mode_indices"]),
        scan.rates,
        scan.uncertainties,
    )
    return _check_span(result, f)


def _check_span(result: FitResult, freqs) -> FitResult:
    """Flag ``short_span`` when the scan covers fewer than two comb periods."""
    if freqs[-1] - freqs[0] < MIN_SPAN_FSR * result.parameters["fsr_hz"]:
        return replace(result, flags=result.flags + ("short_span",))
    return result


def _fp_table(spec, freqs, spacing, anchor, m, grid):
    reach = 1.5 * spacing * max(abs(m[0]), abs(m[-1])) + spacing
    lo = max(anchor - reach, 0.5 * freqs[0])
    hi = anchor + reach
    if grid is None:
        grid = spacing / 64
    return RetentionTable(spec, lo, hi, grid)


def fp_problem(scan: ScanData, spec: FPCavitySpec, initial=None, fixed=(), grid=None, **kwargs) -> FitProblem:
    """Default FP-model problem; ``initial`` is guessed from data if None."""
    ensure_valid(spec)
    f = scan.frequencies
    init = dict(initial) if initial is not None else guess_fp_parameters(scan, spec, grid=grid)
    spacing = init["fsr_hz"]
    # re-anchor on the comb tooth nearest the scan centre to decorrelate anchor and FSR
    mid = 0.5 * (f[0] + f[-1])
    init["f_anchor_hz"] += spacing * round((mid - init["f_anchor_hz"]) / spacing)
    params = {
        "gamma0_hz": _positive_bounds(init["gamma0_hz"], 20.0),
        "g_scale": _positive_bounds(init["g_scale"], 10.0) if init["g_scale"] > 0 else Parameter(0.0, 0.0, 1.0, scale=1.0),
        "intrinsic_q": _positive_bounds(init["intrinsic_q"], 10.0),
        "fsr_hz": _comb_spacing(spacing),
        "f_anchor_hz": _comb_position(init["f_anchor_hz"], spacing),
    }
    for name in fixed:
        params[name] = Parameter(init[name], fixed=True)
    m = comb_indices(init["f_anchor_hz"], spacing, (f[0], f[-1]))
    table = _fp_table(spec, f, spacing, init["f_anchor_hz"], m, grid)
    context = {"spec": spec, "mode_indices": m, "retention": table}
    return FitProblem("fp_model", params, context=context, **kwargs)


def fit_fp_model(scan: ScanData, problem: FitProblem) -> FitResult:
    """Fit the FP multimode model; the problem must carry the device spec."""
    if problem.model != "fp_model":
        raise ValueError("problem is not an fp_model problem")
    ctx = problem.context
    if "spec" not in ctx:
        raise ValueError("fp_model problem needs the device spec in its context")
    f = scan.frequencies
    result = run_fit(
        problem,
        lambda p: fp_model(f, p, ctx["spec"], ctx["mode_indices"], ctx.get("retention")),
        scan.rates,
        scan.uncertainties,
    )
    return _check_span(result, f)


# --- TLS-limited quality factor ----------------------------------------------


def tls_q_fit(powers, qs, max_iter=400) -> FitResult:
    """Fit the saturable two-level-system loss model to ``Q(n)``.

    ``powers`` are mean intracavity quanta. The residual is taken on ``1/Q``
    relative to the data so every decade weighs the same. The result is
    flagged ``insufficient_span`` when the data cover fewer than four points
    or two decades.
    """
    n = np.asarray(powers, dtype=float)
    q = np.asarray(qs, dtype=float)
    if n.shape != q.shape or n.ndim != 1:
        raise ValidationError([Violation("qs", "powers and qs must be equal-length 1-D arrays")])
    if np.any(n <= 0) or np.any(q <= 0):
        raise ValidationError([Violation("powers", "powers and qs must be > 0")])
    order = np.argsort(n)
    n, q = n[order], q[order]
    short = n.size < 4 or n[-1] / n[0] < 100
    q_low, q_high = q[0], q[-1]
    inv_tls = max(1 / q_low - 1 / q_high, 1e-3 / q_high)
    n_c0 = float(np.sqrt(n[0] * n[-1]))
    # start n_c where the data sit halfway between the two plateaus
    mid = 0.5 * (1 / q_low + 1 / q_high)
    cross = np.nonzero(1 / q <= mid)[0]
    if cross.size:
        n_c0 = float(n[cross[0]])
    lo_n, hi_n = n[0] * 1e-3, n[-1] * 1e3
    n_c0 = float(np.clip(n_c0, lo_n, hi_n))
    problem = FitProblem(
        "tls",
        {
            "q_tls": Parameter(1 / inv_tls, 1e-2 / inv_tls, 1e2 / inv_tls),
            "n_c": Parameter(n_c0, lo_n, hi_n),
            "beta": Parameter(0.5, 0.05, 2.0, scale=1.0),
            "q_other": Parameter(q_high, q_high / 10, q_high * 10),
        },
        starts=N_STARTS,
        max_iter=max_iter,
    )
    inv = 1 / q
    res = run_fit(problem, lambda p: tls_inverse_q(n, p) / inv, np.ones_like(inv))
    if short:
        res = replace(res, flags=res.flags + ("insufficient_span",))
    return res

"""Command-line front end.

Subcommands: ``spectrum``, ``modes``, ``scan``, ``decay``, ``fit`` and
``report``. Data go to ``--out`` (or standard output) as CSV; diagnostics go
to standard error. Exit codes: 0 success, 1 usage error, 2 bad data or
configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import __version__
from .cavity import cavity_fsr, device_mode_set, fp_anchor, fp_fsr, ring_fsr
from .config import ConfigError, DeviceConfig, load_config, parse_quantity
from .core import FPCavitySpec, ScanData, DecayCurve, ValidationError, rate_to_t1
from .dynamics import (
    IntegrationError,
    decay_scan,
    emitted_pulse_metrics,
    evolve_single_excitation,
    phonon_emission_probability,
    purcell_factor,
)
from .estimation import (
    fit_exponential,
    fit_fp_model,
    fit_ring_model,
    fp_problem,
    ring_problem,
    tls_q_fit,
)
from .tables import (
    TableError,
    decay_columns,
    fit_report,
    fit_result_to_json,
    fmt,
    mode_columns,
    read_decay,
    read_scan,
    read_tls,
    scan_columns,
    write_table,
)
from .wave import coupling_profile, mirror_reflectance

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_POINTS = 600
DECAY_POINTS = 200


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _frequency(text):
    try:
        return parse_quantity(text, "frequency")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _time(text):
    try:
        return parse_quantity(text, "time")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="device configuration file")
    common.add_argument("--seed", type=int, help="seed for synthetic noise")
    common.add_argument("--points", type=_positive_int, help="number of output samples")
    common.add_argument("--from", dest="lo", type=_frequency, help="band start, e.g. 3.80GHz")
    common.add_argument("--to", dest="hi", type=_frequency, help="band end, e.g. 3.95GHz")
    common.add_argument("--out", help="output path (default: standard output)")

    p = _Parser(prog="cqad", description="Acoustic-cavity qubit decay toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sub.add_parser("spectrum", parents=[common], help="mirror reflectance and IDT coupling")
    sub.add_parser("modes", parents=[common], help="cavity mode table")

    s = sub.add_parser("scan", parents=[common], help="decay rate versus qubit frequency")
    s.add_argument("--noise", type=float, default=0.0, help="relative Gaussian noise (needs --seed)")

    d = sub.add_parser("decay", parents=[common], help="excited-state population versus time")
    d.add_argument("--qubit-freq", type=_frequency, help="qubit frequency (default from [qubit])")
    d.add_argument("--t-max", type=_time, help="end time (default five decay times)")
    d.add_argument("--noise", type=float, default=0.0, help="absolute Gaussian noise (needs --seed)")

    f = sub.add_parser("fit", parents=[common], help="fit a model to a CSV")
    f.add_argument("--model", required=True, choices=("ring", "fp", "exponential", "tls"))
    f.add_argument("--data", required=True, help="input CSV")
    f.add_argument("--init", help="configuration whose values seed the fit")
    f.add_argument("--fixed", help="comma-separated parameters to hold at their initial values")
    f.add_argument("--loss", choices=("least_squares", "huber"))

    r = sub.add_parser("report", parents=[common], help="Purcell factor and pulse metrics")
    r.add_argument("--qubit-freq", type=_frequency, help="qubit frequency (default from [qubit])")
    return p


# --- helpers -------------------------------------------------------------------


def _load(args, required=True) -> DeviceConfig | None:
    if args.config is None:
        if required:
            raise UsageError(f"{args.command}: --config is required")
        return None
    return load_config(args.config)


def _band(args, default=None):
    lo = args.lo if args.lo is not None else (default[0] if default else None)
    hi = args.hi if args.hi is not None else (default[1] if default else None)
    if lo is None or hi is None:
        raise UsageError(f"{args.command}: --from and --to are required")
    if not hi > lo:
        raise UsageError(f"{args.command}: --to must exceed --from")
    return lo, hi


def _rng(args, noise):
    if noise < 0:
        raise UsageError("--noise must be >= 0")
    if noise > 0 and args.seed is None:
        raise UsageError("--noise needs --seed")
    return np.random.default_rng(args.seed) if noise > 0 else None


def _emit(args, columns):
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            write_table(fh, columns)
    else:
        write_table(sys.stdout, columns)


def _write_text(path, text):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _qubit_band(cfg: DeviceConfig, wq):
    span = cfg.fit.pad_modes * cavity_fsr(cfg.cavity)
    return max(wq - span, 0.5 * wq), wq + span


def _rates(cfg: DeviceConfig, freqs, band):
    """Decay rate at each qubit frequency, including modes padded around ``band``."""
    qubit = cfg.require("qubit")
    modes = device_mode_set(cfg.cavity, band, cfg.fit.pad_modes)
    if isinstance(cfg.cavity, FPCavitySpec):
        return decay_scan(freqs, modes, qubit.intrinsic_rate, cfg.cavity.idt, cfg.material.phase_velocity)
    return decay_scan(freqs, modes, qubit.intrinsic_rate)


def _qubit_modes(cfg: DeviceConfig, wq, band):
    """Modes seen by a qubit parked at ``wq``; FP couplings follow the IDT at ``wq``."""
    modes = device_mode_set(cfg.cavity, band)
    if isinstance(cfg.cavity, FPCavitySpec):
        g = float(coupling_profile(wq, cfg.cavity.idt, cfg.material.phase_velocity))
        modes = type(modes).from_arrays(
            modes.frequencies, modes.linewidths, np.full(len(modes), g),
            band=modes.band, lossy=[m.lossy for m in modes],
        )
    return modes


# --- subcommands ---------------------------------------------------------------


def cmd_spectrum(args):
    cfg = _load(args)
    cav = cfg.cavity
    if not isinstance(cav, FPCavitySpec):
        raise ConfigError("spectrum needs an fp cavity with mirrors and an IDT", section="cavity")
    lo, hi = _band(args)
    f = np.linspace(lo, hi, args.points or DEFAULT_POINTS)
    _emit(args, {
        "freq_hz": f,
        "r2_left": mirror_reflectance(f, cav.left_mirror, cfg.material),
        "r2_right": mirror_reflectance(f, cav.right_mirror, cfg.material),
        "coupling_hz": coupling_profile(f, cav.idt, cfg.material.phase_velocity),
    })


def cmd_modes(args):
    cfg = _load(args)
    modes = device_mode_set(cfg.cavity, _band(args))
    _emit(args, mode_columns(modes))


def cmd_scan(args):
    cfg = _load(args)
    rng = _rng(args, args.noise)
    band = _band(args)
    f = np.linspace(band[0], band[1], args.points or DEFAULT_POINTS)
    scan = _rates(cfg, f, band)
    if rng is not None:
        err = args.noise * scan.rates
        scan = ScanData(f, scan.rates + err * rng.standard_normal(f.size), err)
    _emit(args, scan_columns(scan))


def cmd_decay(args):
    cfg = _load(args)
    rng = _rng(args, args.noise)
    qubit = cfg.require("qubit")
    wq = args.qubit_freq if args.qubit_freq is not None else qubit.frequency
    band = _band(args, _qubit_band(cfg, wq))
    modes = _qubit_modes(cfg, wq, band)
    t_max = args.t_max
    if t_max is None:
        rate = float(decay_scan([wq], modes, qubit.intrinsic_rate).rates[0])
        t_max = 5 * rate_to_t1(rate)
    t = np.linspace(0.0, t_max, args.points or DECAY_POINTS)
    curve = evolve_single_excitation(wq, modes, qubit.intrinsic_rate, t)
    if rng is not None:
        pe = np.clip(curve.populations + args.noise * rng.standard_normal(t.size), 0.0, 1.0)
        curve = DecayCurve(t, pe)
    _emit(args, decay_columns(curve))


def _window(scan: ScanData, args):
    if args.lo is None and args.hi is None:
        return scan
    lo = -math.inf if args.lo is None else args.lo
    hi = math.inf if args.hi is None else args.hi
    keep = (scan.frequencies >= lo) & (scan.frequencies <= hi)
    err = None if scan.uncertainties is None else scan.uncertainties[keep]
    return ScanData(scan.frequencies[keep], scan.rates[keep], err)


def _ring_start(cfg: DeviceConfig):
    cav = cfg.cavity
    if isinstance(cav, FPCavitySpec):
        raise ConfigError("--init for a ring fit must describe a ring cavity", section="cavity")
    qubit = cfg.require("qubit")
    initial = {
        "gamma0_hz": qubit.intrinsic_rate,
        "q": cav.uniform_q,
        "g_hz": cav.uniform_coupling,
        "fsr_hz": ring_fsr(cav),
        "f_offset_hz": 0.0,
    }
    return initial, cav.reference_frequency


def _fp_start(cfg: DeviceConfig):
    cav = cfg.cavity
    qubit = cfg.require("qubit")
    return {
        "gamma0_hz": qubit.intrinsic_rate,
        "g_scale": 1.0,
        "intrinsic_q": cav.intrinsic_q if cav.intrinsic_q is not None else 1e4,
        "fsr_hz": fp_fsr(cav),
        "f_anchor_hz": fp_anchor(cav),
    }


def cmd_fit(args):
    base = _load(args, required=False)
    init = load_config(args.init) if args.init else None
    settings = (init or base).fit if (init or base) else None
    fixed = tuple(s.strip() for s in args.fixed.split(",") if s.strip()) if args.fixed else (
        settings.fixed if settings else ()
    )
    kw = {}
    if settings is not None:
        kw = {"loss": settings.loss, "huber_delta": settings.huber_delta,
              "starts": settings.starts, "max_iter": settings.max_iter}
    if args.loss:
        kw["loss"] = args.loss

    if args.model == "exponential":
        result = fit_exponential(read_decay(args.data))
    elif args.model == "tls":
        n, q = read_tls(args.data)
        result = tls_q_fit(n, q)
    elif args.model == "ring":
        scan = _window(read_scan(args.data), args)
        if init is not None:
            initial, f_ref = _ring_start(init)
            problem = ring_problem(scan, initial, f_ref, fixed=fixed, **kw)
        else:
            f_ref = None
            if base is not None and not isinstance(base.cavity, FPCavitySpec):
                f_ref = base.cavity.reference_frequency
            if settings is not None and settings.reference_frequency is not None:
                f_ref = settings.reference_frequency
            problem = ring_problem(scan, None, f_ref, fixed=fixed, **kw)
        result = fit_ring_model(scan, problem)
    else:
        device = init or base
        if device is None:
            raise UsageError("fit --model fp needs --config or --init with the device")
        if not isinstance(device.cavity, FPCavitySpec):
            raise ConfigError("fp fit needs an fp cavity", section="cavity")
        scan = _window(read_scan(args.data), args)
        initial = _fp_start(device) if init is not None else None
        problem = fp_problem(scan, device.cavity, initial, fixed=fixed, **kw)
        result = fit_fp_model(scan, problem)

    model = args.model
    sys.stdout.write(fit_report(result, model))
    if args.out:
        _write_text(args.out, fit_result_to_json(result, model))
    for flag in result.flags:
        print(f"warning: {flag}", file=sys.stderr)


def cmd_report(args):
    cfg = _load(args)
    qubit = cfg.require("qubit")
    wq = args.qubit_freq if args.qubit_freq is not None else qubit.frequency
    band = _band(args, _qubit_band(cfg, wq))
    gamma_e = float(_rates(cfg, np.array([wq]), band).rates[0])
    gamma_0 = qubit.intrinsic_rate
    fp = purcell_factor(gamma_e, gamma_0)
    p = phonon_emission_probability(gamma_e, gamma_0)
    emission = 2 * math.pi * (gamma_e - gamma_0)
    lines = [
        ("qubit_freq_hz", wq),
        ("gamma_0_hz", gamma_0),
        ("gamma_e_hz", gamma_e),
        ("purcell_factor", fp),
        ("emission_probability", p),
        ("t1_s", rate_to_t1(gamma_e)),
        ("emission_rate_per_s", emission),
    ]
    if emission > 0:
        duration, length = emitted_pulse_metrics(emission, cfg.material.group_velocity)
        lines += [("pulse_duration_s", duration), ("pulse_length_m", length)]
    _write_text(args.out, "".join(f"{k} = {fmt(v)}\n" for k, v in lines))


COMMANDS = {
    "spectrum": cmd_spectrum,
    "modes": cmd_modes,
    "scan": cmd_scan,
    "decay": cmd_decay,
    "fit": cmd_fit,
    "report": cmd_report,
}


def run_command(argv=None) -> int:
    """Run one subcommand and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, IntegrationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, TableError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()

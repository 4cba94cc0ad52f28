"""CSV exchange and fit reports.

Every CSV starts with a header of lowercase snake-case column names that
carry their unit (``freq_hz``, ``gamma_e_hz``, ``time_s``, ``p_e``). Floats
are written with 17 significant digits so a write/read cycle is exact.
"""
from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .core import DecayCurve, FitResult, FitStatus, ModeSet, ScanData

SCAN_COLUMNS = ("freq_hz", "gamma_e_hz")
SCAN_ERR_COLUMN = "gamma_e_err_hz"
DECAY_COLUMNS = ("time_s", "p_e")
MODE_COLUMNS = ("freq_hz", "linewidth_hz", "coupling_hz", "lossy")
TLS_COLUMNS = ("n_quanta", "q")


class TableError(ValueError):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_table(stream, columns: dict):
    """Write equal-length columns, header first, in the given order."""
    names = list(columns)
    data = [np.asarray(columns[k]) for k in names]
    n = {len(d) for d in data}
    if len(n) > 1:
        raise TableError("columns differ in length")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(names)
    for row in zip(*data):
        w.writerow([fmt(v) for v in row])


def table_text(columns: dict) -> str:
    buf = io.StringIO()
    write_table(buf, columns)
    return buf.getvalue()


def read_table(stream, required=()) -> dict:
    reader = csv.reader(stream)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise TableError("empty CSV") from None
    missing = [c for c in required if c not in header]
    if missing:
        raise TableError(f"CSV lacks column(s) {', '.join(missing)}; found {', '.join(header)}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise TableError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            rows.append([float(c) for c in row])
        except ValueError as exc:
            raise TableError(f"line {lineno}: {exc}") from None
    arr = np.array(rows, dtype=float).reshape(-1, len(header))
    return {h: arr[:, i] for i, h in enumerate(header)}


def _open_read(source, required):
    if hasattr(source, "read"):
        return read_table(source, required)
    with open(source, newline="", encoding="utf-8") as fh:
        return read_table(fh, required)


def scan_columns(scan: ScanData) -> dict:
    cols = {"freq_hz": scan.frequencies, "gamma_e_hz": scan.rates}
    if scan.uncertainties is not None:
        cols[SCAN_ERR_COLUMN] = scan.uncertainties
    return cols


def read_scan(source) -> ScanData:
    t = _open_read(source, SCAN_COLUMNS)
    return ScanData(t["freq_hz"], t["gamma_e_hz"], t.get(SCAN_ERR_COLUMN))


def decay_columns(curve: DecayCurve) -> dict:
    return {"time_s": curve.times, "p_e": curve.populations}


def read_decay(source) -> DecayCurve:
    t = _open_read(source, DECAY_COLUMNS)
    return DecayCurve(t["time_s"], t["p_e"])


def mode_columns(modes: ModeSet) -> dict:
    return {
        "freq_hz": modes.frequencies,
        "linewidth_hz": modes.linewidths,
        "coupling_hz": modes.couplings,
        "lossy": np.array([m.lossy for m in modes], dtype=bool),
    }


def read_modes(source, band=None) -> ModeSet:
    t = _open_read(source, MODE_COLUMNS)
    return ModeSet.from_arrays(
        t["freq_hz"], t["linewidth_hz"], t["coupling_hz"], band=band, lossy=t["lossy"] != 0
    )


def read_tls(source):
    t = _open_read(source, TLS_COLUMNS)
    return t["n_quanta"], t["q"]


# --- fit results --------------------------------------------------------------


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


def _from_json_float(x):
    return float(x) if isinstance(x, str) else x


def fit_result_to_dict(result: FitResult, model: str = None) -> dict:
    doc = {
        "model": model,
        "status": result.status.value,
        "parameters": {k: _json_float(v) for k, v in result.parameters.items()},
        "errors": None
        if result.errors is None
        else {k: _json_float(v) for k, v in result.errors.items()},
        "fixed": list(result.fixed),
        "flags": list(result.flags),
        "residual_norm": _json_float(result.residual_norm),
        "initial_residual_norm": _json_float(result.initial_residual_norm),
        "iterations": result.iterations,
    }
    return doc


def fit_result_to_json(result: FitResult, model: str = None) -> str:
    # repr-precision floats survive the round trip exactly
    return json.dumps(fit_result_to_dict(result, model), indent=2, sort_keys=False) + "\n"


def fit_result_from_json(text: str) -> FitResult:
    doc = json.loads(text)
    errors = doc.get("errors")
    return FitResult(
        parameters={k: _from_json_float(v) for k, v in doc["parameters"].items()},
        residual_norm=_from_json_float(doc["residual_norm"]),
        status=FitStatus(doc["status"]),
        errors=None if errors is None else {k: _from_json_float(v) for k, v in errors.items()},
        fixed=tuple(doc.get("fixed", ())),
        flags=tuple(doc.get("flags", ())),
        iterations=int(doc.get("iterations", 0)),
        initial_residual_norm=_from_json_float(doc.get("initial_residual_norm", "nan")),
    )


def fit_report(result: FitResult, model: str = None) -> str:
    """Human-readable ``key = value`` report with a stderr column."""
    lines = []
    if model:
        lines.append(f"model = {model}")
    lines.append(f"status = {result.status.value}")
    lines.append(f"residual_norm = {fmt(result.residual_norm)}")
    width = max(len(k) for k in result.parameters) if result.parameters else 0
    lines.append(f"{'parameter':<{width}}  {'value':>24}  {'stderr':>24}")
    for k, v in result.parameters.items():
        if result.errors is None:
            err = "n/a"
        elif k in result.fixed:
            err = "fixed"
        else:
            err = fmt(result.errors[k])
        lines.append(f"{k:<{width}}  {fmt(v):>24}  {err:>24}")
    if result.flags:
        lines.append("flags = " + ", ".join(result.flags))
    return "\n".join(lines) + "\n"

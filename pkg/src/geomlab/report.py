"""Report emission: JSON and CSV with stable field order and 17 significant digits.

Runtimes are wall-clock and therefore excluded unless ``timings`` is requested,
so that identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from typing import Optional

from . import __version__
from .suites import Check, ConfigError, Report

CHECK_FIELDS = ("name", "value", "lower", "upper", "passed", "provenance", "anchor")
CSV_FIELDS = ("kind",) + CHECK_FIELDS


def format_number(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return f"{x:.17g}"


def _json(obj, indent: int = 0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, int, float)):
        s = format_number(obj)
        return s if s not in ("NaN", "Infinity", "-Infinity") else json.dumps(s)
    if isinstance(obj, complex):
        return _json([obj.real, obj.imag], indent)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_json(v, indent + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _json(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if hasattr(obj, "item"):
        return _json(obj.item(), indent)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _sorted_params(params: dict) -> dict:
    return {k: (_sorted_params(v) if isinstance(v, dict) else v) for k, v in sorted(params.items())}


def _check_row(c: Check, timings: bool) -> dict:
    row = {"name": c.name, "value": c.value, "lower": c.lower, "upper": c.upper, "passed": c.passed,
           "provenance": c.provenance, "anchor": c.anchor}
    if timings:
        row["runtime"] = c.runtime
    return row


def _require_nonempty(report: Report):
    if not report.checks and not report.measurements:
        raise ValueError("empty report: nothing to emit")


def to_json(report: Report, timings: bool = False) -> str:
    _require_nonempty(report)
    checks = report.sorted_checks()
    failed = sum(not c.passed for c in checks)
    doc = {
        "metadata": {
            "command": report.command,
            "seed": report.seed,
            "tol_scale": report.tol_scale,
            "version": __version__,
            "parameters": _sorted_params(report.parameters),
            "anchors": {c.name: c.anchor for c in checks},
        },
        "summary": {"checks": len(checks), "passed": len(checks) - failed, "failed": failed,
                    "status": "pass" if failed == 0 else "fail"},
        "checks": [_check_row(c, timings) for c in checks],
        "measurements": [{"name": k, "value": v} for k, v in sorted(report.measurements.items())],
    }
    return _json(doc) + "\n"


def to_csv(report: Report, timings: bool = False) -> str:
    _require_nonempty(report)
    fields = CSV_FIELDS + (("runtime",) if timings else ())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    cell = lambda v: "" if v is None else (v if isinstance(v, str) else format_number(v))
    for c in report.sorted_checks():
        row = _check_row(c, timings)
        w.writerow(["check"] + [cell(row[f]) for f in fields[1:]])
    for k, v in sorted(report.measurements.items()):
        w.writerow(["measurement", k, cell(v)] + [""] * (len(fields) - 3))
    return buf.getvalue()


def emit_report(report: Report, fmt: str = "json", out: Optional[str] = None, timings: bool = False) -> str:
    """Render the report and write it to ``out`` (stdout when None); returns the text."""
    if fmt not in ("json", "csv"):
        raise ValueError(f"unknown format {fmt!r}")
    text = to_json(report, timings) if fmt == "json" else to_csv(report, timings)
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def load_report(path: str) -> Report:
    """Parse a JSON report written by ``emit_report``."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        meta = doc["metadata"]
        checks = [Check(r["name"], _parse(r["value"]), _parse(r["lower"]), _parse(r["upper"]),
                        r["provenance"], r["anchor"], float(r.get("runtime", 0.0))) for r in doc["checks"]]
        meas = {r["name"]: _parse(r["value"]) for r in doc.get("measurements", [])}
        rep = Report(meta["command"], meta.get("seed"), float(meta.get("tol_scale", 1.0)), checks, meas,
                     meta.get("parameters", {}))
    except OSError as exc:
        raise ConfigError(f"cannot read report {path}: {exc}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"malformed report {path}: {exc}") from exc
    if not rep.checks and not rep.measurements:
        raise ConfigError(f"report {path} is empty")
    return rep


def _parse(v):
    if isinstance(v, str) and v in ("NaN", "Infinity", "-Infinity"):
        return float(v.replace("Infinity", "inf"))
    return v


def merge_reports(reports: list) -> Report:
    if not reports:
        raise ConfigError("no reports given")
    names, checks, meas, params = set(), [], {}, {}
    for r in reports:
        for c in r.checks:
            if c.name in names:
                raise ConfigError(f"check {c.name!r} appears in more than one report")
            names.add(c.name)
            checks.append(c)
        meas.update(r.measurements)
        params[r.command] = r.parameters
    seeds = {r.seed for r in reports}
    scales = {r.tol_scale for r in reports}
    return Report("report", seeds.pop() if len(seeds) == 1 else None,
                  scales.pop() if len(scales) == 1 else float("nan"), checks, meas, params)

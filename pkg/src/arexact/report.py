"""Versioned report documents and their reader.

A report is a JSON object::

    {"schema": "arexact.report", "version": 1, "command": "<subcommand>",
     "inputs": {...}, "result": {...}}

Exact rationals are strings ``"p/q"`` (or ``"n"``). A key ending in
``_display`` is a 6-significant-digit decimal rendering of its sibling and
is never used for computation. Keys are sorted and there are no timestamps,
so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import decimal
import io
import json
from fractions import Fraction
from typing import Any

SCHEMA = "arexact.report"
VERSION = 1
DISPLAY_DIGITS = 6

# result fields that must be present, per command
REQUIRED = {
    "gadget-verify": ("num_vars", "satisfiable", "model_count", "map_sequence", "map_probability",
                      "z", "z_length", "map_decides_sat", "z_counts_models", "passed"),
    "map": ("engine", "feasible", "sequence", "probability"),
    "z": ("engine", "z"),
    "sample": ("engine", "samples"),
    "threshold": ("n", "tau", "result", "witness", "certificate_valid"),
    "bias": ("decoder", "reference_engine", "exact_support_size", "samples_requested",
             "samples_feasible", "dead_ends", "rejections", "coverage", "tv_distance",
             "kl_empirical_to_exact", "table"),
}
# fields holding exact rationals, wherever they appear
RATIONAL_FIELDS = {"map_probability", "probability", "z", "tau", "unary_optimum", "coverage",
                   "tv_distance", "exact", "empirical", "threshold_tau"}


class ReportError(ValueError):
    pass


def display(q: Fraction) -> str:
    with decimal.localcontext() as ctx:
        ctx.prec = DISPLAY_DIGITS
        d = decimal.Decimal(q.numerator) / decimal.Decimal(q.denominator)
    return f"{d:.{DISPLAY_DIGITS}g}"


def rational(value: Fraction | None, key: str, out: dict) -> None:
    """Store ``value`` under ``key`` with its display twin."""
    if value is None:
        out[key] = None
        out[key + "_display"] = None
    else:
        out[key] = str(value)
        out[key + "_display"] = display(value)


def make_report(command: str, inputs: dict, result: dict) -> dict:
    return {"schema": SCHEMA, "version": VERSION, "command": command, "inputs": inputs, "result": result}


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _check_rationals(obj: Any, path: str) -> None:
    if isinstance(obj, dict):
        for k, v in obj.items():
            if k in RATIONAL_FIELDS and v is not None:
                if not isinstance(v, str):
                    raise ReportError(f"{path}.{k}: rational must be a 'p/q' string")
                try:
                    Fraction(v)
                except (ValueError, ZeroDivisionError):
                    raise ReportError(f"{path}.{k}: not a rational: {v!r}") from None
                if not isinstance(obj.get(k + "_display"), str):
                    raise ReportError(f"{path}.{k}_display missing")
            _check_rationals(v, f"{path}.{k}")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _check_rationals(v, f"{path}[{i}]")


def read_report(text: str) -> dict:
    """Parse and validate a report document; returns the decoded object."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ReportError(f"not JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ReportError("report must be a JSON object")
    if doc.get("schema") != SCHEMA:
        raise ReportError(f"unknown schema {doc.get('schema')!r}")
    if doc.get("version") != VERSION:
        raise ReportError(f"unsupported version {doc.get('version')!r}")
    command = doc.get("command")
    if command not in REQUIRED:
        raise ReportError(f"unknown command {command!r}")
    for key in ("inputs", "result"):
        if not isinstance(doc.get(key), dict):
            raise ReportError(f"'{key}' must be an object")
    missing = [k for k in REQUIRED[command] if k not in doc["result"]]
    if missing:
        raise ReportError(f"result lacks {', '.join(missing)}")
    _check_rationals(doc, "$")
    return doc


def _flatten(obj: Any, prefix: str, rows: list) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(obj[k], f"{prefix}.{k}" if prefix else k, rows)
    elif isinstance(obj, list) and obj and all(isinstance(v, dict) for v in obj):
        for i, v in enumerate(obj):
            _flatten(v, f"{prefix}[{i}]", rows)
    else:
        rows.append((prefix, "" if obj is None else json.dumps(obj) if isinstance(obj, (list, bool)) else str(obj)))


def to_csv(report: dict) -> str:
    """Tabular export: the per-sequence table for bias reports, key/value rows otherwise."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    result = report["result"]
    if report["command"] == "bias":
        cols = ["sequence", "exact", "exact_display", "empirical", "empirical_display", "count"]
        w.writerow(["instance", "decoder"] + cols)
        for row in result["table"]:
            w.writerow([report["inputs"].get("instance", ""), result["decoder"]] + [row[c] for c in cols])
    elif report["command"] == "sample":
        w.writerow(["index", "status", "sequence", "attempts"])
        for i, s in enumerate(result["samples"]):
            w.writerow([i, s["status"], s["sequence"] or "", s.get("attempts", "")])
    else:
        w.writerow(["field", "value"])
        rows: list = []
        _flatten(result, "", rows)
        w.writerows(rows)
    return buf.getvalue()

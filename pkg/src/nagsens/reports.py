"""Delimited and JSON output for the command line.

CSV files are RFC-4180 (CRLF line endings, quoting only where needed) with a
fixed header per command, so two runs of the same command on the same inputs
produce byte-identical files.  Floats are rendered with ``%.17g`` — enough
digits to round-trip IEEE doubles exactly.  Wall-clock timings and other
non-reproducible diagnostics appear only in the JSON report, never in CSV.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

__all__ = ["format_value", "write_csv", "write_run_report", "run_report"]


def format_value(v) -> str:
    """Render one CSV cell: shortest exact float form, plain ints, raw strings."""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    x = float(v) + 0.0  # normalise -0.0
    return f"{x:.17g}"


def write_csv(path, header, rows) -> Path:
    """Write one table; returns the path written."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) + 0.0
    return obj


def run_report(command: str, doc, seed: int, solver: dict,
               results: dict, diagnostics: dict) -> dict:
    """Assemble the JSON run report for one command invocation."""
    return {
        "command": command,
        "config": {"path": doc.source, "sha256": doc.digest, "game": doc.game},
        "seed": seed,
        "solver": _jsonable(solver),
        "results": _jsonable(results),
        "diagnostics": _jsonable(diagnostics),
    }


def write_run_report(path, report: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return path

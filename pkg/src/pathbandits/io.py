"""Deterministic JSON and CSV emission for run records and sweep tables.

Floats are written with 17 significant digits so a round-trip through the
file reproduces the original binary64 value bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import EmitError
from .harness import RunRecord


def format_float(value: float) -> str:
    if not math.isfinite(value):
        raise EmitError(f"cannot serialize non-finite float {value!r}")
    return f"{value:.17g}"


def dumps_json(obj) -> str:
    """Serialize to JSON with bit-stable float formatting."""
    pieces: list[str] = []
    _write_json(obj, pieces)
    return "".join(pieces)


def _write_json(obj, out: list) -> None:
    if obj is None or obj is True or obj is False:
        out.append(json.dumps(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (key, value) in enumerate(obj.items()):
            if not isinstance(key, str):
                raise EmitError(f"JSON object keys must be strings, got {key!r}")
            if i:
                out.append(", ")
            out.append(json.dumps(key))
            out.append(": ")
            _write_json(value, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, value in enumerate(obj):
            if i:
                out.append(", ")
            _write_json(value, out)
        out.append("]")
    else:
        raise EmitError(f"cannot serialize {type(obj).__name__} to JSON")


def _cell_text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    if isinstance(value, (list, tuple, np.ndarray)):
        return ";".join(_cell_text(v) for v in value)
    return str(value)


def _write_csv(rows: list, handle) -> None:
    header: list[str] = []
    seen = set()
    for row in rows:
        for key in row:
            if key not in seen:
                seen.add(key)
                header.append(key)
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell_text(row.get(key)) for key in header])


def emit(record: RunRecord, path, fmt: str) -> Path:
    """Write a run record or sweep table to disk; returns the path."""
    path = Path(path)
    try:
        if fmt == "json":
            payload = {"meta": record.meta, "summary": record.summary, "rows": record.rows}
            path.write_text(dumps_json(payload) + "\n")
        elif fmt == "csv":
            with path.open("w", newline="") as handle:
                _write_csv(record.rows, handle)
        else:
            raise EmitError(f"unknown format {fmt!r}; expected 'json' or 'csv'")
    except OSError as exc:
        raise EmitError(f"cannot write {path}: {exc}") from exc
    return path


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise EmitError(f"cannot read {path}: {exc}") from exc
    return json.loads(text)

"""CSV matrices and JSON/CSV reports with exact, stable float formatting."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from pathlib import Path

import numpy as np

KINDS = ("real", "integer", "count")


class MatrixParseError(ValueError):
    """Malformed matrix file; the message names the offending row and column."""


class ReportError(ValueError):
    """A report cannot be serialized (for example it holds NaN)."""


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_matrix(path, kind: str = "real") -> np.ndarray:
    """Dense CSV matrix with an optional single header row.

    ``kind`` is ``"real"``, ``"integer"`` or ``"count"`` (non-negative
    integers).  Integer kinds return int64.  Rows and columns in error
    messages are 1-based file positions.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown matrix kind {kind!r}")
    with open(path, newline="") as fh:
        lines = [(i, row) for i, row in enumerate(csv.reader(fh), start=1) if row and any(c.strip() for c in row)]
    if lines and not any(_is_number(c) for c in lines[0][1]):
        lines = lines[1:]
    if not lines:
        raise MatrixParseError(f"{path}: no data rows")
    width = len(lines[0][1])
    values = np.empty((len(lines), width))
    for r, (lineno, row) in enumerate(lines):
        if len(row) != width:
            raise MatrixParseError(f"{path}: row {lineno} has {len(row)} columns, expected {width}")
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise MatrixParseError(f"{path}: row {lineno}, column {c + 1}: non-numeric value {cell.strip()!r}") from None
            if not math.isfinite(v):
                raise MatrixParseError(f"{path}: row {lineno}, column {c + 1}: non-finite value")
            if kind != "real" and v != math.floor(v):
                raise MatrixParseError(f"{path}: row {lineno}, column {c + 1}: expected an integer, got {cell.strip()!r}")
            if kind == "count" and v < 0:
                raise MatrixParseError(f"{path}: row {lineno}, column {c + 1}: negative count {cell.strip()!r}")
            values[r, c] = v
    return values.astype(np.int64) if kind != "real" else values


def format_float(v: float) -> str:
    if not math.isfinite(v):
        raise ReportError(f"non-finite value {v!r} in report")
    return format(v, ".17g")


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    if v is None:
        return ""
    return str(v)


def write_matrix(X, path) -> None:
    """Write a matrix as headerless CSV; floats keep 17 significant digits."""
    X = np.atleast_2d(np.asarray(X))
    with open(path, "w", newline="") as fh:
        for row in X:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _plain(obj):
    """Convert dataclasses and numpy containers to JSON-ready Python values."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return _plain(obj.to_dict())
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _dump(obj, indent: int, level: int = 0) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_dump(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _dump(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise ReportError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj) -> str:
    """Deterministic JSON: insertion-ordered keys, 17-digit floats, NaN rejected."""
    return _dump(_plain(obj), 2) + "\n"


def _rows(report):
    """Tabular view of a report: ``(header, rows)``."""
    from .selection import LossCurve

    if isinstance(report, LossCurve):
        M = report.per_fold_loss.shape[0]
        header = ["K"] + [f"loss_fold_{m}" for m in range(1, M + 1)] + ["mean_loss"]
        rows = [
            [int(k)] + [float(v) for v in report.per_fold_loss[:, j]] + [float(report.mean_loss[j])]
            for j, k in enumerate(report.candidate_ks)
        ]
        return header, rows
    if isinstance(report, dict):
        keys = list(report)
        cols = [np.asarray(report[k]) for k in keys]
        return keys, [list(r) for r in zip(*cols)]
    report = list(report)
    if not report:
        raise ReportError("empty report")
    header = list(report[0])
    return header, [[r[k] for k in header] for r in report]


def dumps_csv(report) -> str:
    header, rows = _rows(report)
    lines = [",".join(header)]
    lines += [",".join(_cell(_plain(v)) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_report(report, path, fmt: str | None = None) -> None:
    """Serialize ``report`` as JSON or CSV (chosen from the suffix when ``fmt`` is None).

    CSV accepts a LossCurve, a dict of equal-length columns or a list of
    row dicts.  Text is built completely before the file is opened, so a
    failed serialization leaves no partial file behind.
    """
    path = Path(path)
    fmt = fmt or ("csv" if path.suffix == ".csv" else "json")
    if fmt == "json":
        text = dumps_json(report)
    elif fmt == "csv":
        text = dumps_csv(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    path.write_text(text)


def _parse_cell(cell: str):
    if cell == "":
        return None
    if cell in ("true", "false"):
        return cell == "true"
    try:
        return int(cell)
    except ValueError:
        pass
    try:
        return float(cell)
    except ValueError:
        return cell


def read_report(path, fmt: str | None = None):
    """Inverse of ``write_report``: a dict for JSON, a list of row dicts for CSV."""
    path = Path(path)
    fmt = fmt or ("csv" if path.suffix == ".csv" else "json")
    if fmt == "json":
        return json.loads(path.read_text())
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return [dict(zip(header, (_parse_cell(c) for c in row))) for row in reader]


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()

"""Versioned file formats: phases.csv, metrics.json, trace.csv and summary.csv.

Every file carries a ``format=<name>/<version>`` tag; reading a file with a
different version is an error.  Floats are written with 17 significant
digits so that parse and re-serialize is bit-stable.
"""

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .driver import TRACE_COLUMNS
from .waveform import PhaseConstraint, WaveformSet, alphabet_index, alphabet_phase

PHASES_FORMAT = "webest-phases/1"
METRICS_FORMAT = "webest-metrics/1"
TRACE_FORMAT = "webest-trace/1"
SUMMARY_FORMAT = "webest-summary/1"
MODULUS_TOL = 1e-9


class FormatError(ValueError):
    """A file that does not match its declared format."""


def fmt_float(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def _fmt_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def _check_format(tag, expected, path):
    if tag is None:
        raise FormatError(f"{path}: missing '# format=' header")
    name, _, version = tag.partition("/")
    exp_name, _, exp_version = expected.partition("/")
    if name != exp_name:
        raise FormatError(f"{path}: expected a {exp_name} file, found format {tag!r}")
    if version != exp_version:
        raise FormatError(f"{path}: format version {version!r} not supported (expected {exp_version!r})")


def _split_header(lines):
    meta = {}
    body_start = 0
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            break
        body_start = i + 1
        for item in line[1:].split():
            key, eq, val = item.partition("=")
            if eq:
                meta[key.strip()] = val.strip()
    return meta, body_start


# phases.csv -----------------------------------------------------------------


def phases_to_text(X):
    """Serialize a WaveformSet as phases.csv text (radians, one row per transmitter)."""
    lines = [f"# format={PHASES_FORMAT}", f"# alphabet={X.constraint}"]
    for row in X.phases:
        lines.append(",".join(fmt_float(v) for v in row))
    return "\n".join(lines) + "\n"


def _parse_entry(text, row, col, path):
    s = text.strip()
    try:
        return float(s)
    except ValueError:
        pass
    try:
        z = complex(s.replace(" ", ""))
    except ValueError:
        raise FormatError(f"{path}: row {row}, column {col}: cannot parse {text!r} as a number") from None
    if abs(abs(z) - 1.0) > MODULUS_TOL:
        raise FormatError(f"{path}: row {row}, column {col}: entry {text!r} has modulus {abs(z)!r}, expected 1")
    return math.atan2(z.imag, z.real)


def phases_from_text(text, path="<phases>"):
    """Parse phases.csv text.  Entries are radians, or unit-modulus complex numbers like ``0.6+0.8j``."""
    lines = text.splitlines()
    meta, start = _split_header(lines)
    _check_format(meta.get("format"), PHASES_FORMAT, path)
    try:
        constraint = PhaseConstraint.parse(meta.get("alphabet", "inf"))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    rows = []
    for i, line in enumerate(lines[start:], start=1):
        if not line.strip():
            continue
        cells = line.split(",")
        vals = []
        for j, cell in enumerate(cells, start=1):
            v = _parse_entry(cell, i, j, path)
            if not math.isfinite(v):
                raise FormatError(f"{path}: row {i}, column {j}: non-finite phase {cell.strip()!r}")
            vals.append(v)
        if rows and len(vals) != len(rows[0]):
            raise FormatError(f"{path}: row {i} has {len(vals)} columns, expected {len(rows[0])}")
        rows.append(vals)
    if not rows:
        raise FormatError(f"{path}: no phase rows")
    if len(rows[0]) < 2:
        raise FormatError(f"{path}: sequences need at least 2 columns")
    arr = np.array(rows)
    if constraint.is_discrete:
        step = 2.0 * math.pi / constraint.L
        off = np.abs(arr - np.round(arr / step) * step) > 1e-9
        if np.any(off):
            m, n = np.argwhere(off)[0]
            raise FormatError(
                f"{path}: row {m + 1}, column {n + 1}: phase {arr[m, n]!r} is not on the {constraint.L}-point alphabet"
            )
        arr = alphabet_phase(alphabet_index(arr, constraint.L), constraint.L)
    return WaveformSet(arr, constraint)


def write_phases(path, X):
    Path(path).write_text(phases_to_text(X))


def read_phases(path):
    return phases_from_text(Path(path).read_text(), str(path))


# metrics.json ---------------------------------------------------------------


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    return obj


def metrics_to_text(metrics, config=None):
    """JSON text with ``format``, ``metrics`` and optional ``config``.  Non-finite numbers become null."""
    doc = {"format": METRICS_FORMAT, "metrics": _json_safe(metrics)}
    if config is not None:
        doc["config"] = _json_safe(config)
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_metrics(path, metrics, config=None):
    Path(path).write_text(metrics_to_text(metrics, config))


def read_metrics(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: top level must be an object")
    _check_format(doc.get("format"), METRICS_FORMAT, path)
    return doc


# trace.csv / summary.csv ----------------------------------------------------


def _table_to_text(fmt, columns, rows):
    buf = io.StringIO()
    buf.write(f"# format={fmt}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt_cell(r[c]) for c in columns])
    return buf.getvalue()


def _table_from_text(text, fmt, path, columns=None):
    lines = text.splitlines()
    meta, start = _split_header(lines)
    _check_format(meta.get("format"), fmt, path)
    reader = csv.reader(lines[start:])
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError(f"{path}: missing column header") from None
    if columns is not None and tuple(header) != tuple(columns):
        raise FormatError(f"{path}: columns {header} do not match expected {list(columns)}")
    rows = []
    for i, cells in enumerate(reader, start=1):
        if not cells:
            continue
        if len(cells) != len(header):
            raise FormatError(f"{path}: row {i} has {len(cells)} fields, expected {len(header)}")
        row = {}
        for name, cell in zip(header, cells):
            try:
                row[name] = float(cell)
            except ValueError:
                row[name] = cell
        rows.append(row)
    return header, rows


def trace_to_text(traces):
    """All stages of a run as one trace.csv table."""
    rows = [r for tr in traces for r in tr.rows]
    return _table_to_text(TRACE_FORMAT, TRACE_COLUMNS, rows)


def write_trace(path, traces):
    Path(path).write_text(trace_to_text(traces))


def read_trace(path):
    header, rows = _table_from_text(Path(path).read_text(), TRACE_FORMAT, path, TRACE_COLUMNS)
    for i, r in enumerate(rows, start=1):
        for c in TRACE_COLUMNS:
            if not isinstance(r[c], float):
                raise FormatError(f"{path}: row {i}, column {c!r}: not a number: {r[c]!r}")
    return rows


SUMMARY_COLUMNS = (
    "cell",
    "M",
    "N",
    "alphabet",
    "method",
    "p_schedule",
    "trials",
    "psl_mean",
    "psl_min",
    "psl_max",
    "islr_db_mean",
    "islr_db_min",
    "islr_db_max",
    "sparsity_mean",
    "sparsity_min",
    "sparsity_max",
    "wall_s_mean",
    "wall_s_min",
    "wall_s_max",
    "welch_psl_bound",
    "islr_lower_bound_db",
)


def summary_header_text():
    return _table_to_text(SUMMARY_FORMAT, SUMMARY_COLUMNS, [])


def summary_row_text(row):
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow([_fmt_cell(row[c]) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def read_summary(path):
    return _table_from_text(Path(path).read_text(), SUMMARY_FORMAT, path, SUMMARY_COLUMNS)[1]

"""CSV and JSON helpers with deterministic formatting."""

import csv
import json
from pathlib import Path

import numpy as np


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns, rows, meta=None):
    """Write rows under a header; ``meta`` lines go first as ``# key: value``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for k in sorted(meta or {}):
            fh.write(f"# {k}: {meta[k]}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path):
    """Return (meta, columns, float array)."""
    meta, lines = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].partition(":")
                meta[k.strip()] = v.strip()
            elif line.strip():
                lines.append(line)
    reader = csv.reader(lines)
    columns = next(reader)
    data = np.array([[float(x) for x in row] for row in reader], dtype=float)
    return meta, columns, data.reshape(-1, len(columns))


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_default)


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj) + "\n", encoding="utf-8")
    return path


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_series(path, series):
    """One ObservableSeries as CSV with columns t, value, stderr, N, label."""
    err = series.stderr if series.stderr is not None else np.zeros(series.values.size)
    rows = [(t, v, e, series.n, series.label) for t, v, e in zip(series.times, series.values, err)]
    meta = {"kac": repr(float(series.kac)), "segment": series.segment}
    return write_csv(path, ["t", "value", "stderr", "N", "label"], rows, meta)


def read_series(path):
    from .dynamics import ObservableSeries

    meta = {}
    rows = []
    with open(path, encoding="utf-8") as fh:
        body = []
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].partition(":")
                meta[k.strip()] = v.strip()
            elif line.strip():
                body.append(line)
    reader = csv.DictReader(body)
    for row in reader:
        rows.append(row)
    if not rows:
        raise ValueError(f"no samples in {path}")
    t = np.array([float(r["t"]) for r in rows])
    v = np.array([float(r["value"]) for r in rows])
    e = np.array([float(r.get("stderr") or 0.0) for r in rows])
    return ObservableSeries(t, v, int(float(rows[0]["N"])), rows[0]["label"],
                            kac=float(meta.get("kac", 1.0)),
                            stderr=e if np.any(e > 0) else None,
                            segment=int(meta.get("segment", 0)))

"""Flat-file output: sweep tables (CSV/JSON), field grids (CSV) and PGM images."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import IoFailure


@dataclass(frozen=True)
class SweepRow:
    variables: dict
    metric: str
    value: Any
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        v = self.value
        if isinstance(v, float) and not np.isfinite(v):
            raise ValueError(f"metric {self.metric} is not finite: {v}")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def pivot(rows: Sequence[SweepRow]) -> tuple:
    """Wide table: one line per distinct variable tuple, one column per metric."""
    var_cols, metric_cols = [], []
    table: dict = {}
    for r in rows:
        for k in r.variables:
            if k not in var_cols:
                var_cols.append(k)
        if r.metric not in metric_cols:
            metric_cols.append(r.metric)
    for r in rows:
        key = tuple(_fmt(r.variables[k]) if k in r.variables else "" for k in var_cols)
        table.setdefault(key, {})[r.metric] = r.value
    lines = [list(key) + [_fmt(m[c]) if c in m else "" for c in metric_cols] for key, m in table.items()]
    return var_cols + metric_cols, lines


def collect_flags(rows: Sequence[SweepRow]) -> dict:
    flags: dict = {}
    for r in rows:
        for k, v in r.metadata.items():
            flags.setdefault(k, v)
    return flags


def render_csv(rows: Sequence[SweepRow], header: dict) -> str:
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}: {json.dumps(_jsonable(v), sort_keys=True)}\n")
    cols, lines = pivot(rows)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    w.writerows(lines)
    return buf.getvalue()


def render_json(rows: Sequence[SweepRow], header: dict) -> str:
    cols, _ = pivot(rows)
    doc = dict(_jsonable(header))
    doc["columns"] = cols
    doc["rows"] = [
        {"variables": _jsonable(r.variables), "metric": r.metric, "value": _jsonable(r.value),
         "metadata": _jsonable(r.metadata)}
        for r in rows
    ]
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def emit(rows: Sequence[SweepRow], fmt: str, path, header: dict | None = None) -> Path:
    if not rows:
        raise ValueError("nothing to emit")
    header = dict(header or {})
    header.setdefault("flags", collect_flags(rows))
    if fmt == "csv":
        text = render_csv(rows, header)
    elif fmt == "json":
        text = render_json(rows, header)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return path


def write_grid_csv(path, values: np.ndarray, extent: float) -> Path:
    """Row-major real grid with a ``# N extent_m`` header line."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    lines = [f"# {n} {extent!r}"]
    lines += [",".join(repr(float(v)) for v in row) for row in values]
    path = Path(path)
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return path


def read_grid_csv(path) -> tuple:
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().lstrip("#").split()
        n, extent = int(head[0]), float(head[1])
        vals = np.loadtxt(fh, delimiter=",", ndmin=2)
    if vals.shape != (n, n):
        raise IoFailure(f"grid header says {n}x{n}, found {vals.shape}")
    return vals, extent


def write_pgm(path, values: np.ndarray) -> Path:
    """8-bit binary PGM, scaled so the maximum maps to 255."""
    v = np.asarray(values, dtype=float)
    top = v.max()
    img = np.zeros(v.shape, dtype=np.uint8) if top <= 0 else np.round(255 * np.clip(v, 0, None) / top).astype(np.uint8)
    h, w = img.shape
    path = Path(path)
    try:
        path.write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes())
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return path

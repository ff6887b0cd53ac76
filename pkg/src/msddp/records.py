"""Per-iteration telemetry and its CSV form.

Every CSV starts with a ``#schema=msddp-iter/1`` line followed by a header.
Floats are written with ``repr`` so values round-trip exactly. Wall time is
only written when asked for, which keeps default output byte-reproducible.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

SCHEMA = "msddp-iter/1"


@dataclass
class IterationRecord:
    k: int
    lb: float
    ub: float = np.nan              # best path cost (DDP) or ub_mean (SDDP)
    gap: float = np.nan
    ub_mean: float = np.nan
    ub_std: float = np.nan
    g1: float = np.nan
    q: int | None = None
    saturation: tuple = ()          # |S_1| .. |S_{T-1}|
    indices: tuple = ()             # chosen scenario per stage, replica 0
    states: tuple = ()              # x_1 .. x_T of replica 0
    gbar: tuple | None = None       # audit-mode average distances per stage
    path_cost: float = np.nan
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(int(v)) if isinstance(v, (bool, np.bool_, np.integer, int)) else str(v)


def _write(columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"#schema={SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _state_columns(records):
    if not records or not records[0].states:
        return []
    return [f"x{t + 1}_{j}" for t, x in enumerate(records[0].states) for j in range(len(x))]


def _flat(states):
    return [float(v) for x in states for v in np.ravel(x)]


def ddp_csv(records, include_time: bool = False) -> str:
    sat = [f"S{t + 1}" for t in range(len(records[0].saturation))] if records else []
    cols = ["k", "lb", "ub", "gap", "path_cost"] + sat + _state_columns(records)
    rows = [[r.k, r.lb, r.ub, r.gap, r.path_cost, *r.saturation, *_flat(r.states)]
            for r in records]
    return _with_time(cols, rows, records, include_time)


def eddp_csv(records, include_time: bool = False) -> str:
    sat = [f"S{t + 1}" for t in range(len(records[0].saturation))] if records else []
    idx = [f"i{t + 1}" for t in range(len(records[0].indices))] if records else []
    cols = ["k"] + sat + ["g1", "lb"] + idx
    rows = [[r.k, *r.saturation, r.g1, r.lb, *r.indices] for r in records]
    return _with_time(cols, rows, records, include_time)


def sddp_csv(records, include_time: bool = False, audit: bool = False) -> str:
    idx = [f"i{t + 1}" for t in range(len(records[0].indices))] if records else []
    cols = ["k", "lb", "ub_mean", "ub_std", "q"] + idx
    rows = [[r.k, r.lb, r.ub_mean, r.ub_std, r.q if audit else None, *r.indices]
            for r in records]
    return _with_time(cols, rows, records, include_time)


def kelley_csv(result) -> str:
    n = result.iterates[0].size
    cols = ["k"] + [f"x{j}" for j in range(n)] + ["f", "lb", "ub"]
    rows = []
    # row k reports the point produced by iteration k and the bounds after it
    for k in range(result.iterations):
        x = result.iterates[k + 1]
        rows.append([k + 1, *x.tolist(), result.values[k + 1], result.lbs[k], result.ubs[k]])
    return _write(cols, rows)


def _with_time(cols, rows, records, include_time):
    if include_time:
        cols = cols + ["wall_time"]
        rows = [row + [r.wall_time] for row, r in zip(rows, records)]
    return _write(cols, rows)


def read_csv(text: str):
    """Parse a telemetry CSV back into (columns, rows of floats)."""
    lines = text.splitlines()
    if not lines or lines[0] != f"#schema={SCHEMA}":
        raise ValueError("missing or unknown schema line")
    reader = csv.reader(lines[1:])
    cols = next(reader)
    rows = [[float(v) if v != "" else None for v in row] for row in reader]
    return cols, rows

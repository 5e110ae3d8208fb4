"""CSV / JSON writers for simulation results, plus a trace reader."""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .simulator import Trace

__all__ = ["trace_header", "write_trace_csv", "read_trace_csv", "write_events_csv", "write_summary_json"]

EVENT_HEADER = ["k", "t_k", "t_predicted", "inter_event", "W_k", "runtime_s"]


def _num(v):
    # 17 significant digits round-trip any double
    return format(float(v), ".17g")


def trace_header(n, m):
    return ["t"] + [f"x_{i}" for i in range(1, n + 1)] + [f"u_{i}" for i in range(1, m + 1)] + ["V", "W", "event"]


def write_trace_csv(path, trace):
    n, m = trace.x.shape[1], trace.u.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trace_header(n, m))
        for i in range(len(trace)):
            w.writerow(
                [_num(trace.t[i])]
                + [_num(v) for v in trace.x[i]]
                + [_num(v) for v in trace.u[i]]
                + [_num(trace.V[i]), _num(trace.W[i]), int(trace.event[i])]
            )


def read_trace_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    n = sum(h.startswith("x_") for h in header)
    m = sum(h.startswith("u_") for h in header)
    return Trace(
        t=body[:, 0],
        x=body[:, 1 : 1 + n],
        u=body[:, 1 + n : 1 + n + m],
        V=body[:, 1 + n + m],
        W=body[:, 2 + n + m],
        event=body[:, 3 + n + m].astype(bool),
    )


def write_events_csv(path, events):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EVENT_HEADER)
        for e in events:
            w.writerow(
                [e.k, _num(e.t_k), _num(e.t_predicted), _num(e.inter_event), _num(e.W_k), _num(e.predictor_runtime)]
            )


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_summary_json(path, summary):
    Path(path).write_text(json.dumps(_clean(summary.to_dict()), indent=2) + "\n")

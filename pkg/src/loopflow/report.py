"""Trace and summary emitters: human tables plus csv/json machine formats.

csv and json carry full float precision; only the table view rounds.
"""
from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from . import hydraulics
from .network import FlowState, Network
from .solvers import SolveTrace

M3H_PER_M3S = 3600.0

CSV_FIELDS = [
    "iteration", "loop", "pipe", "orientation", "q", "f", "fprime",
    "dq_own", "dq_adjacent", "q_new", "loop_residual", "loop_derivative_sum",
    "raw_solution", "correction",
]
SUMMARY_FIELDS = ["pipe", "diameter_m", "length_m", "assumed_m3h", "calculated_m3h", "velocity_ms"]


def _rows(trace: SolveTrace):
    """Yield one dict per (iteration, loop, pipe), loop-relative as in the hand tables."""
    for rec in trace.records:
        for li, loop_id in enumerate(trace.loop_ids):
            for row in _rows_for(trace, rec, li):
                yield {
                    "iteration": rec.index,
                    "loop": loop_id,
                    **row,
                    "loop_residual": float(rec.residuals[li]),
                    "loop_derivative_sum": float(rec.derivative_sums[li]),
                    "raw_solution": float(rec.raw_solution[li]),
                    "correction": float(rec.corrections[li]),
                }


def trace_to_dict(trace: SolveTrace) -> dict:
    cfg = trace.config
    m = trace.incidence
    records = []
    for rec in trace.records:
        loops = []
        for li, loop_id in enumerate(trace.loop_ids):
            pipes = list(_rows_for(trace, rec, li))
            loops.append(
                {
                    "id": loop_id,
                    "residual": float(rec.residuals[li]),
                    "derivative_sum": float(rec.derivative_sums[li]),
                    "raw_solution": float(rec.raw_solution[li]),
                    "correction": float(rec.corrections[li]),
                    "pipes": pipes,
                }
            )
        records.append(
            {
                "iteration": rec.index,
                "relative_residual": float(rec.relative_residual),
                "matrix": None if rec.matrix is None else rec.matrix.tolist(),
                "flows": dict(zip(trace.pipe_ids, rec.flows.tolist())),
                "flows_after": dict(zip(trace.pipe_ids, rec.flows_after.tolist())),
                "loops": loops,
                "notes": list(rec.notes),
            }
        )
    return {
        "method": trace.method,
        "config": {
            "max_iterations": cfg.max_iterations,
            "flow_tolerance": cfg.flow_tolerance,
            "residual_tolerance": cfg.residual_tolerance,
        },
        "converged": trace.converged,
        "iterations": trace.iterations,
        "pipes": list(trace.pipe_ids),
        "loops": [
            {"id": lid, "members": {trace.pipe_ids[p]: int(m[li, p]) for p in np.flatnonzero(m[li])}}
            for li, lid in enumerate(trace.loop_ids)
        ],
        "notes": list(trace.notes),
        "records": records,
    }


def _rows_for(trace, rec, li):
    m = trace.incidence
    for pi in np.flatnonzero(m[li]):
        o = m[li, pi]
        others = [lj for lj in np.flatnonzero(m[:, pi]) if lj != li]
        adjacent = sum(o * m[lj, pi] * rec.corrections[lj] for lj in others) if others else None
        yield {
            "pipe": trace.pipe_ids[pi],
            "orientation": int(o),
            "q": float(o * rec.flows[pi]),
            "f": float(o * rec.f[pi]),
            "fprime": float(rec.fprime[pi]),
            "dq_own": float(rec.corrections[li]),
            "dq_adjacent": None if adjacent is None else float(adjacent),
            "q_new": float(o * rec.flows_after[pi]),
        }


def _style(text, color):
    return f"\x1b[1m{text}\x1b[0m" if color else text


def trace_table(trace: SolveTrace, color: bool = False) -> str:
    head = f"{'Loop':<6}{'Pipe':<6}{'Q':>10}{'f':>18}{'|f`|':>18}{'dQ1':>10}{'dQ2':>10}{'Q new':>10}"
    lines = [f"method: {trace.method}  iterations: {trace.iterations}  converged: {trace.converged}"]
    if not trace.records:
        lines.append(_style(head, color))
    for rec in trace.records:
        lines += ["", f"Iteration {rec.index}", _style(head, color)]
        for li, loop_id in enumerate(trace.loop_ids):
            first = True
            for row in _rows_for(trace, rec, li):
                dq2 = "" if row["dq_adjacent"] is None else f"{row['dq_adjacent']:+.4f}"
                lines.append(
                    f"{loop_id if first else '':<6}{row['pipe']:<6}{row['q']:>+10.4f}{row['f']:>+18.1f}"
                    f"{row['fprime']:>18.1f}{row['dq_own']:>+10.4f}{dq2:>10}{row['q_new']:>+10.4f}"
                )
                first = False
            lines.append(
                f"{'':<6}{'Sum':<6}{'':>10}{rec.residuals[li]:>+18.1f}{rec.derivative_sums[li]:>18.1f}"
            )
        for note in rec.notes:
            lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def trace_csv(trace: SolveTrace) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in _rows(trace):
        row = dict(row)
        if row["dq_adjacent"] is None:
            row["dq_adjacent"] = ""
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def trace_json(trace: SolveTrace) -> str:
    return json.dumps(trace_to_dict(trace), indent=2) + "\n"


def emit_trace(trace: SolveTrace, fmt: str = "table", color: bool = False) -> str:
    if fmt == "table":
        return trace_table(trace, color=color)
    if fmt == "csv":
        return trace_csv(trace)
    if fmt == "json":
        return trace_json(trace)
    raise ValueError(f"unknown trace format {fmt!r}")


# --- summary (pipe table) -------------------------------------------------------

def pipe_velocity(net: Network, pipe, q: float) -> float:
    if isinstance(net.fluid, hydraulics.RenouardGas):
        p_abs = net.operating_pressure_abs or net.reference_pressure_abs
        return hydraulics.gas_velocity(q, pipe, p_abs, net.reference_pressure_abs)
    return q / (math.pi * pipe.diameter**2 / 4.0)


def summary_rows(net: Network, initial: FlowState, final: FlowState) -> list:
    """Per-pipe rows; flows in m3/h signed relative to the assumed direction."""
    rows = []
    for p in net.pipes:
        q0 = float(initial.flows[p.id])
        q1 = float(final.flows[p.id])
        direction = -1.0 if q0 < 0 else 1.0
        rows.append(
            {
                "pipe": p.id,
                "diameter_m": p.diameter,
                "length_m": p.length,
                "assumed_m3h": abs(q0) * M3H_PER_M3S,
                "calculated_m3h": direction * q1 * M3H_PER_M3S,
                "velocity_ms": pipe_velocity(net, p, direction * q1),
            }
        )
    return rows


def summary_table(rows, trace: SolveTrace = None, color: bool = False) -> str:
    lines = []
    if trace is not None:
        cfg = trace.config
        lines.append(
            f"method: {trace.method}  iterations: {trace.iterations}  converged: {trace.converged}  "
            f"tol_flow: {cfg.flow_tolerance:g} m3/s  tol_residual: {cfg.residual_tolerance:g}"
        )
    lines.append(
        _style(
            f"{'Pipe':<6}{'D (m)':>8}{'L (m)':>9}{'Assumed (m3/h)':>16}{'Calculated (m3/h)':>19}{'v (m/s)':>10}",
            color,
        )
    )
    for r in rows:
        lines.append(
            f"{r['pipe']:<6}{r['diameter_m']:>8.3f}{r['length_m']:>9.1f}{r['assumed_m3h']:>16.1f}"
            f"{r['calculated_m3h']:>19.1f}{r['velocity_ms']:>10.3f}"
        )
    lines.append("negative calculated flow: direction opposite to the assumed flow")
    return "\n".join(lines) + "\n"


def summary_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def summary_json(rows, trace: SolveTrace) -> str:
    cfg = trace.config
    doc = {
        "method": trace.method,
        "converged": trace.converged,
        "iterations": trace.iterations,
        "flow_tolerance": cfg.flow_tolerance,
        "residual_tolerance": cfg.residual_tolerance,
        "summary": rows,
    }
    return json.dumps(doc, indent=2) + "\n"

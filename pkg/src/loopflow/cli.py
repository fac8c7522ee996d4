"""Command line entry point: ``loopflow {solve,check,compare} FILE``.

Exit codes: 0 converged / balanced, 2 not converged / unbalanced, 1 input error.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import report
from .errors import LoopflowError, NodeDataUnavailable
from .netfile import read_network, serialize_network
from .network import loop_residuals, node_residuals
from .solvers import METHODS, SolverConfig, evaluate, solve

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2
CLI_METHODS = ("original", "lobacev", "modified", "multipoint")
FORMATS = ("table", "csv", "json")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _use_color(stream) -> bool:
    return stream.isatty() and "LOOPFLOW_NO_COLOR" not in os.environ


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="loopflow", description="Steady flow in looped pipe networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="iterate loop corrections to convergence")
    p.add_argument("file")
    p.add_argument("--method", choices=CLI_METHODS, default="modified")
    p.add_argument("--tol-flow", type=float, default=SolverConfig.flow_tolerance, help="m3/s")
    p.add_argument("--tol-residual", type=float, default=SolverConfig.residual_tolerance)
    p.add_argument("--max-iter", type=int, default=SolverConfig.max_iterations)
    p.add_argument("--trace", metavar="PATH", help="write the iteration trace here")
    p.add_argument(
        "--format", choices=FORMATS, default="table",
        help="stdout format; table prints summary and trace, csv/json print the trace only",
    )
    p.add_argument("--write-solution", metavar="PATH", help="write the solved network file")

    p = sub.add_parser("check", help="report loop and node residuals without solving")
    p.add_argument("file")
    p.add_argument("--tol-residual", type=float, default=SolverConfig.residual_tolerance)
    p.add_argument("--tol-flow", type=float, default=1e-9, help="node balance tolerance, m3/s")

    p = sub.add_parser("compare", help="iteration counts of every method")
    p.add_argument("file")
    p.add_argument("--tol-flow", type=float, default=SolverConfig.flow_tolerance)
    p.add_argument("--tol-residual", type=float, default=SolverConfig.residual_tolerance)
    p.add_argument("--max-iter", type=int, default=SolverConfig.max_iterations)
    return parser


def _config(args, method) -> SolverConfig:
    return SolverConfig(
        method=method,
        max_iterations=args.max_iter,
        flow_tolerance=args.tol_flow,
        residual_tolerance=args.tol_residual,
    )


def _trace_format(path: str, default: str) -> str:
    suffix = Path(path).suffix.lower().lstrip(".")
    return suffix if suffix in ("csv", "json") else default


def cmd_solve(args, out, err) -> int:
    net, initial = read_network(args.file)
    cfg = _config(args, args.method)
    trace = solve(net, initial, cfg)
    final = trace.final_state()
    color = _use_color(out)

    if args.format == "table":
        rows = report.summary_rows(net, initial, final)
        out.write(report.summary_table(rows, trace, color=color))
        out.write("\n")
        out.write(report.emit_trace(trace, "table", color=color))
    else:
        out.write(report.emit_trace(trace, args.format))

    if args.trace:
        fmt = _trace_format(args.trace, args.format)
        Path(args.trace).write_text(report.emit_trace(trace, fmt), encoding="utf-8")
    if args.write_solution:
        Path(args.write_solution).write_text(serialize_network(net, final), encoding="utf-8")

    if not trace.converged:
        print(f"not converged after {trace.iterations} iterations ({cfg.method})", file=err)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_check(args, out, err) -> int:
    net, state = read_network(args.file)
    balanced = True
    ls = evaluate(net, state.vector(net)) if net.loops else None
    out.write(f"{'Loop':<8}{'sum f':>18}{'relative':>14}\n")
    for i, (loop_id, r) in enumerate(loop_residuals(net, state).items()):
        row = ls.incidence[i] != 0
        scale = abs(ls.f[row]).max()
        rel = abs(r) / scale if scale > 0 else (0.0 if r == 0 else float("inf"))
        balanced &= rel <= args.tol_residual
        out.write(f"{loop_id:<8}{r:>+18.6g}{rel:>14.3g}\n")
    try:
        nodes = node_residuals(net, state)
    except NodeDataUnavailable:
        print("warning: no node incidence in this file; node balance not checked", file=err)
    else:
        out.write(f"\n{'Node':<8}{'inflow-outflow-demand (m3/s)':>30}\n")
        for node_id, r in nodes.items():
            balanced &= abs(r) <= args.tol_flow
            out.write(f"{node_id:<8}{r:>+30.6g}\n")
    out.write("balanced\n" if balanced else "not balanced\n")
    return EXIT_OK if balanced else EXIT_NOT_CONVERGED


def cmd_compare(args, out, err) -> int:
    net, initial = read_network(args.file)
    out.write(f"{'method':<22}{'iterations':>11}{'converged':>11}\n")
    all_ok = True
    for method in METHODS:
        try:
            trace = solve(net, initial, _config(args, method))
        except LoopflowError as exc:
            print(f"{method}: {exc}", file=err)
            out.write(f"{method:<22}{'-':>11}{'error':>11}\n")
            all_ok = False
            continue
        all_ok &= trace.converged
        out.write(f"{method:<22}{trace.iterations:>11}{str(trace.converged):>11}\n")
    return EXIT_OK if all_ok else EXIT_NOT_CONVERGED


COMMANDS = {"solve": cmd_solve, "check": cmd_check, "compare": cmd_compare}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out, err)
    except (LoopflowError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Iteration counts and residual histories of every method.

Runs the bundled network plus a batch of random grid networks and prints
summary statistics; ``--history out.csv`` writes the per-iteration maximum
relative loop residual of the bundled network for plotting.
"""
import argparse
import csv

import numpy as np

from loopflow import hydraulics
from loopflow.datasets import figure1, grid_network
from loopflow.errors import SolverError
from loopflow.solvers import METHODS, SolverConfig, solve

FLUIDS = {"gas": hydraulics.RenouardGas(), "water": hydraulics.DarcyWater(), "vent": hydraulics.AtkinsonVent()}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grids", type=int, default=50)
    ap.add_argument("--rows", type=int, default=3)
    ap.add_argument("--cols", type=int, default=4)
    ap.add_argument("--fluid", choices=FLUIDS, default="gas")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--history", metavar="CSV")
    args = ap.parse_args()

    net, state = figure1()
    traces = {m: solve(net, state, SolverConfig(m, max_iterations=300)) for m in METHODS}
    print("bundled network")
    for m, t in traces.items():
        print(f"  {m:<22}{t.iterations:>5}  converged={t.converged}")
    if args.history:
        with open(args.history, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "iteration", "max_relative_residual", "max_abs_correction"])
            for m, t in traces.items():
                for rec in t.records:
                    w.writerow([m, rec.index, repr(rec.relative_residual), repr(float(np.abs(rec.corrections).max()))])

    counts = {m: [] for m in METHODS}
    skipped = 0
    for k in range(args.grids):
        net, state = grid_network(args.rows, args.cols, fluid=FLUIDS[args.fluid], seed=args.seed + k)
        try:
            row = {m: solve(net, state, SolverConfig(m, max_iterations=500)) for m in METHODS}
        except SolverError:
            skipped += 1
            continue
        for m, t in row.items():
            counts[m].append(t.iterations if t.converged else np.nan)
    print(f"\n{args.rows}x{args.cols} {args.fluid} grids: {args.grids - skipped} solved, {skipped} skipped")
    print(f"  {'method':<22}{'median':>8}{'max':>6}{'not conv.':>11}")
    for m, c in counts.items():
        c = np.array(c, dtype=float)
        print(f"  {m:<22}{np.nanmedian(c):>8.1f}{np.nanmax(c):>6.0f}{int(np.isnan(c).sum()):>11}")


if __name__ == "__main__":
    main()

"""Rebuild the first-iteration table, the final pipe table and the method comparison
for the bundled five-loop gas network."""
import argparse

import numpy as np

from loopflow import report
from loopflow.datasets import figure1, figure1_table1
from loopflow.linsolve import cramer_numerators, determinant
from loopflow.solvers import METHODS, SolverConfig, assemble_lobacev, assemble_modified, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--iterations", type=int, default=2, help="trace iterations to print")
    args = ap.parse_args()

    net, start = figure1_table1()
    trace = solve(net, start, SolverConfig("modified", max_iterations=args.iterations))
    print(report.trace_table(trace))

    with np.printoptions(formatter={"float": "{:+16.1f}".format}, linewidth=120):
        print("modified system, iteration 1\n", assemble_modified(net, start).matrix)
        lob = assemble_lobacev(net, start)
        print("Lobacev system, iteration 1\n", lob.matrix)
    print(f"Lobacev determinant {determinant(lob.matrix):.4e}")
    print("Lobacev numerators  " + "  ".join(f"{x:+.4e}" for x in cramer_numerators(lob)))
    print()

    net, assumed = figure1()
    final = solve(net, assumed, SolverConfig("modified"))
    print(report.summary_table(report.summary_rows(net, assumed, final.final_state()), final))

    print(f"{'method':<22}{'iterations':>11}")
    for method in METHODS:
        print(f"{method:<22}{solve(net, assumed, SolverConfig(method)).iterations:>11}")


if __name__ == "__main__":
    main()

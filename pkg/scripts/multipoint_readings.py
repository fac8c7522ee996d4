"""Iteration counts of alternative readings of the three-point schedule on the
bundled network.

The schedule can be read several ways: keep a rolling three-residual window
or restart it every three iterations; use the Jacobian of the current
iterate or the one from the oldest stored iterate; and guard the divisor by
falling back to the plain step when a residual ratio leaves (-1/2, 1/2).
The package ships the rolling / current-Jacobian / guarded reading.
"""
import itertools

import numpy as np

from loopflow.datasets import figure1
from loopflow.solvers import SolverConfig, evaluate, solve


def run(net, q0, restart, fresh, guard, max_iter=100, tol_q=1e-7, tol_r=1e-6):
    q = q0.copy()
    hist, jacs = [], []
    for it in range(1, max_iter + 1):
        with np.errstate(all="ignore"):
            ls = evaluate(net, q)
        if restart and (it - 1) % 3 == 0:
            hist, jacs = [], []
        hist.append(ls.residuals)
        jacs.append(ls.jacobian)
        with np.errstate(all="ignore"):
            if len(hist) == 1:
                jac, factor, ratios = jacs[-1], np.ones(len(hist[0])), []
            elif len(hist) == 2:
                jac = jacs[-1] if fresh else jacs[-2]
                u = hist[-1] / hist[-2]
                factor, ratios = 1 - 2 * u - u * u, [u]
            else:
                jac = jacs[-1] if fresh else jacs[-3]
                a, b, c = hist[-3:]
                u, w, t = b / a, c / b, c / a
                factor, ratios = (1 - 2 * u - u * u) * (1 - w) * (1 - 2 * t), [u, w, t]
            ok = np.isfinite(factor) & (np.abs(factor) > 1e-12)
            if guard:
                for r in ratios:
                    ok &= np.abs(r) < 0.5
            newton = -np.linalg.solve(jac, ls.residuals)
            delta = np.where(ok, newton / np.where(ok, factor, 1.0), newton)
        if not np.all(np.isfinite(delta)):
            return "diverged"
        q = q + ls.incidence.T @ delta
        if np.abs(delta).max() <= tol_q and ls.relative_residual() <= tol_r:
            return it
    return "not converged"


def main():
    net, state = figure1()
    q0 = state.vector(net)
    print(f"modified (reference): {solve(net, state, SolverConfig('modified')).iterations}")
    print(f"shipped multipoint:   {solve(net, state, SolverConfig('modified_multipoint')).iterations}")
    print(f"\n{'window':<10}{'jacobian':<10}{'guard':<7}result")
    for restart, fresh, guard in itertools.product([False, True], repeat=3):
        result = run(net, q0, restart, fresh, guard)
        print(f"{'restart' if restart else 'rolling':<10}{'current' if fresh else 'oldest':<10}{str(guard):<7}{result}")


if __name__ == "__main__":
    main()

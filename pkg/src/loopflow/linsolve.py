"""Small dense linear systems: Gaussian elimination and Cramer's rule.

Loop systems are at most a few hundred unknowns, so a dense O(n^3)
elimination is all that is needed.  The determinant path exists because the
Lobacev corrections are defined as determinant ratios.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrixError

SINGULAR_TOL = 1e-12
CRAMER_MAX_N = 8


@dataclass(frozen=True)
class DenseSystem:
    matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        a = np.array(self.matrix, dtype=float)
        b = np.array(self.rhs, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"matrix must be square n x n with n >= 1, got shape {a.shape}")
        if b.shape != (a.shape[0],):
            raise ValueError(f"rhs shape {b.shape} does not match matrix {a.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("system has non-finite entries")
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "rhs", b)

    @property
    def n(self) -> int:
        return self.rhs.shape[0]


def lu_factor(matrix):
    """In-place style LU with partial pivoting.

    Returns (lu, perm, sign) with P A = L U packed into ``lu``; ``sign`` is the
    parity of the row permutation.
    """
    lu = np.array(matrix, dtype=float)
    n = lu.shape[0]
    perm = np.arange(n)
    sign = 1.0
    for k in range(n - 1):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
            sign = -sign
        if lu[k, k] == 0.0:
            continue
        lu[k + 1 :, k] /= lu[k, k]
        lu[k + 1 :, k + 1 :] -= np.outer(lu[k + 1 :, k], lu[k, k + 1 :])
    return lu, perm, sign


def determinant(matrix) -> float:
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"determinant needs a square matrix, got shape {a.shape}")
    lu, _, sign = lu_factor(a)
    return float(sign * np.prod(np.diag(lu)))


def _check_singular(matrix, lu, perm):
    # per pivot: |u_kk| against the largest entry of the row it came from
    row_max = np.max(np.abs(matrix), axis=1)[perm]
    pivots = np.abs(np.diag(lu))
    if np.any(row_max == 0):
        raise SingularMatrixError(0.0)
    bad = pivots < SINGULAR_TOL * row_max
    if np.any(bad):
        k = int(np.argmax(bad))
        raise SingularMatrixError(float(pivots[k]))


def solve(system: DenseSystem) -> np.ndarray:
    a, b = system.matrix, system.rhs
    lu, perm, _ = lu_factor(a)
    _check_singular(a, lu, perm)
    n = system.n
    y = b[perm].copy()
    for i in range(1, n):
        y[i] -= lu[i, :i] @ y[:i]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - lu[i, i + 1 :] @ x[i + 1 :]) / lu[i, i]
    return x


def cramer_numerators(system: DenseSystem) -> np.ndarray:
    """det(A with column k replaced by the rhs), for every k."""
    a, b = system.matrix, system.rhs
    out = np.empty(system.n)
    for k in range(system.n):
        ak = a.copy()
        ak[:, k] = b
        out[k] = determinant(ak)
    return out


def cramer_solve(system: DenseSystem) -> np.ndarray:
    if system.n > CRAMER_MAX_N:
        raise ValueError(f"Cramer's rule is limited to n <= {CRAMER_MAX_N}, got n={system.n}")
    a = system.matrix
    lu, perm, _ = lu_factor(a)
    _check_singular(a, lu, perm)
    return cramer_numerators(system) / determinant(a)


def relative_residual(system: DenseSystem, x) -> float:
    r = system.matrix @ np.asarray(x) - system.rhs
    scale = np.max(np.abs(system.rhs))
    return float(np.max(np.abs(r)) / scale) if scale > 0 else float(np.max(np.abs(r)))

"""Loop-correction solvers: original Hardy Cross, Lobacev, modified Hardy Cross
and a three-point (multipoint) variant of the modified method.

All methods share one update law.  Each iteration produces one applied
correction ``delta_l`` per loop and every pipe receives

    Q_p += sum_l orientation(l, p) * delta_l

which is the whole of the "first correction / second correction from the
adjacent loop" bookkeeping.  Since every loop is a closed path, this update
never changes a node balance.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linsolve
from .errors import DegenerateLoopError, LoopflowError, SolverError
from .linsolve import DenseSystem
from .network import (
    FlowState,
    Network,
    check_loop_sharing,
    loop_incidence,
    pipe_derivatives,
    pipe_pressure_drops,
)

METHODS = ("original", "lobacev", "modified", "modified_multipoint")
METHOD_ALIASES = {"multipoint": "modified_multipoint", "hardy_cross": "original"}

MULTIPOINT_READING = (
    "three-point divisor: i=1 plain step; i=2 divides the step by 1-2u-u^2, "
    "u=r(i)/r(i-1); i>=3 divides by (1-2u-u^2)(1-w)(1-2t) with "
    "u=r(i-1)/r(i-2), w=r(i)/r(i-1), t=r(i)/r(i-2); per loop, on top of the "
    "modified-method step; falls back to the plain step when a ratio leaves "
    "(-1/2, 1/2) or the divisor is not positive"
)

# ratios of successive residuals outside this bound are outside the region
# where the three-point weight expansions are meaningful
MULTIPOINT_RATIO_BOUND = 0.5


@dataclass(frozen=True)
class SolverConfig:
    method: str = "modified"
    max_iterations: int = 100
    flow_tolerance: float = 1e-7
    residual_tolerance: float = 1e-6

    def __post_init__(self):
        method = METHOD_ALIASES.get(self.method, self.method)
        if method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        object.__setattr__(self, "method", method)
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (self.flow_tolerance > 0 and self.residual_tolerance > 0):
            raise ValueError("tolerances must be > 0")


@dataclass
class LoopState:
    """Everything the assemblers need at one flow vector."""

    q: np.ndarray
    incidence: np.ndarray
    f: np.ndarray
    fprime: np.ndarray
    residuals: np.ndarray
    derivative_sums: np.ndarray

    @property
    def jacobian(self) -> np.ndarray:
        m = self.incidence
        return (m * self.fprime) @ m.T

    def relative_residual(self) -> float:
        """max over loops of |sum +-f| / max |f| of the loop's pipes."""
        worst = 0.0
        absf = np.abs(self.f)
        for row, r in zip(self.incidence, self.residuals):
            scale = absf[row != 0].max()
            if r == 0:
                continue
            worst = max(worst, abs(r) / scale if scale > 0 else np.inf)
        return float(worst)


def evaluate(net: Network, q, incidence: Optional[np.ndarray] = None) -> LoopState:
    q = np.asarray(q, dtype=float)
    m = loop_incidence(net) if incidence is None else incidence
    f = pipe_pressure_drops(net, q)
    fp = pipe_derivatives(net, q)
    return LoopState(q, m, f, fp, m @ f, np.abs(m) @ fp)


def _as_vector(net, state) -> np.ndarray:
    return state.vector(net) if isinstance(state, FlowState) else np.asarray(state, dtype=float)


def _check_degenerate(net: Network, ls: LoopState):
    for loop_id, d in zip(net.loop_ids, ls.derivative_sums):
        if d == 0:
            raise DegenerateLoopError(loop_id)


def apply_corrections(incidence: np.ndarray, q: np.ndarray, delta: np.ndarray) -> np.ndarray:
    return q + incidence.T @ delta


# --- original -----------------------------------------------------------------

def assemble_original(net: Network, state) -> tuple:
    """Per-loop (sum +-f, sum |f'|)."""
    ls = evaluate(net, _as_vector(net, state))
    _check_degenerate(net, ls)
    return ls.residuals, ls.derivative_sums


def step_original(net: Network, state):
    q = _as_vector(net, state)
    ls = evaluate(net, q)
    _check_degenerate(net, ls)
    delta = -ls.residuals / ls.derivative_sums
    return FlowState.from_vector(net, apply_corrections(ls.incidence, q, delta)), delta


# --- Lobacev ------------------------------------------------------------------

def _residual_signs(residuals: np.ndarray) -> np.ndarray:
    return np.where(residuals >= 0, 1.0, -1.0)


def _lobacev_system(ls: LoopState) -> DenseSystem:
    # Off-diagonal couplings take the signs of both loop residuals; the
    # diagonal takes the sign of its own loop residual.
    s = _residual_signs(ls.residuals)
    a = np.outer(s, s) * ls.jacobian
    np.fill_diagonal(a, s * ls.derivative_sums)
    return DenseSystem(a, ls.residuals)


def assemble_lobacev(net: Network, state) -> DenseSystem:
    check_loop_sharing(net)
    ls = evaluate(net, _as_vector(net, state))
    _check_degenerate(net, ls)
    return _lobacev_system(ls)


def lobacev_corrections(system: DenseSystem, method: str = "elimination") -> np.ndarray:
    """Raw Lobacev unknowns, by elimination or as determinant ratios."""
    if method == "cramer":
        return linsolve.cramer_solve(system)
    return linsolve.solve(system)


def step_lobacev(net: Network, state):
    """Returns (new state, applied corrections, raw system solution).

    The applied correction is ``-sign(sum +-f)_l * x_l``; with no shared pipes
    this is exactly the original Hardy Cross correction.
    """
    check_loop_sharing(net)
    q = _as_vector(net, state)
    ls = evaluate(net, q)
    _check_degenerate(net, ls)
    system = _lobacev_system(ls)
    x = linsolve.solve(system)
    delta = -_residual_signs(ls.residuals) * x
    return FlowState.from_vector(net, apply_corrections(ls.incidence, q, delta)), delta, x


# --- modified (simultaneous) ---------------------------------------------------

def assemble_modified(net: Network, state) -> DenseSystem:
    """Loop Jacobian: diagonal sum |f'|, shared pipes -f' (for opposed orientations)."""
    ls = evaluate(net, _as_vector(net, state))
    _check_degenerate(net, ls)
    return DenseSystem(ls.jacobian, ls.residuals)


def step_modified(net: Network, state):
    q = _as_vector(net, state)
    ls = evaluate(net, q)
    _check_degenerate(net, ls)
    delta = -linsolve.solve(DenseSystem(ls.jacobian, ls.residuals))
    return FlowState.from_vector(net, apply_corrections(ls.incidence, q, delta)), delta


# --- multipoint ---------------------------------------------------------------

@dataclass(frozen=True)
class ResidualHistory:
    """Last (up to) three loop-residual vectors, oldest first; ``counter`` is i."""

    residuals: tuple = ()
    counter: int = 0

    def push(self, r) -> "ResidualHistory":
        stored = (self.residuals + (np.array(r, dtype=float),))[-3:]
        return ResidualHistory(stored, self.counter + 1)


def three_point_factor(history: ResidualHistory):
    """Divisor factor per loop and a mask of loops that fell back to Newton.

    ``history`` must already contain the current residual.
    """
    rs = history.residuals
    n = len(rs[-1])
    if history.counter <= 1 or len(rs) < 2:
        return np.ones(n), np.zeros(n, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        if history.counter == 2 or len(rs) == 2:
            u = rs[-1] / rs[-2]
            ratios = [u]
            w_factor = 1.0 - 2.0 * u - u * u
        else:
            a, b, c = rs[-3], rs[-2], rs[-1]
            u, w, t = b / a, c / b, c / a
            ratios = [u, w, t]
            w_factor = (1.0 - 2.0 * u - u * u) * (1.0 - w) * (1.0 - 2.0 * t)
    ok = np.isfinite(w_factor) & (w_factor > 1e-12)
    for ratio in ratios:
        ok &= np.isfinite(ratio) & (np.abs(ratio) < MULTIPOINT_RATIO_BOUND)
    factor = np.where(ok, w_factor, 1.0)
    return factor, ~ok


def step_multipoint(net: Network, state, hist: ResidualHistory, base: str = "modified"):
    """Returns (new state, applied corrections, updated history, fallback mask)."""
    q = _as_vector(net, state)
    ls = evaluate(net, q)
    _check_degenerate(net, ls)
    if base == "modified":
        newton = -linsolve.solve(DenseSystem(ls.jacobian, ls.residuals))
    elif base == "original":
        newton = -ls.residuals / ls.derivative_sums
    else:
        raise ValueError(f"unknown multipoint base {base!r}")
    hist = hist.push(ls.residuals)
    factor, fallback = three_point_factor(hist)
    delta = newton / factor
    new = FlowState.from_vector(net, apply_corrections(ls.incidence, q, delta))
    return new, delta, hist, fallback


# --- driver -------------------------------------------------------------------

@dataclass
class IterationRecord:
    index: int
    flows: np.ndarray
    f: np.ndarray
    fprime: np.ndarray
    residuals: np.ndarray
    derivative_sums: np.ndarray
    matrix: Optional[np.ndarray]
    raw_solution: np.ndarray
    corrections: np.ndarray
    flows_after: np.ndarray
    relative_residual: float
    notes: tuple = ()


@dataclass
class SolveTrace:
    method: str
    config: SolverConfig
    pipe_ids: list
    loop_ids: list
    incidence: np.ndarray
    records: list = field(default_factory=list)
    converged: bool = False
    notes: tuple = ()
    initial_flows: Optional[np.ndarray] = None

    @property
    def iterations(self) -> int:
        return len(self.records)

    def final_flows(self) -> np.ndarray:
        if not self.records:
            return np.array(self.initial_flows, dtype=float)
        return self.records[-1].flows_after.copy()

    def final_state(self) -> FlowState:
        return FlowState(dict(zip(self.pipe_ids, self.final_flows().tolist())))


def _iterate_once(net, method, q, ls, hist):
    notes = ()
    matrix = None
    if method == "original":
        raw = ls.residuals / ls.derivative_sums
        delta = -raw
    elif method == "lobacev":
        system = _lobacev_system(ls)
        matrix = system.matrix
        raw = linsolve.solve(system)
        delta = -_residual_signs(ls.residuals) * raw
    elif method == "modified":
        matrix = ls.jacobian
        raw = linsolve.solve(DenseSystem(matrix, ls.residuals))
        delta = -raw
    else:
        matrix = ls.jacobian
        raw = linsolve.solve(DenseSystem(matrix, ls.residuals))
        hist = hist.push(ls.residuals)
        factor, fallback = three_point_factor(hist)
        delta = -raw / factor
        if hist.counter > 1 and fallback.any():
            loops = ", ".join(lid for lid, fb in zip(net.loop_ids, fallback) if fb)
            notes = (f"i={hist.counter}: plain step for loops {loops}",)
    return matrix, raw, delta, hist, notes


def solve(net: Network, initial, cfg: SolverConfig = SolverConfig()) -> SolveTrace:
    """Iterate the configured method until corrections and residuals are small.

    Non-convergence is reported through ``trace.converged``; failures inside
    an iteration are raised as :class:`SolverError` carrying the iteration.
    """
    incidence = loop_incidence(net)
    trace = SolveTrace(
        method=cfg.method,
        config=cfg,
        pipe_ids=net.pipe_ids,
        loop_ids=net.loop_ids,
        incidence=incidence,
        notes=(MULTIPOINT_READING,) if cfg.method == "modified_multipoint" else (),
    )
    if cfg.method == "lobacev":
        check_loop_sharing(net)
    q = _as_vector(net, initial).copy()
    trace.initial_flows = q.copy()
    if not net.loops:
        trace.converged = True
        return trace
    hist = ResidualHistory()
    for k in range(1, cfg.max_iterations + 1):
        try:
            ls = evaluate(net, q, incidence)
            _check_degenerate(net, ls)
            matrix, raw, delta, hist, notes = _iterate_once(net, cfg.method, q, ls, hist)
        except LoopflowError as exc:
            raise SolverError(k, exc) from exc
        q_new = apply_corrections(incidence, q, delta)
        rel = ls.relative_residual()
        trace.records.append(
            IterationRecord(
                index=k,
                flows=q,
                f=ls.f,
                fprime=ls.fprime,
                residuals=ls.residuals,
                derivative_sums=ls.derivative_sums,
                matrix=matrix,
                raw_solution=raw,
                corrections=delta,
                flows_after=q_new,
                relative_residual=rel,
                notes=notes,
            )
        )
        q = q_new
        if np.max(np.abs(delta)) <= cfg.flow_tolerance and rel <= cfg.residual_tolerance:
            trace.converged = True
            break
    return trace

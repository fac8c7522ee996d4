"""Steady-state flow in looped pipe networks by loop-correction methods."""
from .errors import LoopflowError
from .hydraulics import AtkinsonVent, DarcyWater, RenouardGas
from .network import FlowState, LoopDef, Network, Node, Pipe
from .solvers import SolverConfig, SolveTrace, solve

__all__ = [
    "AtkinsonVent",
    "DarcyWater",
    "FlowState",
    "LoopDef",
    "LoopflowError",
    "Network",
    "Node",
    "Pipe",
    "RenouardGas",
    "SolveTrace",
    "SolverConfig",
    "solve",
]

"""Pressure-drop laws for single pipes.

Every law is returned as an odd function of the signed flow, ``f(-Q) == -f(Q)``,
with a non-negative derivative.  Units are SI throughout: flows in m3/s,
lengths in m, pressures in Pa (Pa^2 for the Renouard pseudo pressure drop).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .errors import ColebrookConvergenceError, ConfigurationError, OutOfRegimeError

RENOUARD_COEFF = 4810.0
RENOUARD_FLOW_EXP = 1.82
RENOUARD_DIAM_EXP = 4.82

TURBULENT_RE = 4000.0
STANDARD_PRESSURE = 101325.0


@dataclass(frozen=True)
class RenouardGas:
    """Natural gas in a distribution network (Renouard formula)."""

    relative_density: float = 0.64

    def __post_init__(self):
        if not self.relative_density > 0:
            raise ConfigurationError(f"relative_density must be > 0, got {self.relative_density}")


@dataclass(frozen=True)
class DarcyWater:
    """Incompressible liquid, Darcy-Weisbach with Colebrook friction."""

    density: float = 1000.0
    kinematic_viscosity: float = 1.0e-6

    def __post_init__(self):
        if not self.density > 0:
            raise ConfigurationError(f"density must be > 0, got {self.density}")
        if not self.kinematic_viscosity > 0:
            raise ConfigurationError(
                f"kinematic_viscosity must be > 0, got {self.kinematic_viscosity}"
            )


@dataclass(frozen=True)
class AtkinsonVent:
    """Air through ventilation openings (Atkinson square law)."""

    density: float = 1.2

    def __post_init__(self):
        if not self.density > 0:
            raise ConfigurationError(f"density must be > 0, got {self.density}")


FluidModel = Union[RenouardGas, DarcyWater, AtkinsonVent]


def _sign(q: float) -> float:
    return math.copysign(1.0, q) if q != 0 else 0.0


# --- Renouard (gas) -----------------------------------------------------------

def renouard_coefficient(pipe, relative_density: float) -> float:
    return RENOUARD_COEFF * relative_density * pipe.length / pipe.diameter**RENOUARD_DIAM_EXP


def renouard_f(q: float, pipe, relative_density: float) -> float:
    """Pseudo pressure drop p1^2 - p2^2 in Pa^2."""
    k = renouard_coefficient(pipe, relative_density)
    return _sign(q) * k * abs(q) ** RENOUARD_FLOW_EXP


def renouard_fprime(q: float, pipe, relative_density: float) -> float:
    k = renouard_coefficient(pipe, relative_density)
    return RENOUARD_FLOW_EXP * k * abs(q) ** (RENOUARD_FLOW_EXP - 1.0)


# --- Colebrook / Darcy-Weisbach (water) ---------------------------------------

def colebrook_residual(lam: float, reynolds: float, rel_roughness: float) -> float:
    """Residual of the implicit Colebrook relation written in 1/sqrt(lambda)."""
    x = 1.0 / math.sqrt(lam)
    return x + 2.0 * math.log10(2.51 / reynolds * x + rel_roughness / 3.71)


def colebrook_lambda(
    reynolds: float,
    rel_roughness: float,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Darcy friction factor from the Colebrook equation.

    Fixed-point iteration on ``x = 1/sqrt(lambda)``; the map is a strong
    contraction for turbulent Reynolds numbers so a handful of sweeps reach
    machine precision.  ``reynolds=math.inf`` gives the fully rough limit.
    """
    if not reynolds > TURBULENT_RE:
        raise OutOfRegimeError(
            f"Colebrook equation needs turbulent flow (Re > {TURBULENT_RE:g}), got Re={reynolds:g}"
        )
    if rel_roughness < 0:
        raise ConfigurationError(f"relative roughness must be >= 0, got {rel_roughness}")

    x = 8.0  # lambda ~ 0.0156
    residual = math.inf
    for _ in range(max_iter):
        x = -2.0 * math.log10(2.51 / reynolds * x + rel_roughness / 3.71)
        residual = x + 2.0 * math.log10(2.51 / reynolds * x + rel_roughness / 3.71)
        if abs(residual) < tol:
            return 1.0 / (x * x)
    raise ColebrookConvergenceError(residual)


def reynolds_number(q: float, pipe, kinematic_viscosity: float) -> float:
    area = math.pi * pipe.diameter**2 / 4.0
    return abs(q) * pipe.diameter / (area * kinematic_viscosity)


def _darcy_friction(q: float, pipe, fluid: DarcyWater) -> float:
    re = reynolds_number(q, pipe, fluid.kinematic_viscosity)
    roughness = pipe.roughness if pipe.roughness is not None else 0.0
    return colebrook_lambda(re, roughness / pipe.diameter)


def darcy_f(q: float, pipe, fluid: DarcyWater, friction: float | None = None) -> float:
    """Darcy-Weisbach pressure drop in Pa.

    ``friction`` freezes lambda; by default it is solved from Colebrook at |q|.
    """
    if q == 0:
        return 0.0
    lam = _darcy_friction(q, pipe, fluid) if friction is None else friction
    return _sign(q) * 8.0 * fluid.density * lam * pipe.length * q * q / (math.pi**2 * pipe.diameter**5)


def darcy_fprime(q: float, pipe, fluid: DarcyWater, mode: str = "frozen") -> float:
    """Derivative of :func:`darcy_f`.

    ``mode="frozen"`` holds lambda at its value for the current flow, giving
    ``2 |dp| / |q|``; this is what the loop solvers use.  ``mode="fd"`` is a
    central finite difference that includes d(lambda)/dQ.
    """
    if mode == "frozen":
        if q == 0:
            return 0.0
        return 2.0 * abs(darcy_f(q, pipe, fluid)) / abs(q)
    if mode == "fd":
        h = 1e-6 * abs(q)
        if h == 0:
            raise OutOfRegimeError("finite-difference derivative undefined at zero flow")
        return (darcy_f(q + h, pipe, fluid) - darcy_f(q - h, pipe, fluid)) / (2.0 * h)
    raise ValueError(f"unknown derivative mode {mode!r}")


# --- Atkinson (ventilation) ---------------------------------------------------

def _atkinson_coefficient(pipe, fluid: AtkinsonVent) -> float:
    cd, area = pipe.discharge_coeff, pipe.opening_area
    if cd is None or area is None:
        raise ConfigurationError(
            f"pipe {pipe.id}: ventilation model needs discharge_coeff and opening_area"
        )
    return fluid.density / (2.0 * cd * cd * area * area)


def atkinson_f(q: float, pipe, fluid: AtkinsonVent) -> float:
    return _sign(q) * _atkinson_coefficient(pipe, fluid) * q * q


def atkinson_fprime(q: float, pipe, fluid: AtkinsonVent) -> float:
    return 2.0 * _atkinson_coefficient(pipe, fluid) * abs(q)


# --- dispatch -----------------------------------------------------------------

def pressure_drop(q: float, pipe, fluid: FluidModel) -> float:
    """Signed pressure function f(Q) of one pipe under the given fluid model."""
    if isinstance(fluid, RenouardGas):
        return renouard_f(q, pipe, fluid.relative_density)
    if isinstance(fluid, DarcyWater):
        return darcy_f(q, pipe, fluid)
    if isinstance(fluid, AtkinsonVent):
        return atkinson_f(q, pipe, fluid)
    raise ConfigurationError(f"unsupported fluid model {fluid!r}")


def pressure_drop_derivative(q: float, pipe, fluid: FluidModel) -> float:
    if isinstance(fluid, RenouardGas):
        return renouard_fprime(q, pipe, fluid.relative_density)
    if isinstance(fluid, DarcyWater):
        return darcy_fprime(q, pipe, fluid)
    if isinstance(fluid, AtkinsonVent):
        return atkinson_fprime(q, pipe, fluid)
    raise ConfigurationError(f"unsupported fluid model {fluid!r}")


def gas_velocity(
    q_normal: float, pipe, p_abs: float, p_ref: float = STANDARD_PRESSURE
) -> float:
    """Mean in-pipe velocity for a flow quoted at normal conditions.

    The gas is compressed by ``p_abs / p_ref``, so the actual volumetric flow
    shrinks by that ratio.
    """
    if not (p_abs >= p_ref > 0):
        raise ConfigurationError(f"need p_abs >= p_ref > 0, got p_abs={p_abs}, p_ref={p_ref}")
    area = math.pi * pipe.diameter**2 / 4.0
    return q_normal * (p_ref / p_abs) / area

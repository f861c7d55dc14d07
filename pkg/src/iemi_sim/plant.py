"""Averaged converter output stage charging a battery under PI voltage control.

The switching bridge is replaced by its average: the commanded duty ``d_mag``
scales the effective bus ``V_p + V_n`` into a target output voltage, which the
output filter follows with a single time constant ``tau_p``. The battery is an
EMF behind a series resistance, so the charging current is
``(v_out - V_bat) / R_bat`` and a 1 V error on ``v_out`` moves the current by
``1 / R_bat`` amperes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ConfigError


@dataclass(frozen=True)
class OperatingPoint:
    V_bat: float = 500.0
    R_bat: float = 0.5
    V_out_ref: float = 502.0
    phi_grid: float = 45.0  # carried for completeness; unused at a DC operating point
    V_p: float = 480.0
    V_n: float = 176.0

    def __post_init__(self):
        if not self.R_bat > 0:
            raise ConfigError("R_bat must be > 0")
        if not self.V_out_ref > self.V_bat:
            raise ConfigError("V_out_ref must exceed V_bat (charging)")
        if not (self.V_p > 0 and self.V_n > 0):
            raise ConfigError("V_p and V_n must be > 0")

    @property
    def bus_voltage(self) -> float:
        return self.V_p + self.V_n


@dataclass(frozen=True)
class ControllerState:
    kp: float
    ki: float
    integrator: float = 0.0
    d_mag: float = 0.0
    update_rate: float = 100e3

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0:
            raise ConfigError("controller gains must be >= 0")
        if not 0.0 <= self.d_mag <= 1.0:
            raise ConfigError("d_mag must lie in [0, 1]")
        if not self.update_rate > 0:
            raise ConfigError("update_rate must be > 0")


@dataclass(frozen=True)
class PlantState:
    v_out: float
    i_out: float
    tau_p: float
    joule_heat: float = 0.0

    def __post_init__(self):
        if not self.tau_p > 0:
            raise ConfigError("tau_p must be > 0")


def steady_state_current(v_out: float, op: OperatingPoint) -> float:
    return (v_out - op.V_bat) / op.R_bat


def initial_plant(op: OperatingPoint, tau_p: float, v_out: float | None = None) -> PlantState:
    v = op.V_out_ref if v_out is None else v_out
    return PlantState(v_out=v, i_out=steady_state_current(v, op), tau_p=tau_p)


def steady_controller(kp: float, ki: float, update_rate: float, op: OperatingPoint) -> ControllerState:
    """Controller preloaded so that ``v_out = V_out_ref`` is an equilibrium."""
    d = min(max(op.V_out_ref / op.bus_voltage, 0.0), 1.0)
    integrator = d / ki if ki > 0 else 0.0
    return ControllerState(kp=kp, ki=ki, integrator=integrator, d_mag=d, update_rate=update_rate)


def controller_step(state: ControllerState, v_sense: float, op: OperatingPoint, dt: float) -> ControllerState:
    """One PI update with conditional-integration anti-windup.

    The integrator is frozen whenever the new error term would push an
    already saturated command further out of [0, 1].
    """
    e = op.V_out_ref - v_sense
    integrator = state.integrator + e * dt
    u = state.kp * e + state.ki * integrator
    if (u > 1.0 and e > 0) or (u < 0.0 and e < 0):
        integrator = state.integrator
        u = state.kp * e + state.ki * integrator
    d_mag = min(max(u, 0.0), 1.0)
    return replace(state, integrator=integrator, d_mag=d_mag)


def plant_step(state: PlantState, d_mag: float, op: OperatingPoint, dt: float) -> PlantState:
    """Advance the output filter one forward-Euler step.

    Heat is accumulated with the trapezoidal rule on ``i_out^2 R_bat``.
    """
    if not dt > 0 or dt > state.tau_p / 10.0 * (1 + 1e-12):
        raise ConfigError(f"step {dt!r} s must be in (0, tau_p/10] = (0, {state.tau_p / 10}]")
    v_cmd = d_mag * op.bus_voltage
    v_out = state.v_out + dt / state.tau_p * (v_cmd - state.v_out)
    i_out = steady_state_current(v_out, op)
    heat = state.joule_heat + 0.5 * (state.i_out**2 + i_out**2) * op.R_bat * dt
    return PlantState(v_out=v_out, i_out=i_out, tau_p=state.tau_p, joule_heat=heat)


def pole_zero_gains(op: OperatingPoint, tau_p: float, tau_closed: float) -> tuple[float, float]:
    """PI gains that cancel the filter pole and give a first-order closed loop.

    With ``ki / kp = 1 / tau_p`` the loop gain is ``bus * kp / (tau_p s)`` and
    the closed loop settles with time constant ``tau_closed``.
    """
    if not (tau_p > 0 and tau_closed > 0):
        raise ConfigError("time constants must be > 0")
    kp = tau_p / (op.bus_voltage * tau_closed)
    return kp, kp / tau_p


def is_finite_state(plant: PlantState) -> bool:
    return math.isfinite(plant.v_out) and math.isfinite(plant.joule_heat)

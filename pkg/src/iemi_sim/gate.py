"""Gate-driver actuation under induced interference, and bridge-leg shoot-through.

A driver switches its output to ``V_on`` when its input exceeds ``V_th``. An
induced voltage added to a logic-low input can therefore turn a switch on
that the controller holds off. If the complementary switch of the same leg is
on at that moment the leg shorts the bus.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, replace

import numpy as np

from .coupling import CouplingChannel, mutual_coupling_coefficient, resonance_gain
from .errors import ConfigError, NoThresholdError, TopologyError

INSTANTANEOUS = "instantaneous"
ENVELOPE = "envelope"


@dataclass(frozen=True)
class GateDriverConfig:
    V_th: float = 2.0
    V_on: float = 18.0
    V_off: float = -3.0
    logic_level: float = 3.3
    response_mode: str = ENVELOPE
    min_dwell: float = 0.0

    def __post_init__(self):
        if not self.V_on > self.V_off:
            raise ConfigError("V_on must exceed V_off")
        if not 0 < self.V_th < self.logic_level:
            raise ConfigError("V_th must lie strictly between 0 and logic_level")
        if self.response_mode not in (INSTANTANEOUS, ENVELOPE):
            raise ConfigError(f"response_mode must be {INSTANTANEOUS!r} or {ENVELOPE!r}")
        if not self.min_dwell >= 0:
            raise ConfigError("min_dwell must be >= 0")

    def input_voltage(self, commanded_on: bool) -> float:
        return self.logic_level if commanded_on else 0.0


@dataclass(frozen=True)
class SwitchState:
    id: str
    commanded: bool = False
    actual: bool = False
    gate_voltage: float = -3.0
    since: float = -math.inf  # time of the last output transition


def initial_switch(cfg: GateDriverConfig, switch_id: str, commanded: bool = False) -> SwitchState:
    return SwitchState(
        id=switch_id,
        commanded=commanded,
        actual=commanded,
        gate_voltage=cfg.V_on if commanded else cfg.V_off,
    )


@dataclass(frozen=True)
class BridgeTopology:
    """Complementary switch pairs, one pair per bridge leg."""

    legs: tuple[tuple[str, str], ...]
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "legs", tuple(tuple(leg) for leg in self.legs))
        seen = set()
        for leg in self.legs:
            if len(leg) != 2 or leg[0] == leg[1]:
                raise ConfigError(f"leg {leg!r} must name two distinct switches")
            for sid in leg:
                if sid in seen:
                    raise ConfigError(f"switch {sid!r} belongs to more than one leg")
                seen.add(sid)

    @property
    def count(self) -> int:
        return 2 * len(self.legs)

    @property
    def switch_ids(self) -> list[str]:
        return [sid for leg in self.legs for sid in leg]

    def leg_of(self, switch_id: str) -> int:
        for i, leg in enumerate(self.legs):
            if switch_id in leg:
                return i
        raise TopologyError(f"unknown switch id {switch_id!r}")

    def partner(self, switch_id: str) -> str:
        a, b = self.legs[self.leg_of(switch_id)]
        return b if switch_id == a else a


def bridge(n_legs: int, name: str) -> BridgeTopology:
    return BridgeTopology(
        legs=tuple((f"S{2 * i + 1}", f"S{2 * i + 2}") for i in range(n_legs)),
        name=name,
    )


def three_level_afb() -> BridgeTopology:
    """8 switches, 4 legs."""
    return bridge(4, "3LAFB")


def unfolder() -> BridgeTopology:
    """12 switches, 6 legs."""
    return bridge(6, "unfolder")


TOPOLOGIES = {"3LAFB": three_level_afb, "unfolder": unfolder}


def gate_response(
    cfg: GateDriverConfig,
    state: SwitchState,
    commanded_on: bool,
    t: float,
    v_i: float = 0.0,
    envelope: float | None = None,
) -> SwitchState:
    """Driver output after applying ``commanded_on`` plus the induced voltage at ``t``.

    Instantaneous mode compares ``V_IN + v_i`` against ``V_th``. Envelope mode
    uses the positive envelope of the interference instead (``envelope``, or
    ``max(v_i, 0)`` if not given), which models input-stage rectification of a
    carrier far faster than the driver can follow.
    """
    v_in = cfg.input_voltage(commanded_on)
    if cfg.response_mode == ENVELOPE:
        disturbance = max(v_i, 0.0) if envelope is None else envelope
    else:
        disturbance = v_i
    want_on = v_in + disturbance > cfg.V_th
    actual, since = state.actual, state.since
    if want_on != actual and t - since >= cfg.min_dwell:
        actual, since = want_on, t
    return replace(
        state,
        commanded=commanded_on,
        actual=actual,
        since=since,
        gate_voltage=cfg.V_on if actual else cfg.V_off,
    )


def gate_trace(cfg: GateDriverConfig, commanded_on: bool, v_i: Sequence[float], t: Sequence[float]) -> np.ndarray:
    """Driver on/off state along a sampled induced waveform."""
    state = initial_switch(cfg, "trace", commanded_on)
    out = np.empty(len(t), dtype=bool)
    for k, (tk, vk) in enumerate(zip(t, v_i)):
        state = gate_response(cfg, state, commanded_on, tk, v_i=vk)
        out[k] = state.actual
    return out


def false_turnon_threshold(cfg: GateDriverConfig, channel: CouplingChannel, f: float) -> float:
    """Smallest peak attacker current that lifts a logic-low input past ``V_th``."""
    volts_per_amp = mutual_coupling_coefficient(channel.geometry) * resonance_gain(channel, f) * 2.0 * math.pi * f
    if not volts_per_amp > 0:
        raise NoThresholdError("coupling is zero; no attack current reaches the threshold")
    return cfg.V_th / volts_per_amp


def threshold_power(
    cfg: GateDriverConfig, channel: CouplingChannel, f: float, source_resistance: float = 50.0
) -> float:
    """Forward power matching :func:`false_turnon_threshold`."""
    i_a = false_turnon_threshold(cfg, channel, f)
    return 0.5 * i_a * i_a * source_resistance


@dataclass(frozen=True)
class ShootThroughEvent:
    t: float
    leg: int
    switches: tuple[str, str]


def detect_shoot_through(
    topology: BridgeTopology, states: Mapping[str, SwitchState], t: float = 0.0
) -> list[ShootThroughEvent]:
    """One event for every leg whose two switches both conduct."""
    known = set(topology.switch_ids)
    unknown = [sid for sid in states if sid not in known]
    if unknown:
        raise TopologyError(f"unknown switch id(s) {unknown!r}")
    missing = known.difference(states)
    if missing:
        raise TopologyError(f"no state for switch(es) {sorted(missing)!r}")
    return [
        ShootThroughEvent(t=t, leg=i, switches=(a, b))
        for i, (a, b) in enumerate(topology.legs)
        if states[a].actual and states[b].actual
    ]

"""Scenario files: YAML with explicit unit suffixes.

Quantities may be bare numbers (taken as SI) or strings such as ``"10 ms"``,
``"72 MHz"``, ``"4 cm"``, ``"200 mW"`` or ``"0.5 ohm"``. Loading validates
every field and reports all violations together, each tagged with its dotted
path (``operating_point.R_bat``, ``attacks.0.window``, ...).

The accepted keys are listed in the README.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

import yaml

from .adc import AdcConfig
from .coupling import MU_0, AttackSource, CouplingChannel, RadiatorGeometry
from .engine import (
    CURRENT_SENSOR,
    GATE_SIGNAL,
    AttackSpec,
    ControllerConfig,
    GateSetup,
    PlantConfig,
    Scenario,
)
from .errors import ConfigError, ScenarioValidationError
from .gate import TOPOLOGIES, BridgeTopology, GateDriverConfig
from .plant import OperatingPoint, pole_zero_gains
from .units import parse_quantity

_OFFSET_DIMENSION = {"voltage_sensor": "voltage", CURRENT_SENSOR: "current", GATE_SIGNAL: "voltage"}


class _Reader:
    """Pulls typed fields out of nested mappings while collecting errors."""

    def __init__(self):
        self.errors: list[tuple[str, str]] = []

    def fail(self, path, msg):
        self.errors.append((path, msg))

    def section(self, data, key, path, required=True):
        p = f"{path}.{key}" if path else key
        if key not in data or data[key] is None:
            if required:
                self.fail(p, "missing section")
            return None
        value = data[key]
        if not isinstance(value, dict):
            self.fail(p, "must be a mapping")
            return None
        return value

    def unknown(self, data, allowed, path):
        for key in data:
            if key not in allowed:
                self.fail(f"{path}.{key}" if path else str(key), "unknown key")

    def quantity(self, data, key, dimension, path, default=None, required=False, check=None, msg=""):
        p = f"{path}.{key}" if path else key
        if key not in data or data[key] is None:
            if required:
                self.fail(p, "missing required value")
            return default
        try:
            value = parse_quantity(data[key], dimension)
        except ValueError as exc:
            self.fail(p, str(exc))
            return default
        if check is not None and not check(value):
            self.fail(p, msg or "value out of range")
            return default
        return value

    def integer(self, data, key, path, default=None, check=None, msg=""):
        p = f"{path}.{key}" if path else key
        value = data.get(key, default)
        if value is default:
            return default
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(p, "must be an integer")
            return default
        if check is not None and not check(value):
            self.fail(p, msg or "value out of range")
            return default
        return value

    def choice(self, data, key, options, path, default=None, required=False):
        p = f"{path}.{key}" if path else key
        if key not in data:
            if required:
                self.fail(p, "missing required value")
            return default
        value = data[key]
        if value not in options:
            self.fail(p, f"must be one of {', '.join(map(str, options))}")
            return default
        return value

    def build(self, cls, path, **kwargs):
        """Construct a validated dataclass, turning its invariant errors into path errors."""
        if any(v is _MISSING for v in kwargs.values()):
            return None
        try:
            return cls(**kwargs)
        except ScenarioValidationError as exc:
            self.errors.extend(exc.errors)
        except (ConfigError, TypeError) as exc:
            self.fail(path, str(exc))
        return None


_MISSING = object()


def _req(value):
    return _MISSING if value is None else value


def _positive(x):
    return x > 0


def _operating_point(r: _Reader, data):
    d = r.section(data, "operating_point", "")
    if d is None:
        return None
    p = "operating_point"
    r.unknown(d, {"V_bat", "R_bat", "V_out_ref", "phi_grid", "V_p", "V_n"}, p)
    defaults = OperatingPoint()
    kw = dict(
        V_bat=r.quantity(d, "V_bat", "voltage", p, defaults.V_bat),
        R_bat=r.quantity(d, "R_bat", "resistance", p, defaults.R_bat, check=_positive, msg="must be > 0"),
        V_out_ref=r.quantity(d, "V_out_ref", "voltage", p, defaults.V_out_ref),
        phi_grid=r.quantity(d, "phi_grid", "angle", p, defaults.phi_grid),
        V_p=r.quantity(d, "V_p", "voltage", p, defaults.V_p, check=_positive, msg="must be > 0"),
        V_n=r.quantity(d, "V_n", "voltage", p, defaults.V_n, check=_positive, msg="must be > 0"),
    )
    if kw["V_out_ref"] <= kw["V_bat"]:
        r.fail(f"{p}.V_out_ref", "must exceed V_bat (charging)")
        return None
    return r.build(OperatingPoint, p, **kw)


def _plant(r: _Reader, data):
    d = r.section(data, "plant", "")
    if d is None:
        return None
    r.unknown(d, {"tau_p", "initial_v_out"}, "plant")
    return r.build(
        PlantConfig,
        "plant",
        tau_p=_req(r.quantity(d, "tau_p", "time", "plant", required=True, check=_positive, msg="must be > 0")),
        initial_v_out=r.quantity(d, "initial_v_out", "voltage", "plant"),
    )


def _controller(r: _Reader, data, op, plant):
    d = r.section(data, "controller", "")
    if d is None:
        return None
    p = "controller"
    r.unknown(d, {"kp", "ki", "closed_loop_time_constant", "update_rate", "closed_loop", "fixed_duty"}, p)
    nonneg = dict(check=lambda x: x >= 0, msg="must be >= 0")
    kp = r.quantity(d, "kp", "dimensionless", p, **nonneg)
    ki = r.quantity(d, "ki", "dimensionless", p, **nonneg)
    tau_cl = r.quantity(d, "closed_loop_time_constant", "time", p, check=_positive, msg="must be > 0")
    if tau_cl is not None:
        if "kp" in d or "ki" in d:
            r.fail(f"{p}.closed_loop_time_constant", "give either kp/ki or closed_loop_time_constant")
        elif op is not None and plant is not None:
            kp, ki = pole_zero_gains(op, plant.tau_p, tau_cl)
    elif kp is None or ki is None:
        r.fail(p, "needs kp and ki, or closed_loop_time_constant")
    closed = d.get("closed_loop", True)
    if not isinstance(closed, bool):
        r.fail(f"{p}.closed_loop", "must be true or false")
        closed = True
    fixed = r.quantity(d, "fixed_duty", "dimensionless", p, check=lambda x: 0 <= x <= 1, msg="must lie in [0, 1]")
    rate = r.quantity(d, "update_rate", "frequency", p, required=True, check=_positive, msg="must be > 0")
    return r.build(
        ControllerConfig, p, kp=_req(kp), ki=_req(ki), update_rate=_req(rate), closed_loop=closed, fixed_duty=fixed
    )


def _adc(r: _Reader, data, key, offset_dimension):
    d = r.section(data, key, "", required=False)
    if d is None:
        return None
    p = key
    r.unknown(
        d,
        {"v_min", "v_max", "bits", "sample_rate", "averaging_window", "sensor_gain", "sensor_offset", "sample_phase"},
        p,
    )
    defaults = AdcConfig()
    return r.build(
        AdcConfig,
        p,
        v_min=r.quantity(d, "v_min", "voltage", p, defaults.v_min),
        v_max=r.quantity(d, "v_max", "voltage", p, defaults.v_max),
        bits=r.integer(d, "bits", p, defaults.bits, check=lambda b: 4 <= b <= 24, msg="must lie in [4, 24]"),
        sample_rate=r.quantity(d, "sample_rate", "frequency", p, defaults.sample_rate, check=_positive,
                               msg="must be > 0"),
        averaging_window=r.integer(d, "averaging_window", p, defaults.averaging_window, check=lambda n: n >= 1,
                                   msg="must be >= 1"),
        sensor_gain=r.quantity(d, "sensor_gain", "dimensionless", p, defaults.sensor_gain, check=lambda g: g != 0,
                               msg="must be non-zero"),
        sensor_offset=r.quantity(d, "sensor_offset", offset_dimension, p, defaults.sensor_offset),
        sample_phase=r.quantity(d, "sample_phase", "dimensionless", p, defaults.sample_phase,
                                check=lambda x: 0 <= x < 1, msg="must lie in [0, 1)"),
    )


def _gate(r: _Reader, data):
    d = r.section(data, "gate", "", required=False)
    if d is None:
        return None
    p = "gate"
    r.unknown(d, {"topology", "legs", "commanded_on", "pwm_frequency", "driver"}, p)
    topology = None
    if "legs" in d:
        if "topology" in d:
            r.fail(f"{p}.legs", "give either topology or legs")
        legs = d["legs"]
        if not isinstance(legs, list) or not all(isinstance(x, list) and len(x) == 2 for x in legs):
            r.fail(f"{p}.legs", "must be a list of [switch, switch] pairs")
        else:
            topology = r.build(BridgeTopology, f"{p}.legs", legs=tuple(tuple(map(str, x)) for x in legs))
    else:
        name = r.choice(d, "topology", sorted(TOPOLOGIES), p, default="3LAFB")
        topology = TOPOLOGIES[name]() if name else None
    dd = d.get("driver") or {}
    if not isinstance(dd, dict):
        r.fail(f"{p}.driver", "must be a mapping")
        dd = {}
    dp = f"{p}.driver"
    r.unknown(dd, {"V_th", "V_on", "V_off", "logic_level", "response_mode", "min_dwell"}, dp)
    defaults = GateDriverConfig()
    driver = r.build(
        GateDriverConfig,
        dp,
        V_th=r.quantity(dd, "V_th", "voltage", dp, defaults.V_th),
        V_on=r.quantity(dd, "V_on", "voltage", dp, defaults.V_on),
        V_off=r.quantity(dd, "V_off", "voltage", dp, defaults.V_off),
        logic_level=r.quantity(dd, "logic_level", "voltage", dp, defaults.logic_level),
        response_mode=r.choice(dd, "response_mode", ("instantaneous", "envelope"), dp, defaults.response_mode),
        min_dwell=r.quantity(dd, "min_dwell", "time", dp, defaults.min_dwell, check=lambda x: x >= 0,
                             msg="must be >= 0"),
    )
    commanded = d.get("commanded_on", [])
    if not isinstance(commanded, list):
        r.fail(f"{p}.commanded_on", "must be a list of switch ids")
        commanded = []
    pwm = r.quantity(d, "pwm_frequency", "frequency", p, check=_positive, msg="must be > 0")
    if topology is None or driver is None:
        return None
    return r.build(
        GateSetup, p, driver=driver, topology=topology, commanded_on=tuple(map(str, commanded)), pwm_frequency=pwm
    )


def _source(r: _Reader, d, path):
    if not isinstance(d, dict):
        r.fail(path, "must be a mapping")
        return None
    r.unknown(d, {"frequency", "amplitude_current", "power", "source_resistance"}, path)
    if ("amplitude_current" in d) == ("power" in d):
        r.fail(path, "exactly one of amplitude_current or power must be set")
        return None
    nonneg = dict(check=lambda x: x >= 0, msg="must be >= 0")
    return r.build(
        AttackSource,
        path,
        frequency=_req(r.quantity(d, "frequency", "frequency", path, required=True, check=_positive,
                                  msg="must be > 0")),
        amplitude_current=r.quantity(d, "amplitude_current", "current", path, **nonneg),
        power=r.quantity(d, "power", "power", path, **nonneg),
        source_resistance=r.quantity(d, "source_resistance", "resistance", path, 50.0, check=_positive,
                                     msg="must be > 0"),
    )


def _channel(r: _Reader, d, path):
    if not isinstance(d, dict):
        r.fail(path, "must be a mapping")
        return None
    r.unknown(d, {"geometry", "resonant_frequency", "quality_factor", "peak_gain"}, path)
    g = d.get("geometry")
    gp = f"{path}.geometry"
    geometry = None
    if not isinstance(g, dict):
        r.fail(gp, "missing or not a mapping")
    else:
        r.unknown(g, {"d_a", "w", "l", "mu"}, gp)
        pos = dict(check=_positive, msg="must be > 0")
        geometry = r.build(
            RadiatorGeometry,
            gp,
            d_a=_req(r.quantity(g, "d_a", "length", gp, required=True, **pos)),
            w=_req(r.quantity(g, "w", "length", gp, required=True, **pos)),
            l=_req(r.quantity(g, "l", "length", gp, required=True, **pos)),
            mu=r.quantity(g, "mu", "permeability", gp, MU_0, **pos),
        )
    pos = dict(check=_positive, msg="must be > 0")
    return r.build(
        CouplingChannel,
        path,
        geometry=_req(geometry),
        resonant_frequency=_req(r.quantity(d, "resonant_frequency", "frequency", path, required=True, **pos)),
        quality_factor=_req(r.quantity(d, "quality_factor", "dimensionless", path, required=True, **pos)),
        peak_gain=r.quantity(d, "peak_gain", "dimensionless", path, 1.0, **pos),
    )


def _attacks(r: _Reader, data):
    items = data.get("attacks") or []
    if not isinstance(items, list):
        r.fail("attacks", "must be a list")
        return ()
    out = []
    for i, a in enumerate(items):
        p = f"attacks.{i}"
        if not isinstance(a, dict):
            r.fail(p, "must be a mapping")
            continue
        r.unknown(a, {"point", "mode", "window", "offset", "source", "channel", "target"}, p)
        point = r.choice(a, "point", tuple(_OFFSET_DIMENSION), p, required=True)
        mode = r.choice(a, "mode", ("offset_injection", "waveform"), p, required=True)
        window = a.get("window")
        t_window = None
        if not (isinstance(window, list) and len(window) == 2):
            r.fail(f"{p}.window", "must be [t_start, t_stop]")
        else:
            try:
                t_window = tuple(parse_quantity(x, "time") for x in window)
            except ValueError as exc:
                r.fail(f"{p}.window", str(exc))
            else:
                if not 0 <= t_window[0] < t_window[1]:
                    r.fail(f"{p}.window", "must satisfy 0 <= t_start < t_stop")
                    t_window = None
        offset = source = channel = None
        if mode == "offset_injection":
            offset = r.quantity(a, "offset", _OFFSET_DIMENSION.get(point, "voltage"), p, required=True)
        elif mode == "waveform":
            if "source" not in a:
                r.fail(f"{p}.source", "waveform attack requires source")
            else:
                source = _source(r, a["source"], f"{p}.source")
            if "channel" not in a:
                r.fail(f"{p}.channel", "waveform attack requires channel")
            else:
                channel = _channel(r, a["channel"], f"{p}.channel")
        target = a.get("target")
        if point == GATE_SIGNAL and target is None:
            r.fail(f"{p}.target", "gate_signal attack requires a target switch id")
        if None in (point, mode, t_window) or (mode == "offset_injection" and offset is None):
            continue
        if mode == "waveform" and (source is None or channel is None):
            continue
        spec = r.build(
            AttackSpec, p, point=point, mode=mode, window=t_window, offset=offset, source=source, channel=channel,
            target=None if target is None else str(target),
        )
        if spec is not None:
            out.append(spec)
    return tuple(out)


TOP_LEVEL_KEYS = {
    "name", "description", "duration", "step", "seed", "random_sample_phase", "settling_guard",
    "operating_point", "controller", "plant", "adc", "current_adc", "gate", "attacks",
}


def parse_scenario(data) -> Scenario:
    """Build a validated :class:`Scenario` from already-parsed YAML data."""
    r = _Reader()
    if not isinstance(data, dict):
        raise ScenarioValidationError([("", "scenario must be a mapping")])
    r.unknown(data, TOP_LEVEL_KEYS, "")
    op = _operating_point(r, data)
    plant = _plant(r, data)
    controller = _controller(r, data, op, plant)
    v_adc = _adc(r, data, "adc", "voltage")
    i_adc = _adc(r, data, "current_adc", "current")
    gate = _gate(r, data)
    attacks = _attacks(r, data)
    pos = dict(check=_positive, msg="must be > 0")
    duration = r.quantity(data, "duration", "time", "", required=True, **pos)
    step = r.quantity(data, "step", "time", "", required=True, **pos)
    guard = r.quantity(data, "settling_guard", "time", "", 0.015, check=lambda x: x >= 0, msg="must be >= 0")
    seed = r.integer(data, "seed", "", 0)
    rsp = data.get("random_sample_phase", False)
    if not isinstance(rsp, bool):
        r.fail("random_sample_phase", "must be true or false")
    name = str(data.get("name", "scenario"))
    scenario = None
    if not r.errors:
        scenario = r.build(
            Scenario, "", operating_point=op, controller=controller, plant=plant, duration=duration, step=step,
            adc=v_adc, current_adc=i_adc, gate=gate, attacks=attacks, seed=seed, random_sample_phase=rsp,
            settling_guard=guard, name=name, description=str(data.get("description", "")),
        )
    if r.errors:
        raise ScenarioValidationError(r.errors)
    return scenario


def load_scenario(path) -> Scenario:
    """Read, unit-normalise and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse scenario {path}: {exc}") from exc
    return parse_scenario(data)


def scenario_to_dict(s: Scenario) -> dict:
    """SI-unit echo of a scenario, loadable again by :func:`parse_scenario`."""

    def clean(obj):
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items() if v is not None}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        if isinstance(obj, float) and not math.isfinite(obj):
            return str(obj)
        return obj

    out = {
        "name": s.name,
        "description": s.description,
        "duration": s.duration,
        "step": s.step,
        "seed": s.seed,
        "random_sample_phase": s.random_sample_phase,
        "settling_guard": s.settling_guard,
        "operating_point": dataclasses.asdict(s.operating_point),
        "controller": dataclasses.asdict(s.controller),
        "plant": dataclasses.asdict(s.plant),
    }
    if s.adc is not None:
        out["adc"] = dataclasses.asdict(s.adc)
    if s.current_adc is not None:
        out["current_adc"] = dataclasses.asdict(s.current_adc)
    if s.gate is not None:
        topo = s.gate.topology
        named = topo.name in TOPOLOGIES and TOPOLOGIES[topo.name]() == topo
        out["gate"] = {
            **({"topology": topo.name} if named else {"legs": [list(leg) for leg in topo.legs]}),
            "commanded_on": list(s.gate.commanded_on),
            "pwm_frequency": s.gate.pwm_frequency,
            "driver": dataclasses.asdict(s.gate.driver),
        }
    attacks = []
    for a in s.attacks:
        d = {"point": a.point, "mode": a.mode, "window": list(a.window), "offset": a.offset, "target": a.target}
        if a.source is not None:
            d["source"] = dataclasses.asdict(a.source)
            d["channel"] = dataclasses.asdict(a.channel)
        attacks.append(d)
    out["attacks"] = attacks
    return clean(out)

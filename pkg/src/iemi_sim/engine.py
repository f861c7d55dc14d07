"""Scenario definition and deterministic fixed-step execution.

One step at ``t_k = k * step`` does, in order: decide which attacks are
active, sense ``v_out`` (through the ADC model if configured) and update the
PI controller when a control period starts, sense ``i_out``, evaluate gate
drivers and shoot-through, record the row, then integrate the plant to
``t_{k+1}``. Attack windows are half-open, ``[t_start, t_stop)``, in units of
whole steps.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import adc as adc_mod
from .adc import AdcConfig
from .coupling import AttackSource, CouplingChannel, induced_amplitude, induced_voltage_waveform
from .errors import ConfigError, RangeError, ScenarioValidationError, SimulationDiverged
from .gate import (
    BridgeTopology,
    GateDriverConfig,
    detect_shoot_through,
    gate_response,
    initial_switch,
    three_level_afb,
)
from .plant import (
    OperatingPoint,
    controller_step,
    initial_plant,
    plant_step,
    steady_controller,
)

VOLTAGE_SENSOR = "voltage_sensor"
CURRENT_SENSOR = "current_sensor"
GATE_SIGNAL = "gate_signal"
ATTACK_POINTS = (VOLTAGE_SENSOR, CURRENT_SENSOR, GATE_SIGNAL)
OFFSET_INJECTION = "offset_injection"
WAVEFORM = "waveform"
ATTACK_MODES = (OFFSET_INJECTION, WAVEFORM)

DEFAULT_SETTLING_GUARD = 0.015
# rows closer than this fraction of a step to a boundary count as on it
_EDGE_TOL = 1e-6


@dataclass(frozen=True)
class AttackSpec:
    point: str
    mode: str
    window: tuple[float, float]
    offset: float | None = None
    source: AttackSource | None = None
    channel: CouplingChannel | None = None
    target: str | None = None  # switch id for gate_signal attacks

    def __post_init__(self):
        object.__setattr__(self, "window", tuple(float(x) for x in self.window))
        if self.point not in ATTACK_POINTS:
            raise ConfigError(f"point must be one of {ATTACK_POINTS}, got {self.point!r}")
        if self.mode not in ATTACK_MODES:
            raise ConfigError(f"mode must be one of {ATTACK_MODES}, got {self.mode!r}")
        t_start, t_stop = self.window
        if not (0 <= t_start < t_stop):
            raise ConfigError(f"window must satisfy 0 <= t_start < t_stop, got {self.window!r}")
        if self.mode == OFFSET_INJECTION and self.offset is None:
            raise ConfigError("offset_injection attack requires offset")
        if self.mode == WAVEFORM and (self.source is None or self.channel is None):
            raise ConfigError("waveform attack requires source and channel")
        if self.point == GATE_SIGNAL and self.target is None:
            raise ConfigError("gate_signal attack requires a target switch id")

    @property
    def t_start(self) -> float:
        return self.window[0]

    @property
    def t_stop(self) -> float:
        return self.window[1]

    def induced_amplitude(self) -> float:
        return induced_amplitude(self.source, self.channel)


@dataclass(frozen=True)
class ControllerConfig:
    kp: float
    ki: float
    update_rate: float
    closed_loop: bool = True
    # duty held constant when closed_loop is false; defaults to the steady value
    fixed_duty: float | None = None

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0:
            raise ConfigError("controller gains must be >= 0")
        if not self.update_rate > 0:
            raise ConfigError("update_rate must be > 0")
        if self.fixed_duty is not None and not 0 <= self.fixed_duty <= 1:
            raise ConfigError("fixed_duty must lie in [0, 1]")


@dataclass(frozen=True)
class PlantConfig:
    tau_p: float
    initial_v_out: float | None = None

    def __post_init__(self):
        if not self.tau_p > 0:
            raise ConfigError("tau_p must be > 0")


@dataclass(frozen=True)
class GateSetup:
    driver: GateDriverConfig = field(default_factory=GateDriverConfig)
    topology: BridgeTopology = field(default_factory=three_level_afb)
    # static command pattern; ignored when pwm_frequency is set
    commanded_on: tuple[str, ...] = ()
    # upper switch of every leg on while frac(t f_pwm) < d_mag, lower complementary
    pwm_frequency: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "commanded_on", tuple(self.commanded_on))
        ids = set(self.topology.switch_ids)
        for sid in self.commanded_on:
            if sid not in ids:
                raise ConfigError(f"commanded_on names unknown switch {sid!r}")
        if self.pwm_frequency is not None and not self.pwm_frequency > 0:
            raise ConfigError("pwm_frequency must be > 0")

    def commands(self, t: float, d_mag: float) -> dict[str, bool]:
        if self.pwm_frequency is None:
            on = set(self.commanded_on)
            return {sid: sid in on for sid in self.topology.switch_ids}
        cycles = t * self.pwm_frequency
        upper = (cycles - math.floor(cycles)) < d_mag
        out = {}
        for a, b in self.topology.legs:
            out[a] = upper
            out[b] = not upper
        return out


@dataclass(frozen=True)
class Scenario:
    operating_point: OperatingPoint
    controller: ControllerConfig
    plant: PlantConfig
    duration: float
    step: float
    adc: AdcConfig | None = None
    current_adc: AdcConfig | None = None
    gate: GateSetup | None = None
    attacks: tuple[AttackSpec, ...] = ()
    seed: int = 0
    random_sample_phase: bool = False
    settling_guard: float = DEFAULT_SETTLING_GUARD
    name: str = "scenario"
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "attacks", tuple(self.attacks))
        problems = self.problems()
        if problems:
            raise ScenarioValidationError(problems)

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.step))

    @property
    def control_divider(self) -> int:
        return max(1, int(round(1.0 / (self.controller.update_rate * self.step))))

    def step_index(self, t: float) -> int:
        """First step whose time is at or after ``t``."""
        return int(math.ceil(t / self.step - _EDGE_TOL))

    def attack_edges(self) -> list[float]:
        return sorted({t for a in self.attacks for t in a.window})

    def problems(self) -> list[tuple[str, str]]:
        """Cross-field consistency checks as ``(field_path, message)`` pairs."""
        out = []
        if not self.step > 0:
            return [("step", "must be > 0")]
        if not self.duration > 0:
            out.append(("duration", "must be > 0"))
        elif abs(self.duration / self.step - self.n_steps) > 1e-6 * max(1, self.n_steps):
            out.append(("duration", "must be a whole number of steps"))
        if self.step > self.plant.tau_p / 10.0 * (1 + 1e-12):
            out.append(("step", f"must be <= plant.tau_p/10 = {self.plant.tau_p / 10!r} s"))
        period = 1.0 / self.controller.update_rate
        ratio = period / self.step
        if ratio < 1 - 1e-9 or abs(ratio - round(ratio)) > 1e-6 * ratio:
            out.append(("controller.update_rate", "control period must be a whole number of steps"))
        for name, cfg in (("adc", self.adc), ("current_adc", self.current_adc)):
            if cfg is not None and cfg.window_duration > period * (1 + 1e-9):
                out.append((f"{name}.averaging_window", "reading window must fit inside one control period"))
        if not self.settling_guard >= 0:
            out.append(("settling_guard", "must be >= 0"))
        for i, a in enumerate(self.attacks):
            path = f"attacks.{i}"
            if a.t_stop > self.duration * (1 + 1e-12):
                out.append((f"{path}.window", "ends after the simulation duration"))
            if a.mode == WAVEFORM and a.point == VOLTAGE_SENSOR and self.adc is None:
                out.append((path, "waveform attack on the voltage sensor needs an adc section"))
            if a.mode == WAVEFORM and a.point == CURRENT_SENSOR and self.current_adc is None:
                out.append((path, "waveform attack on the current sensor needs a current_adc section"))
            if a.point == GATE_SIGNAL:
                if self.gate is None:
                    out.append((path, "gate_signal attack needs a gate section"))
                elif a.target not in self.gate.topology.switch_ids:
                    out.append((f"{path}.target", f"unknown switch id {a.target!r}"))
            for j in range(i):
                b = self.attacks[j]
                same_target = a.point != GATE_SIGNAL or a.target == b.target
                if b.point == a.point and same_target and a.t_start < b.t_stop and b.t_start < a.t_stop:
                    out.append((path, f"overlaps attacks.{j} on the same point"))
        return out


@dataclass(frozen=True)
class Event:
    type: str
    t: float
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"type": self.type, "t": self.t, **self.detail}


@dataclass
class SimResult:
    scenario: Scenario
    series: dict[str, np.ndarray]
    events: list[Event]
    joule_heat: float
    summary: dict = field(default_factory=dict)

    @property
    def time(self) -> np.ndarray:
        return self.series["time_s"]

    def events_of(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.type == kind]


def _sample_phase(cfg: AdcConfig | None, rng: np.random.Generator | None) -> AdcConfig | None:
    if cfg is None or rng is None:
        return cfg
    return dataclasses.replace(cfg, sample_phase=float(rng.uniform(0.0, 1.0)))


def _sense(value: float, cfg: AdcConfig | None, attack: AttackSpec | None, t: float) -> float:
    if cfg is None:
        reading = value
    else:
        V_s = cfg.to_sensor_voltage(value)
        if attack is not None and attack.mode == WAVEFORM:
            r = adc_mod.averaged_reading(V_s, cfg, t, source=attack.source, channel=attack.channel)
        else:
            r = adc_mod.averaged_reading(V_s, cfg, t)
        reading = r.reported_value
    if attack is not None and attack.mode == OFFSET_INJECTION:
        reading += attack.offset
    return reading


def run_scenario(s: Scenario) -> SimResult:
    """Execute ``s`` and return its time series, events and summary."""
    op = s.operating_point
    n = s.n_steps
    dt = s.step
    divider = s.control_divider
    ctrl_dt = divider * dt

    rng = np.random.default_rng(s.seed) if s.random_sample_phase else None
    v_adc = _sample_phase(s.adc, rng)
    i_adc = _sample_phase(s.current_adc, rng)

    plant = initial_plant(op, s.plant.tau_p, s.plant.initial_v_out)
    ctrl = steady_controller(s.controller.kp, s.controller.ki, s.controller.update_rate, op)
    if not s.controller.closed_loop and s.controller.fixed_duty is not None:
        ctrl = dataclasses.replace(ctrl, d_mag=s.controller.fixed_duty)

    bounds = [(s.step_index(a.t_start), s.step_index(a.t_stop)) for a in s.attacks]

    switch_ids = s.gate.topology.switch_ids if s.gate else []
    switches = {}
    if s.gate:
        commands = s.gate.commands(0.0, ctrl.d_mag)
        switches = {sid: initial_switch(s.gate.driver, sid, commands[sid]) for sid in switch_ids}

    t_arr = np.arange(n + 1, dtype=float) * dt
    cols = {
        "v_out_V": np.empty(n + 1),
        "v_sense_V": np.empty(n + 1),
        "i_out_A": np.empty(n + 1),
        "d_mag": np.empty(n + 1),
        "attack_active": np.zeros(n + 1, dtype=np.int64),
        "i_sense_A": np.empty(n + 1),
    }
    vg = {sid: np.empty(n + 1) for sid in switch_ids}

    events: list[Event] = []
    in_short = [False] * (len(s.gate.topology.legs) if s.gate else 0)
    saturated = None
    reverse = False
    v_sense = plant.v_out

    for k in range(n + 1):
        t = t_arr[k]
        active = {}
        for a, (k0, k1) in zip(s.attacks, bounds):
            if k0 <= k < k1:
                active[a.target if a.point == GATE_SIGNAL else a.point] = a

        if k % divider == 0:
            v_sense = _sense(plant.v_out, v_adc, active.get(VOLTAGE_SENSOR), t)
            if s.controller.closed_loop:
                ctrl = controller_step(ctrl, v_sense, op, ctrl_dt)
            if not math.isfinite(v_sense):
                raise SimulationDiverged(k, float(t), "v_sense")
        i_sense = _sense(plant.i_out, i_adc, active.get(CURRENT_SENSOR), t)

        if s.gate:
            commands = s.gate.commands(t, ctrl.d_mag)
            for sid in switch_ids:
                attack = active.get(sid)
                v_i, env = 0.0, 0.0
                if attack is not None:
                    if attack.mode == WAVEFORM:
                        v_i = induced_voltage_waveform(attack.source, attack.channel, t)
                        env = attack.induced_amplitude()
                    else:
                        v_i = env = attack.offset
                switches[sid] = gate_response(s.gate.driver, switches[sid], commands[sid], t, v_i=v_i, envelope=env)
                vg[sid][k] = switches[sid].gate_voltage
            shorted = {e.leg: e for e in detect_shoot_through(s.gate.topology, switches, float(t))}
            for leg in range(len(in_short)):
                if leg in shorted and not in_short[leg]:
                    ev = shorted[leg]
                    events.append(Event("shoot_through", float(t), {"leg": leg, "switches": list(ev.switches)}))
                in_short[leg] = leg in shorted

        cols["v_out_V"][k] = plant.v_out
        cols["v_sense_V"][k] = v_sense
        cols["i_out_A"][k] = plant.i_out
        cols["d_mag"][k] = ctrl.d_mag
        cols["attack_active"][k] = 1 if active else 0
        cols["i_sense_A"][k] = i_sense

        sat = "upper" if ctrl.d_mag >= 1.0 else "lower" if ctrl.d_mag <= 0.0 else None
        if sat is not None and sat != saturated:
            events.append(Event("saturation", float(t), {"level": sat}))
        saturated = sat
        if plant.i_out < 0 and not reverse:
            events.append(Event("reverse_current", float(t), {"i_out_A": plant.i_out}))
        reverse = plant.i_out < 0

        if k < n:
            plant = plant_step(plant, ctrl.d_mag, op, dt)
            for name in ("v_out", "joule_heat"):
                if not math.isfinite(getattr(plant, name)):
                    raise SimulationDiverged(k + 1, float(t_arr[k + 1]), name)

    series = {"time_s": t_arr, **cols}
    for sid in switch_ids:
        series[f"vG_{sid}_V"] = vg[sid]
    result = SimResult(scenario=s, series=series, events=events, joule_heat=plant.joule_heat)
    result.summary = summarize(result)
    return result


# --------------------------------------------------------------------------
# summaries


def default_windows(s: Scenario) -> list[tuple[str, float, float]]:
    """Pre/during/between/post windows split at every attack edge."""
    cuts = sorted({0.0, s.duration, *[min(t, s.duration) for t in s.attack_edges()]})
    out = []
    first = min((a.t_start for a in s.attacks), default=math.inf)
    last = max((a.t_stop for a in s.attacks), default=-math.inf)
    n_during = 0
    for t0, t1 in zip(cuts[:-1], cuts[1:]):
        if any(a.t_start <= t0 and t1 <= a.t_stop for a in s.attacks):
            label = f"attack_{n_during}"
            n_during += 1
        elif t1 <= first:
            label = "pre"
        elif t0 >= last:
            label = "post"
        else:
            label = "between"
        out.append((label, t0, t1))
    return out


def _window_mask(t: np.ndarray, t0: float, t1: float, tol: float) -> np.ndarray:
    mask = (t >= t0 - tol) & (t < t1 - tol)
    if t1 >= t[-1] - tol:
        mask |= np.abs(t - t[-1]) <= tol
    return mask


def summarize_series(
    series: dict[str, np.ndarray],
    windows: list,
    edges: list[float] = (),
    guard: float = DEFAULT_SETTLING_GUARD,
) -> list[dict]:
    """Per-window mean/min/max of every channel.

    ``windows`` holds ``(t0, t1)`` or ``(label, t0, t1)`` entries. Window
    membership is ``[t0, t1)`` (the final sample is included when ``t1`` is
    the end of the series). Means skip samples within ``guard`` seconds after
    any of ``edges``; min and max use the whole window.
    """
    t = np.asarray(series["time_s"], dtype=float)
    step = float(t[1] - t[0]) if len(t) > 1 else 1.0
    tol = _EDGE_TOL * step
    settling = np.zeros(len(t), dtype=bool)
    for edge in edges:
        settling |= (t >= edge - tol) & (t < edge + guard - tol)
    channels = [c for c in series if c != "time_s"]
    out = []
    for w in windows:
        label, t0, t1 = w if len(w) == 3 else (f"{w[0]!r}-{w[1]!r}", *w)
        if t1 <= t0 or t0 < t[0] - tol or t1 > t[-1] + tol:
            raise RangeError(f"window [{t0}, {t1}] outside series range [{t[0]}, {t[-1]}]")
        mask = _window_mask(t, t0, t1, tol)
        if not mask.any():
            raise RangeError(f"window [{t0}, {t1}] contains no samples")
        steady = mask & ~settling
        stats = {}
        for c in channels:
            x = np.asarray(series[c], dtype=float)
            stats[c] = {
                "mean": float(np.mean(x[steady])) if steady.any() else None,
                "min": float(np.min(x[mask])),
                "max": float(np.max(x[mask])),
            }
        out.append(
            {"label": label, "t0": float(t0), "t1": float(t1), "samples": int(mask.sum()),
             "steady_samples": int(steady.sum()), "channels": stats}
        )
    return out


def summarize(r: SimResult, windows: list | None = None, guard: float | None = None) -> dict:
    """Window statistics plus heat and event counts for a finished run."""
    s = r.scenario
    windows = default_windows(s) if windows is None else windows
    guard = s.settling_guard if guard is None else guard
    table = summarize_series(r.series, windows, s.attack_edges(), guard)
    counts = {}
    for e in r.events:
        counts[e.type] = counts.get(e.type, 0) + 1
    return {
        "windows": table,
        "settling_guard_s": guard,
        "joule_heat_J": r.joule_heat,
        "event_counts": counts,
        "attack_effect": attack_effect(table),
    }


def attack_effect(table: list[dict]) -> dict:
    """Steady mean of each attacked window minus the pre-attack steady mean."""
    pre = next((w for w in table if w["label"] == "pre"), None)
    if pre is None:
        return {}
    out = {}
    for w in table:
        if not w["label"].startswith("attack"):
            continue
        deltas = {}
        for c, stats in w["channels"].items():
            base = pre["channels"][c]["mean"]
            if stats["mean"] is not None and base is not None:
                deltas[c] = stats["mean"] - base
        out[w["label"]] = deltas
    return out


def window_mean(r: SimResult, channel: str, t0: float, t1: float, guard: float | None = None) -> float:
    """Steady mean of one channel over ``[t0, t1)``."""
    table = summarize(r, [(t0, t1)], guard)["windows"]
    value = table[0]["channels"][channel]["mean"]
    if value is None:
        raise RangeError(f"settling guard removes every sample in [{t0}, {t1}]")
    return value


# --------------------------------------------------------------------------
# sweeps


def _set_path(obj, parts: list[str], value, full: str):
    head, rest = parts[0], parts[1:]
    if isinstance(obj, tuple):
        try:
            i = int(head)
            child = obj[i]
        except (ValueError, IndexError):
            raise ConfigError(f"unknown parameter path {full!r}") from None
        if not rest:
            raise ConfigError(f"parameter path {full!r} does not address a numeric field")
        return obj[:i] + (_set_path(child, rest, value, full),) + obj[i + 1:]
    if not dataclasses.is_dataclass(obj) or head not in {f.name for f in dataclasses.fields(obj)}:
        raise ConfigError(f"unknown parameter path {full!r}")
    child = getattr(obj, head)
    if rest:
        return dataclasses.replace(obj, **{head: _set_path(child, rest, value, full)})
    numeric = isinstance(child, (int, float)) and not isinstance(child, bool)
    if not numeric and not (child is None and isinstance(obj, AttackSource)):
        raise ConfigError(f"parameter path {full!r} does not address a numeric field")
    changes = {head: type(child)(value) if numeric else float(value)}
    if isinstance(obj, AttackSource) and head in ("power", "amplitude_current"):
        other = "amplitude_current" if head == "power" else "power"
        changes[other] = None
    return dataclasses.replace(obj, **changes)


def set_parameter(s: Scenario, path: str, value) -> Scenario:
    """Copy of ``s`` with the numeric field at dotted ``path`` replaced.

    Tuple elements are addressed by index, e.g. ``attacks.0.source.power``.
    Setting an attack's ``power`` clears its ``amplitude_current`` and vice versa.
    """
    parts = path.split(".")
    if not path or not all(parts):
        raise ConfigError(f"unknown parameter path {path!r}")
    return _set_path(s, parts, value, path)


def _sweep_point(args):
    s, path, value = args
    r = run_scenario(set_parameter(s, path, value))
    summary = dict(r.summary)
    summary["events"] = [e.as_dict() for e in r.events]
    return summary


def run_sweep(s: Scenario, parameter: str, values, jobs: int = 1) -> list[tuple[float, dict]]:
    """One run per value, results sorted by value.

    Every scenario is validated before anything runs, so a bad path fails
    fast. ``jobs > 1`` spreads runs over worker processes; results do not
    depend on the number of workers.
    """
    values = sorted(float(v) for v in values)
    for v in values:
        set_parameter(s, parameter, v)
    tasks = [(s, parameter, v) for v in values]
    if jobs > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            summaries = list(pool.map(_sweep_point, tasks))
    else:
        summaries = [_sweep_point(t) for t in tasks]
    return list(zip(values, summaries))

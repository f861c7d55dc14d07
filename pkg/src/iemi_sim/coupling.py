"""Near-field magnetic coupling from an attacker radiator into a victim loop.

The radiator is idealised as an infinitely long straight current at distance
``d_a`` from a rectangular victim loop of width ``w`` (parallel to the
current) and length ``l`` (radially away from it). The flux linked by the
loop is ``mu * w / (2 pi) * ln((d_a + l) / d_a) * i_a``, so the induced
voltage is that coefficient times ``-di_a/dt``.

Real radiators (toroids, loop antennas) and cable resonances are folded into
a calibrated second-order bandpass gain on top of the geometric coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DomainError

MU_0 = 4e-7 * math.pi
DEFAULT_SOURCE_RESISTANCE = 50.0


@dataclass(frozen=True)
class RadiatorGeometry:
    """Radiator-to-loop placement, all in SI units."""

    d_a: float
    w: float
    l: float
    mu: float = MU_0

    def __post_init__(self):
        for name in ("mu", "d_a", "w", "l"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be finite and > 0, got {value!r}")

    @property
    def area(self) -> float:
        return self.w * self.l


@dataclass(frozen=True)
class AttackSource:
    """Sinusoidal attacker current, given either as peak current or as forward power.

    With ``power`` set, the peak current is ``sqrt(2 P / R)`` through
    ``source_resistance``.
    """

    frequency: float
    amplitude_current: float | None = None
    power: float | None = None
    source_resistance: float = DEFAULT_SOURCE_RESISTANCE

    def __post_init__(self):
        if (self.amplitude_current is None) == (self.power is None):
            raise ConfigError("exactly one of amplitude_current or power must be set")
        if not (math.isfinite(self.frequency) and self.frequency > 0):
            raise ConfigError(f"frequency must be > 0, got {self.frequency!r}")
        if self.power is not None and not self.power >= 0:
            raise ConfigError(f"power must be >= 0, got {self.power!r}")
        if self.amplitude_current is not None and not self.amplitude_current >= 0:
            raise ConfigError(f"amplitude_current must be >= 0, got {self.amplitude_current!r}")
        if not self.source_resistance > 0:
            raise ConfigError("source_resistance must be > 0")


@dataclass(frozen=True)
class CouplingChannel:
    geometry: RadiatorGeometry
    resonant_frequency: float
    quality_factor: float
    peak_gain: float = 1.0

    def __post_init__(self):
        for name in ("resonant_frequency", "quality_factor", "peak_gain"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be finite and > 0, got {value!r}")


def mutual_coupling_coefficient(geometry: RadiatorGeometry) -> float:
    """Flux linked per ampere of radiator current, in henry."""
    g = geometry.mu * geometry.w / (2.0 * math.pi) * math.log1p(geometry.l / geometry.d_a)
    if not math.isfinite(g):
        raise DomainError(f"coupling coefficient is not finite for {geometry!r}")
    return g


def resonance_gain(channel: CouplingChannel, f):
    """Bandpass magnitude ``peak / sqrt(1 + Q^2 (f/f0 - f0/f)^2)``.

    Accepts a scalar or an array of frequencies.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ConfigError("frequency must be > 0")
    ratio = f / channel.resonant_frequency
    detune = channel.quality_factor * (ratio - 1.0 / ratio)
    gain = channel.peak_gain / np.sqrt(1.0 + detune * detune)
    return float(gain) if gain.ndim == 0 else gain


def amplitude_from_power(source: AttackSource) -> float:
    """Peak attacker current in amperes."""
    if source.amplitude_current is not None:
        return source.amplitude_current
    if source.power is None:
        raise ConfigError("attack source has neither amplitude_current nor power")
    return math.sqrt(2.0 * source.power / source.source_resistance)


def with_power(source: AttackSource, power: float) -> AttackSource:
    """Copy of ``source`` driven at ``power`` watts."""
    return replace(source, power=power, amplitude_current=None)


def induced_amplitude(source: AttackSource, channel: CouplingChannel) -> float:
    """Peak induced voltage ``G * eta(f) * 2 pi f * I_a``."""
    g = mutual_coupling_coefficient(channel.geometry)
    eta = resonance_gain(channel, source.frequency)
    return g * eta * 2.0 * math.pi * source.frequency * amplitude_from_power(source)


def induced_voltage_waveform(source: AttackSource, channel: CouplingChannel, t):
    """Induced loop voltage at time(s) ``t``.

    For ``i_a = I_a sin(2 pi f t)`` this is ``-V_i cos(2 pi f t)``.
    """
    v = -induced_amplitude(source, channel) * np.cos(2.0 * math.pi * carrier_phase(source.frequency, t))
    return float(v) if v.ndim == 0 else v


def carrier_phase(f: float, t):
    """Fractional carrier cycle ``frac(f t)``; avoids huge cos() arguments for long runs."""
    cycles = f * np.asarray(t, dtype=float)
    return cycles - np.floor(cycles)

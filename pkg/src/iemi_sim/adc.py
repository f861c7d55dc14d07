"""Victim ADC front end: ESD clipping, sampling, quantization and averaging.

An RF sinusoid riding on a slow sensor voltage is zero-mean, so an ideal
averaging ADC would reject it. The protection diodes clamp the input to the
rails, however, and the clamped waveform is no longer zero-mean: the average
of the digitised samples moves towards the rail that does *not* clip. That
rectified offset is the reading manipulation.

Reported values are ``sensor_offset + sensor_gain * mean_voltage``. A negative
``sensor_gain`` models an inverting front end, for which a positive clipping
offset lowers the apparent physical reading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .coupling import AttackSource, CouplingChannel, carrier_phase, induced_amplitude
from .errors import ConfigError, RangeError


@dataclass(frozen=True)
class AdcConfig:
    v_min: float = 0.0
    v_max: float = 3.3
    bits: int = 12
    sample_rate: float = 10e6
    averaging_window: int = 100
    sensor_gain: float = 1.0
    sensor_offset: float = 0.0
    # sampling instant offset as a fraction of one sample period
    sample_phase: float = 0.0

    def __post_init__(self):
        if not self.v_max > self.v_min:
            raise ConfigError("v_max must exceed v_min")
        if not (isinstance(self.bits, int) and 4 <= self.bits <= 24):
            raise ConfigError(f"bits must be an integer in [4, 24], got {self.bits!r}")
        if not self.sample_rate > 0:
            raise ConfigError("sample_rate must be > 0")
        if not (isinstance(self.averaging_window, int) and self.averaging_window >= 1):
            raise ConfigError("averaging_window must be an integer >= 1")
        if self.sensor_gain == 0 or not math.isfinite(self.sensor_gain):
            raise ConfigError("sensor_gain must be finite and non-zero")
        if not 0.0 <= self.sample_phase < 1.0:
            raise ConfigError("sample_phase must lie in [0, 1)")

    @property
    def full_scale_code(self) -> int:
        return (1 << self.bits) - 1

    @property
    def lsb(self) -> float:
        return (self.v_max - self.v_min) / self.full_scale_code

    @property
    def window_duration(self) -> float:
        return self.averaging_window / self.sample_rate

    def to_sensor_voltage(self, physical: float) -> float:
        """Front-end output voltage for a physical quantity."""
        return (physical - self.sensor_offset) / self.sensor_gain

    def to_physical(self, voltage):
        return self.sensor_offset + self.sensor_gain * voltage


@dataclass(frozen=True)
class AdcReading:
    mean_voltage: float
    mean_code: float
    reported_value: float


def compromised_input(V_s, v_i):
    """ADC pin voltage: slow sensor output plus induced RF."""
    return V_s + v_i


def clip(v, cfg: AdcConfig):
    """Clamp to the ADC rails, as the ESD diodes do."""
    if np.ndim(v) == 0:
        return min(max(float(v), cfg.v_min), cfg.v_max)
    return np.clip(v, cfg.v_min, cfg.v_max)


def quantize(v, cfg: AdcConfig):
    """Ideal mid-tread transfer function; ``v`` must already be within the rails."""
    x = (np.asarray(v, dtype=float) - cfg.v_min) / (cfg.v_max - cfg.v_min) * cfg.full_scale_code
    code = np.floor(x + 0.5).astype(np.int64)
    return int(code) if code.ndim == 0 else code


def code_to_voltage(code, cfg: AdcConfig):
    return cfg.v_min + np.asarray(code, dtype=float) * cfg.lsb


def sample_times(cfg: AdcConfig, window_start: float) -> np.ndarray:
    n = np.arange(cfg.averaging_window, dtype=float)
    return window_start + (n + cfg.sample_phase) / cfg.sample_rate


def averaged_reading(
    V_s: float,
    cfg: AdcConfig,
    window_start: float = 0.0,
    source: AttackSource | None = None,
    channel: CouplingChannel | None = None,
    t_end: float | None = None,
) -> AdcReading:
    """Sample, clip, quantize and average one reading window.

    ``source`` and ``channel`` describe the attack; leave both ``None`` for a
    clean reading. When ``t_end`` is given the window must finish by then.
    """
    if (source is None) != (channel is None):
        raise ConfigError("source and channel must be given together")
    if t_end is not None and window_start + cfg.window_duration > t_end:
        raise RangeError(
            f"averaging window [{window_start}, {window_start + cfg.window_duration}] s "
            f"extends past the end of the simulation ({t_end} s)"
        )
    if source is None:
        code = quantize(clip(V_s, cfg), cfg)
        mean_code = float(code)
    else:
        t = sample_times(cfg, window_start)
        amplitude = induced_amplitude(source, channel)
        v_i = -amplitude * np.cos(2.0 * math.pi * carrier_phase(source.frequency, t))
        codes = quantize(clip(compromised_input(V_s, v_i), cfg), cfg)
        mean_code = float(np.mean(codes))
    mean_voltage = float(code_to_voltage(mean_code, cfg))
    return AdcReading(mean_voltage, mean_code, float(cfg.to_physical(mean_voltage)))


def averaged_reading_from_amplitude(
    V_s: float, V_i: float, f: float, cfg: AdcConfig, window_start: float = 0.0
) -> AdcReading:
    """Same as :func:`averaged_reading` for a bare induced sinusoid ``V_i sin(2 pi f t)``."""
    t = sample_times(cfg, window_start)
    v_i = V_i * np.sin(2.0 * math.pi * carrier_phase(f, t))
    codes = quantize(clip(compromised_input(V_s, v_i), cfg), cfg)
    mean_code = float(np.mean(codes))
    mean_voltage = float(code_to_voltage(mean_code, cfg))
    return AdcReading(mean_voltage, mean_code, float(cfg.to_physical(mean_voltage)))


def expected_clipped_mean(V_s: float, V_i: float, cfg: AdcConfig) -> float:
    """Period average of ``clamp(V_s + V_i sin(theta))``, by adaptive quadrature.

    Breakpoints are placed where the sinusoid crosses a rail so each piece is
    smooth; absolute tolerance is 1e-9 V.
    """
    if V_i < 0:
        raise ConfigError("V_i must be >= 0")
    if V_i == 0:
        return float(clip(V_s, cfg))

    def clamped(theta):
        return min(max(V_s + V_i * math.sin(theta), cfg.v_min), cfg.v_max)

    points = []
    for rail in (cfg.v_min, cfg.v_max):
        s = (rail - V_s) / V_i
        if -1.0 < s < 1.0:
            a = math.asin(s)
            points.extend([a % (2 * math.pi), (math.pi - a) % (2 * math.pi)])
    points = sorted(set(points))
    edges = [0.0, *[p for p in points if 0.0 < p < 2 * math.pi], 2 * math.pi]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, _ = integrate.quad(clamped, lo, hi, epsabs=1e-11, epsrel=1e-12, limit=200)
        total += value
    return total / (2 * math.pi)

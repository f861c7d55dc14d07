"""Deterministic simulation of IEMI attacks on EV charger converter control loops."""

from .adc import AdcConfig, AdcReading, averaged_reading, clip, compromised_input, expected_clipped_mean, quantize
from .coupling import (
    AttackSource,
    CouplingChannel,
    RadiatorGeometry,
    amplitude_from_power,
    induced_voltage_waveform,
    mutual_coupling_coefficient,
    resonance_gain,
)
from .engine import AttackSpec, Scenario, SimResult, run_scenario, run_sweep, summarize
from .errors import ConfigError, IemiError, SimulationDiverged
from .gate import BridgeTopology, GateDriverConfig, detect_shoot_through, false_turnon_threshold, gate_response
from .plant import OperatingPoint, controller_step, plant_step, steady_state_current
from .scenario import load_scenario

__version__ = "0.1.0"

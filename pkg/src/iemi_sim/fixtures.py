"""Shipped scenario files reproducing the published attacks."""

from importlib import resources
from pathlib import Path

from .errors import ConfigError

FIXTURES = {
    "CV-1": ("cv1.yaml", "constant-voltage loop, -1 V sensed-voltage offset (4 A -> 6 A)"),
    "CV-W": ("cv_waveform.yaml", "CV-1 through ADC clipping of a 400 MHz carrier"),
    "SENS-V": ("sens_v.yaml", "open-loop voltage reading under a resonant 200 mW carrier"),
    "BMS-I": ("bms_i.yaml", "current reading offset 1.05 A -> 1.36 A for 10 s"),
    "GD-1": ("gd1.yaml", "20 W / 72 MHz false turn-on through a 4 cm2 loop, shoot-through"),
    "GD-1-twisted": ("gd1_twisted.yaml", "GD-1 with a 0.1 cm2 intertwined-cable loop, no turn-on"),
}


def fixture_path(name: str) -> Path:
    try:
        filename, _ = FIXTURES[name]
    except KeyError:
        raise ConfigError(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}") from None
    return Path(str(resources.files(__package__).joinpath("fixtures", filename)))


def load_fixture(name: str):
    from .scenario import load_scenario

    return load_scenario(fixture_path(name))

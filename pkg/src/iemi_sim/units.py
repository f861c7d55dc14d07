"""Parsing of quantities written with explicit unit suffixes.

Scenario files accept either a bare number (already SI) or a string such as
``"10 ms"``, ``"72 MHz"``, ``"4 cm"`` or ``"200 mW"``. Every field declares a
dimension and only suffixes of that dimension are accepted.
"""

import math
import re
from decimal import Decimal

# dimension -> {suffix: decimal exponent to SI}
UNITS = {
    "voltage": {"V": 0, "mV": -3, "kV": 3, "uV": -6},
    "current": {"A": 0, "mA": -3, "uA": -6},
    "time": {"s": 0, "ms": -3, "us": -6, "µs": -6, "ns": -9},
    "frequency": {"Hz": 0, "kHz": 3, "MHz": 6, "GHz": 9},
    "length": {"m": 0, "cm": -2, "mm": -3},
    "area": {"m2": 0, "cm2": -4, "mm2": -6},
    "power": {"W": 0, "mW": -3, "kW": 3},
    "resistance": {"ohm": 0, "Ohm": 0, "Ω": 0, "mohm": -3, "mOhm": -3, "mΩ": -3},
    "angle": {"deg": 0},
    "permeability": {"H/m": 0},
    "dimensionless": {},
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)\s*$")


def parse_quantity(value, dimension):
    """Return ``value`` converted to SI for ``dimension``.

    Raises ``ValueError`` with a human readable message on bad input.
    """
    if isinstance(value, bool):
        raise ValueError(f"expected a {dimension} quantity, got a boolean")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        m = _QUANTITY.match(value)
        if not m:
            raise ValueError(f"cannot parse {value!r} as a {dimension} quantity")
        number, suffix = m.groups()
        scales = UNITS[dimension]
        if suffix == "":
            exponent = 0
        elif suffix in scales:
            exponent = scales[suffix]
        else:
            allowed = ", ".join(scales) or "none"
            raise ValueError(f"unit {suffix!r} is not a {dimension} unit (allowed: {allowed})")
        # decimal scaling keeps "10 ms" == 0.01 exactly
        out = float(Decimal(number).scaleb(exponent))
    else:
        raise ValueError(f"expected a {dimension} quantity, got {type(value).__name__}")
    if not math.isfinite(out):
        raise ValueError(f"{value!r} is not finite")
    return out

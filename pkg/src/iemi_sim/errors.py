"""Exception hierarchy shared by all simulator modules."""


class IemiError(Exception):
    """Base class for every error raised by the simulator."""


class ConfigError(IemiError, ValueError):
    """A configuration value is missing, inconsistent or out of range."""


class DomainError(IemiError, ArithmeticError):
    """A computation left its numeric domain (overflow, NaN, ...)."""


class RangeError(IemiError, ValueError):
    """A requested time window falls outside the available data."""


class TopologyError(IemiError, KeyError):
    """A switch id does not belong to the bridge topology."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class NoThresholdError(IemiError, ValueError):
    """The coupling is zero, so no attack current can reach the threshold."""


class ScenarioValidationError(ConfigError):
    """Scenario file failed validation.

    ``errors`` holds ``(field_path, message)`` tuples, one per violation.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = [f"{path}: {msg}" for path, msg in self.errors]
        super().__init__("invalid scenario:\n  " + "\n  ".join(lines))


class SimulationDiverged(IemiError, RuntimeError):
    """Integration produced a non-finite state."""

    def __init__(self, step, t, field):
        self.step = step
        self.t = t
        self.field = field
        super().__init__(f"simulation diverged at step {step} (t={t!r} s): {field} is not finite")

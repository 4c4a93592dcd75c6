"""
Errors Module for rf-SQUID Escape Simulator
Exception types raised by the physics modules and caught by the sweep/CLI layer.
"""

from typing import Optional


class SimulatorError(Exception):
    """Base class for all simulator failures."""


class ParameterDomainError(SimulatorError):
    """A device parameter is outside its physical domain."""


class BistabilityLostError(SimulatorError):
    """The potential has no double well at this bias."""

    def __init__(self, phi_x: float, beta_L: float, message: str = ""):
        self.phi_x = phi_x
        self.beta_L = beta_L
        super().__init__(message or f"no double well at phi_x={phi_x:.6g} (beta_L={beta_L:.6g})")


class EnergyDomainError(SimulatorError):
    """Energy outside the range an operation accepts."""


class DegenerateTurningPointError(EnergyDomainError):
    """Energy coincides with the barrier top; inner turning points merge."""


class NotEnoughLevelsError(SimulatorError):
    """Fewer than two quantization roots in the requested window."""


class EmptyWellError(SimulatorError):
    """No single-well level below the requested ceiling."""


class NoCrossingError(SimulatorError):
    """The crossing-point conditions have no root in the search bracket."""


class ResonanceMismatchError(SimulatorError):
    """A rate was requested for a non-resonant energy pair."""


class DegenerateKineticsError(SimulatorError):
    """Kinetic denominators vanish; the steady state is undefined."""


class OracleConvergenceError(SimulatorError):
    """Grid eigenvalues did not converge under grid doubling."""


class ConfigError(SimulatorError):
    """Sweep configuration could not be parsed or validated."""

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        self.line = line
        self.key = key
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")

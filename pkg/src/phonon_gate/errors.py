"""Exception hierarchy shared by every module."""


class PhononGateError(Exception):
    """Base class for all errors raised by this package."""


class PhysicsError(PhononGateError):
    """Parameters outside the physical validity of the model."""


class InvalidDimensionError(PhysicsError, ValueError):
    pass


class TrapDestabilizedError(PhysicsError):
    """The Rydberg-induced curvature exceeds the trap curvature (shifted frequency squared <= 0)."""


class ExpansionInvalidError(PhysicsError):
    pass


class SingularSeparationError(PhysicsError):
    pass


class PropagationError(PhononGateError):
    """Numerical failure during time evolution (norm drift, NaN, overflow)."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(PhononGateError, ValueError):
    """Malformed or invalid run configuration."""

    def __init__(self, message, line=None, key=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.key = key

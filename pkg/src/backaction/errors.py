"""Exception hierarchy shared by all modules."""


class BackactionError(Exception):
    """Base class for every error raised by the library."""


class ParameterError(BackactionError, ValueError):
    """A physical parameter is outside its domain."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class InstabilityError(BackactionError):
    """The linearized dynamics have no stable steady state (or are degenerate)."""

    def __init__(self, message, Omega=None):
        self.Omega = Omega
        super().__init__(message)


class ConsistencyError(BackactionError, ValueError):
    """Objects that must describe the same operating point do not."""


class AccuracyError(BackactionError):
    """A numerical procedure failed to reach its requested tolerance."""


class UnmeasurableError(BackactionError, ValueError):
    """The signal force has zero responsivity in the chosen readout."""


class OptimizationError(BackactionError):
    """A 1-D minimization could not bracket a minimum."""

    def __init__(self, message, profile=None):
        self.profile = profile
        super().__init__(message)


class ConfigurationError(BackactionError, ValueError):
    """A job or fit was configured in a way that cannot produce a result."""

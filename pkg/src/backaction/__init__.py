"""Linear-response model of a cavity-coupled mirror pumped on a mechanical sideband.

Submodules
----------
physparams
    Parameter sets and derived rates.
sideband
    Closed-form resolved-sideband transfer rows, spectra and energies.
fullmodel
    Both optical sidebands with a free detuning, solved numerically.
metrology
    Force-referred noise, detection thresholds and the pump optimum.
verify
    Cross-checks between the two models.
cli
    JSON-in, CSV-out command-line front end.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AccuracyError,
    BackactionError,
    ConfigurationError,
    ConsistencyError,
    InstabilityError,
    OptimizationError,
    ParameterError,
    UnmeasurableError,
)
from .physparams import LabParams, SystemParams, derive_system, eta  # noqa: E402

__all__ = [
    "__version__",
    "AccuracyError",
    "BackactionError",
    "ConfigurationError",
    "ConsistencyError",
    "InstabilityError",
    "OptimizationError",
    "ParameterError",
    "UnmeasurableError",
    "LabParams",
    "SystemParams",
    "derive_system",
    "eta",
]

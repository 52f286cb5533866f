"""Physical parameters of the cavity/oscillator pair and the ponderomotive rigidity.

All rates are angular frequencies in rad/s.  ``hbar`` and ``c`` come from
CODATA via :mod:`scipy.constants` and are never parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import hbar as HBAR

from .errors import ParameterError

__all__ = [
    "HBAR",
    "SPEED_OF_LIGHT",
    "LabParams",
    "SystemParams",
    "SidebandCheck",
    "derive_system",
    "eta",
    "coupling_for_damping",
    "validate_resolved_sideband",
]


def _require_positive(name, value):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value)):
        raise ParameterError(name, f"expected a finite real number, got {value!r}")
    if value <= 0:
        raise ParameterError(name, f"must be strictly positive, got {value!r}")


def _require_sign(value):
    if value not in (1, -1):
        raise ParameterError("detuning_sign", f"must be +1 or -1, got {value!r}")


def _require_occupation(value):
    if not math.isfinite(value) or value < 0:
        raise ParameterError("n_T", f"must be a finite number >= 0, got {value!r}")


@dataclass(frozen=True)
class LabParams:
    """Laboratory description of the single-ended Fabry-Perot with a movable end mirror.

    Attributes
    ----------
    m : float
        Mirror (oscillator) mass [kg].
    L : float
        Cavity length [m].
    omega_m, gamma_m : float
        Mechanical angular frequency and damping rate [rad/s].
    T_mirror : float
        Amplitude transmission of the input mirror.
    I0 : float
        Circulating power inside the cavity [W].  ``I0 = 0`` is allowed and
        decouples the mirror from the light.
    k : float
        Optical wavevector [1/m].
    n_T : float
        Mean thermal phonon number of the mechanical bath.
    detuning_sign : int
        +1 for a pump below the cavity resonance (cooling), -1 above it.
    """

    m: float
    L: float
    omega_m: float
    gamma_m: float
    T_mirror: float
    I0: float
    k: float
    n_T: float = 0.0
    detuning_sign: int = 1

    def __post_init__(self):
        for name in ("m", "L", "omega_m", "gamma_m", "T_mirror", "k"):
            _require_positive(name, getattr(self, name))
        if not math.isfinite(self.I0) or self.I0 < 0:
            raise ParameterError("I0", f"must be a finite number >= 0, got {self.I0!r}")
        _require_occupation(self.n_T)
        _require_sign(self.detuning_sign)


@dataclass(frozen=True)
class SystemParams:
    """Rate-level description used by every solver.

    ``G0`` is complex: its modulus sets the optomechanical coupling and its
    argument is the pump phase.  ``x0`` (zero-point displacement, m) is only
    known when the parameters were derived from a :class:`LabParams`.
    """

    gamma: float
    gamma_m: float
    omega_m: float
    G0: complex = 0.0
    n_T: float = 0.0
    detuning_sign: int = 1
    x0: float | None = None

    def __post_init__(self):
        _require_positive("gamma", self.gamma)
        _require_positive("omega_m", self.omega_m)
        # gamma_m = 0 is a legitimate idealization for the metrology formulas
        if not math.isfinite(self.gamma_m) or self.gamma_m < 0:
            raise ParameterError("gamma_m", f"must be a finite number >= 0, got {self.gamma_m!r}")
        g0 = complex(self.G0)
        if not (math.isfinite(g0.real) and math.isfinite(g0.imag)):
            raise ParameterError("G0", f"must be finite, got {self.G0!r}")
        object.__setattr__(self, "G0", g0)
        _require_occupation(self.n_T)
        _require_sign(self.detuning_sign)
        if self.x0 is not None:
            _require_positive("x0", self.x0)

    @property
    def G0_abs(self) -> float:
        return abs(self.G0)

    @property
    def pump_phase(self) -> float:
        """arg(G0); zero when the coupling vanishes."""
        return math.atan2(self.G0.imag, self.G0.real) if self.G0 != 0 else 0.0

    @property
    def Delta(self) -> float:
        """Detuning used by the sideband formulas, +-omega_m."""
        return self.detuning_sign * self.omega_m

    def with_phase(self, phase: float) -> "SystemParams":
        return replace(self, G0=self.G0_abs * complex(math.cos(phase), math.sin(phase)))

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)


def derive_system(lab: LabParams) -> SystemParams:
    """Convert laboratory quantities into rates.

    gamma = T^2 / (4 tau) with tau = L / c, |G0| = sqrt(k I0 / (m L omega_m)),
    x0 = sqrt(hbar / (2 m omega_m)).  The pump phase is set to zero.
    """
    if not isinstance(lab, LabParams):
        raise TypeError(f"expected LabParams, got {type(lab).__name__}")
    tau = lab.L / SPEED_OF_LIGHT
    gamma = lab.T_mirror**2 / (4.0 * tau)
    G0 = math.sqrt(lab.k * lab.I0 / (lab.m * lab.L * lab.omega_m))
    x0 = math.sqrt(HBAR / (2.0 * lab.m * lab.omega_m))
    return SystemParams(
        gamma=gamma,
        gamma_m=lab.gamma_m,
        omega_m=lab.omega_m,
        G0=complex(G0, 0.0),
        n_T=lab.n_T,
        detuning_sign=lab.detuning_sign,
        x0=x0,
    )


def eta(sys: SystemParams, nu):
    """Ponderomotive rigidity at offset ``nu = Omega - omega_m`` (scalar or array).

    Positive detuning: |G0|^2 / (gamma - i nu).  Negative detuning:
    -|G0|^2 / (gamma + i nu).  The real part is the pump-induced damping.
    """
    g2 = sys.G0_abs**2
    nu = np.asarray(nu, dtype=float)
    if sys.detuning_sign > 0:
        out = g2 / (sys.gamma - 1j * nu)
    else:
        out = -g2 / (sys.gamma + 1j * nu)
    return complex(out) if out.ndim == 0 else out


def coupling_for_damping(gamma: float, eta_r: float, nu: float = 0.0) -> float:
    """|G0| that produces ponderomotive damping of magnitude ``|eta_r|`` at offset ``nu``."""
    return math.sqrt(abs(eta_r) * (gamma**2 + nu**2) / gamma)


@dataclass(frozen=True)
class SidebandCheck:
    passed: bool
    damping_ok: bool
    frequency_ok: bool
    cavity_to_mechanical_damping: float
    mechanical_to_cavity_rate: float
    min_ratio: float


def validate_resolved_sideband(sys: SystemParams, min_ratio: float = 100.0) -> SidebandCheck:
    """Check gamma_m * min_ratio <= gamma and gamma * min_ratio <= omega_m.

    A failed check is reported, never raised; the full model runs regardless.
    """
    if not min_ratio > 1:
        raise ParameterError("min_ratio", f"must exceed 1, got {min_ratio!r}")
    damping_ok = sys.gamma_m * min_ratio <= sys.gamma
    frequency_ok = sys.gamma * min_ratio <= sys.omega_m
    return SidebandCheck(
        passed=damping_ok and frequency_ok,
        damping_ok=damping_ok,
        frequency_ok=frequency_ok,
        cavity_to_mechanical_damping=(sys.gamma / sys.gamma_m) if sys.gamma_m > 0 else math.inf,
        mechanical_to_cavity_rate=sys.omega_m / sys.gamma,
        min_ratio=min_ratio,
    )

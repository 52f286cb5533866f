"""Resolved-sideband model for pumps detuned by exactly +-omega_m.

Only the resonant optical sideband talks to the mirror; the far sideband is
reflected with a pure phase.  Frequencies are offsets ``nu = Omega - omega_m``.

Channel order for every transfer row is ``(a_in(Omega), a_in(-Omega) sideband,
thermal bath, signal force)``.  Spectra use the symmetrized double-sided
convention: a vacuum channel has weight 1/2 and the thermal channel n_T + 1/2,
whether it enters as an annihilation or a creation operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ConsistencyError, InstabilityError, ParameterError
from .physparams import HBAR, SystemParams, eta

__all__ = [
    "PLUS",
    "MINUS",
    "MINUS_DAG",
    "TransferRow",
    "SpectrumPoint",
    "solve_positive",
    "solve_negative",
    "solve_rows",
    "closed_spectrum",
    "spectral_density_closed",
    "quadrature_spectrum_from_rows",
    "channel_weights",
    "mean_phonon_closed",
    "mean_energy_closed",
]

PLUS = "a_out(+Omega)"
MINUS = "a_out(-Omega)"
MINUS_DAG = "a_out^dag(-Omega)"


@dataclass(frozen=True)
class TransferRow:
    """Coefficients of one output field component on the four input channels.

    Fields may be scalars or equally shaped arrays (one entry per offset).
    """

    c_ain: Any
    c_ain_minus: Any
    c_bth: Any
    c_f: Any
    output_label: str
    nu: Any

    def noise_coefficients(self):
        return np.stack(np.broadcast_arrays(self.c_ain, self.c_ain_minus, self.c_bth)).astype(complex)

    def conjugate(self) -> "TransferRow":
        """Row of the Hermitian-conjugate output (a_out(-Omega) <-> a_out^dag(-Omega))."""
        flip = {MINUS: MINUS_DAG, MINUS_DAG: MINUS}
        if self.output_label not in flip:
            raise ConsistencyError(f"conjugating {self.output_label} is not supported")
        return TransferRow(
            np.conj(self.c_ain),
            np.conj(self.c_ain_minus),
            np.conj(self.c_bth),
            np.conj(self.c_f),
            flip[self.output_label],
            self.nu,
        )


@dataclass(frozen=True)
class SpectrumPoint:
    nu: float
    S_y: float


def _unit_phase(G0):
    return G0 / abs(G0) if G0 != 0 else 0.0


def solve_positive(sys: SystemParams, nu):
    """Output rows for Delta = +omega_m: ``(a_out(Omega), a_out^dag(-Omega))``."""
    if sys.detuning_sign != 1:
        raise ParameterError("detuning_sign", "solve_positive needs detuning_sign = +1")
    nu = np.asarray(nu, dtype=float)
    g, gm = sys.gamma, sys.gamma_m
    et = np.asarray(eta(sys, nu))
    D = gm + et - 1j * nu
    reflect = (g + 1j * nu) / (g - 1j * nu)
    c_ain = reflect * (1.0 - 2.0 * et.real / D)
    # sqrt((g + i nu)/(g - i nu)) on the principal branch equals the phase of (g + i nu)
    c_f = -1j * _unit_phase(sys.G0) * np.sqrt(2.0 * et.real) * np.sqrt(reflect) / D
    c_bth = np.sqrt(2.0 * gm) * c_f
    far = 2.0 * sys.omega_m + nu
    zero = np.zeros_like(c_ain)
    plus = TransferRow(_squeeze(c_ain), _squeeze(zero), _squeeze(c_bth), _squeeze(c_f), PLUS, _squeeze(nu))
    minus = TransferRow(
        _squeeze(zero),
        _squeeze((g + 1j * far) / (g - 1j * far)),
        _squeeze(zero),
        _squeeze(zero),
        MINUS_DAG,
        _squeeze(nu),
    )
    return plus, minus


def solve_negative(sys: SystemParams, nu):
    """Output rows for Delta = -omega_m: ``(a_out(-Omega), a_out(Omega))``.

    The resonant row couples to the conjugate bath operator, so its thermal
    channel carries n_T + 1 quanta in normal order; |c_ain_minus| > 1 is the
    phase-insensitive amplification produced by negative damping.
    """
    if sys.detuning_sign != -1:
        raise ParameterError("detuning_sign", "solve_negative needs detuning_sign = -1")
    nu = np.asarray(nu, dtype=float)
    g, gm = sys.gamma, sys.gamma_m
    et = np.asarray(eta(sys, nu))
    D = gm + et + 1j * nu
    reflect = (g - 1j * nu) / (g + 1j * nu)
    c_ain_minus = reflect * (1.0 - 2.0 * et.real / D)
    c_f = -1j * _unit_phase(sys.G0) * np.sqrt(2.0 * np.abs(et.real)) * np.sqrt(reflect) / D
    c_bth = np.sqrt(2.0 * gm) * c_f
    far = 2.0 * sys.omega_m + nu
    zero = np.zeros_like(c_ain_minus)
    minus = TransferRow(
        _squeeze(zero), _squeeze(c_ain_minus), _squeeze(c_bth), _squeeze(c_f), MINUS, _squeeze(nu)
    )
    plus = TransferRow(
        _squeeze((g + 1j * far) / (g - 1j * far)),
        _squeeze(zero),
        _squeeze(zero),
        _squeeze(zero),
        PLUS,
        _squeeze(nu),
    )
    return minus, plus


def solve_rows(sys: SystemParams, nu):
    """Dispatch on the detuning sign."""
    return solve_positive(sys, nu) if sys.detuning_sign > 0 else solve_negative(sys, nu)


def _squeeze(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


def channel_weights(n_T: float) -> np.ndarray:
    """Symmetrized weights of the vacuum, vacuum and thermal channels."""
    return np.array([0.5, 0.5, n_T + 0.5])


def quadrature_spectrum_from_rows(rows, theta: float, n_T: float):
    """Spectral density of ``y_theta = (a_out(Omega) e^{-i theta} + a_out^dag(-Omega) e^{i theta}) / sqrt 2``.

    ``rows`` is any pair holding one ``a_out(+Omega)`` row and one row for the
    -Omega output (either ``a_out(-Omega)`` or its conjugate).  The signal
    force channel is excluded.  Returns a float, or an array for array rows.
    """
    rows = list(rows)
    if len(rows) != 2:
        raise ConsistencyError(f"expected two output rows, got {len(rows)}")
    plus = [r for r in rows if r.output_label == PLUS]
    other = [r for r in rows if r.output_label != PLUS]
    if len(plus) != 1 or len(other) != 1:
        raise ConsistencyError("rows must contain exactly one a_out(+Omega) row")
    plus, minus = plus[0], other[0]
    if minus.output_label == MINUS:
        minus = minus.conjugate()
    elif minus.output_label != MINUS_DAG:
        raise ConsistencyError(f"unknown output label {minus.output_label!r}")
    if np.shape(plus.nu) != np.shape(minus.nu) or not np.array_equal(plus.nu, minus.nu):
        raise ConsistencyError("rows were computed at different frequency offsets")
    h = (np.exp(-1j * theta) * plus.noise_coefficients() + np.exp(1j * theta) * minus.noise_coefficients()) / np.sqrt(2.0)
    w = channel_weights(n_T).reshape((3,) + (1,) * (h.ndim - 1))
    return _squeeze(np.sum(np.abs(h) ** 2 * w, axis=0))


def closed_spectrum(sys: SystemParams, nu):
    """Noise-only output spectrum of the amplitude quadrature (scalar or array).

    Cooling side: 1/2 + 2 eta_r gamma_m n_T / |gamma_m + eta - i nu|^2.
    Heating side: 1/2 + 2 |eta_r| gamma_m (n_T + 1) / |gamma_m + eta + i nu|^2,
    where the denominator is the determinant of the heating-side equations.
    """
    nu = np.asarray(nu, dtype=float)
    et = np.asarray(eta(sys, nu))
    if sys.detuning_sign > 0:
        extra = 2.0 * et.real * sys.gamma_m * sys.n_T / np.abs(sys.gamma_m + et - 1j * nu) ** 2
    else:
        extra = 2.0 * np.abs(et.real) * sys.gamma_m * (sys.n_T + 1.0) / np.abs(sys.gamma_m + et + 1j * nu) ** 2
    return _squeeze(0.5 + extra)


def spectral_density_closed(sys: SystemParams, nu: float) -> SpectrumPoint:
    return SpectrumPoint(float(nu), float(closed_spectrum(sys, nu)))


def mean_phonon_closed(sys: SystemParams) -> float:
    """Mean phonon number implied by the closed-form energies (without the zero-point 1/2)."""
    eta_r = abs(sys.G0_abs**2 / sys.gamma)
    gm, nT = sys.gamma_m, sys.n_T
    if sys.detuning_sign > 0:
        if gm + eta_r == 0:
            raise ParameterError("gamma_m", "an undamped, unpumped oscillator has no steady state")
        return gm * nT / (gm + eta_r)
    if eta_r >= gm:
        raise InstabilityError(
            f"negative damping |eta_r| = {eta_r:.6g} rad/s is not below gamma_m = {gm:.6g} rad/s"
        )
    return (gm * nT + eta_r) / (gm - eta_r)


def mean_energy_closed(sys: SystemParams) -> float:
    """Mean oscillator energy [J] with eta_r taken at the mechanical resonance."""
    return HBAR * sys.omega_m * (mean_phonon_closed(sys) + 0.5)

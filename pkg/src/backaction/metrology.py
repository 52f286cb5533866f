"""Force-referred noise, detection thresholds and minimal detectable forces.

The narrow-band force noise treats the pump-induced damping ``eta_r`` as a
free, frequency-independent knob:

    S_f(nu) = ((gamma_m + eta_r)^2 + nu^2) / (4 eta_r) + gamma_m n_T

(heating side: ``(gamma_m - |eta_r|)^2`` and ``n_T + 1``).  Band integrals of
2 S_f dnu / 2pi give the squared force amplitude ``f0^2`` at threshold.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .errors import InstabilityError, OptimizationError, ParameterError, UnmeasurableError
from .physparams import HBAR, SystemParams, eta
from . import fullmodel
from .sideband import MINUS, PLUS, quadrature_spectrum_from_rows, solve_rows

__all__ = [
    "BANDS",
    "BRANCHES",
    "band_limits",
    "force_noise_density",
    "force_referred_spectrum",
    "force_referred_spectrum_generic",
    "Threshold",
    "threshold_integral",
    "approx_threshold",
    "detection_threshold",
    "optimize_eta",
    "sql_force",
    "thermal_force",
    "force_from_dimensionless",
    "ForceBudget",
    "force_budget",
]

# symmetric: nu in [-dW/2, dW/2]; double: [-dW, dW]; one-sided: [0, dW]
BANDS = ("symmetric", "double", "one-sided")
BRANCHES = ("exact", "approx")


def band_limits(delta_omega: float, band: str = "symmetric"):
    if band == "symmetric":
        return -0.5 * delta_omega, 0.5 * delta_omega
    if band == "double":
        return -delta_omega, delta_omega
    if band == "one-sided":
        return 0.0, delta_omega
    raise ParameterError("band_convention", f"expected one of {BANDS}, got {band!r}")


def force_noise_density(eta_r, gamma_m, n_T, nu, detuning_sign=1):
    """Narrow-band force noise for a given damping knob (scalar or array in ``nu``)."""
    nu = np.asarray(nu, dtype=float)
    if detuning_sign > 0:
        if not eta_r > 0:
            raise UnmeasurableError("eta_r = 0: the force does not reach the output")
        out = ((gamma_m + eta_r) ** 2 + nu**2) / (4.0 * eta_r) + gamma_m * n_T
    else:
        x = abs(eta_r)
        if x == 0:
            raise UnmeasurableError("eta_r = 0: the force does not reach the output")
        if x >= gamma_m:
            raise InstabilityError(
                f"|eta_r| = {x:.6g} rad/s >= gamma_m = {gamma_m:.6g} rad/s: unstable without feedback"
            )
        out = ((gamma_m - x) ** 2 + nu**2) / (4.0 * x) + gamma_m * (n_T + 1.0)
    return out.item() if out.ndim == 0 else out


def force_referred_spectrum(sys: SystemParams, nu):
    """Closed-form force-referred noise at offset ``nu``.

    Keeps the full complex rigidity, so it equals S_y / |c_f|^2 exactly; with
    ``eta_i`` dropped it reduces to :func:`force_noise_density`.
    """
    nu = np.asarray(nu, dtype=float)
    et = np.asarray(eta(sys, nu))
    if np.any(et.real == 0):
        raise UnmeasurableError("eta_r = 0: the force does not reach the output")
    gm, nT = sys.gamma_m, sys.n_T
    if sys.detuning_sign > 0:
        out = np.abs(gm + et - 1j * nu) ** 2 / (4.0 * et.real) + gm * nT
    else:
        if abs(et.real).max() >= gm:
            raise InstabilityError("|eta_r| >= gamma_m: unstable without feedback")
        out = np.abs(gm + et + 1j * nu) ** 2 / (4.0 * np.abs(et.real)) + gm * (nT + 1.0)
    return out.item() if out.ndim == 0 else out


def force_referred_spectrum_generic(sys: SystemParams, nu, model: str = "rsb", theta: float = 0.0):
    """S_f = S_y / |H_{f->y}|^2 from transfer rows of either model.

    ``H_{f->y} = c_f(+) e^{-i theta} + c_f(-) e^{i theta}`` with ``c_f(+)`` and
    ``c_f(-)`` the force coefficients of a_out(Omega) and a_out^dag(-Omega);
    the quadrature's 1/sqrt 2 is absorbed into the force normalization.
    In the full model ``theta`` is measured from the pump phase.
    """
    nu = np.asarray(nu, dtype=float)
    if model == "rsb":
        rows = solve_rows(sys, nu)
        S_y = np.asarray(quadrature_spectrum_from_rows(rows, theta, sys.n_T))
        plus = next(r for r in rows if r.output_label == PLUS)
        minus = next(r for r in rows if r.output_label != PLUS)
        if minus.output_label == MINUS:
            minus = minus.conjugate()
        c_plus, c_minus = np.asarray(plus.c_f), np.asarray(minus.c_f)
    elif model == "full":
        Omega = np.atleast_1d(sys.omega_m + nu)
        T, _, _ = fullmodel.transfer_batch(sys, Omega, sys.Delta)
        S_y = fullmodel.spectrum(sys, Omega, sys.Delta, theta)
        c_plus, c_minus = T[:, 0, 3], T[:, 1, 3]
        theta = theta + sys.pump_phase
    else:
        raise ParameterError("model", f"expected 'rsb' or 'full', got {model!r}")
    H = np.abs(np.exp(-1j * theta) * c_plus + np.exp(1j * theta) * c_minus) ** 2
    if np.any(H == 0):
        raise UnmeasurableError("zero force responsivity")
    out = S_y / H
    return out.item() if nu.ndim == 0 else out.reshape(nu.shape)


@dataclass(frozen=True)
class Threshold:
    """Squared dimensionless force amplitude at the detection threshold."""

    exact: float
    approx: float
    band: str
    delta_omega: float


def threshold_integral(eta_r, gamma_m, n_T, delta_omega, band="symmetric", detuning_sign=1) -> float:
    """f0^2 = integral over the band of 2 S_f dnu / 2pi, evaluated numerically."""
    if not delta_omega > 0 or not math.isfinite(delta_omega):
        raise ParameterError("Delta_Omega", f"must be finite and > 0, got {delta_omega!r}")
    lo, hi = band_limits(delta_omega, band)
    val, _ = integrate.quad(
        lambda v: 2.0 * force_noise_density(eta_r, gamma_m, n_T, v, detuning_sign),
        lo,
        hi,
        epsabs=0.0,
        epsrel=1e-13,
    )
    if not math.isfinite(val):
        raise ParameterError("eta_r", "threshold integral diverges")
    return val / (2.0 * math.pi)


def approx_threshold(eta_r, delta_omega) -> float:
    """(eta_r/2 + dW^2/(6 eta_r)) dW / 2pi, the undamped-oscillator approximation."""
    if not eta_r > 0:
        raise UnmeasurableError("eta_r must be > 0")
    if not delta_omega > 0:
        raise ParameterError("Delta_Omega", f"must be > 0, got {delta_omega!r}")
    return (0.5 * eta_r + delta_omega**2 / (6.0 * eta_r)) * delta_omega / (2.0 * math.pi)


def detection_threshold(sys: SystemParams, delta_omega: float, band: str = "symmetric") -> Threshold:
    """Threshold for the damping this system's pump produces at the mechanical resonance."""
    eta_r = eta(sys, 0.0).real
    return Threshold(
        exact=threshold_integral(eta_r, sys.gamma_m, sys.n_T, delta_omega, band, sys.detuning_sign),
        approx=approx_threshold(abs(eta_r), delta_omega),
        band=band,
        delta_omega=delta_omega,
    )


def optimize_eta(
    gamma_m: float,
    n_T: float,
    delta_omega: float,
    *,
    band: str = "symmetric",
    branch: str = "exact",
    detuning_sign: int = 1,
    start_decade: float = -6.0,
    n_decades: int = 13,
    xtol: float = 1e-6,
):
    """Minimize the detection threshold over eta_r > 0.

    A log-spaced scan of ``n_decades`` decades (starting at
    ``10**start_decade * scale``) brackets the minimum, then golden-section
    search refines ``log(eta_r)`` to relative tolerance ``xtol``.  Returns
    ``(eta_r_opt, f0_min)``; ``f0_min`` is the square root of the threshold.
    On the heating side the search is restricted to |eta_r| < gamma_m.
    """
    if not delta_omega > 0:
        raise ParameterError("Delta_Omega", f"must be > 0, got {delta_omega!r}")
    if branch not in BRANCHES:
        raise ParameterError("branch", f"expected one of {BRANCHES}, got {branch!r}")
    band_limits(delta_omega, band)

    if branch == "approx":
        objective = lambda e: approx_threshold(e, delta_omega)  # noqa: E731
    else:
        objective = lambda e: threshold_integral(e, gamma_m, n_T, delta_omega, band, detuning_sign)  # noqa: E731

    scale = max(delta_omega, gamma_m)
    grid = np.log(scale) + np.log(10.0) * (start_decade + np.arange(4 * n_decades + 1) / 4.0)
    if detuning_sign < 0:
        if branch == "approx" or not gamma_m > 0:
            raise InstabilityError("heating-side optimization needs gamma_m > 0 and the exact branch")
        edge = math.log(gamma_m * (1.0 - xtol))
        grid = np.append(grid[grid < edge], edge)
    values = np.array([objective(math.exp(u)) for u in grid])
    profile = list(zip(np.exp(grid).tolist(), values.tolist()))
    i = int(np.argmin(values))
    if detuning_sign < 0 and i == len(grid) - 1:
        # infimum sits on the stability boundary |eta_r| -> gamma_m
        return float(math.exp(grid[i])), math.sqrt(values[i])
    if i == 0 or i == len(grid) - 1:
        raise OptimizationError(
            f"no interior minimum in eta_r scan [{math.exp(grid[0]):.3g}, {math.exp(grid[-1]):.3g}] rad/s",
            profile=profile,
        )
    res = optimize.minimize_scalar(
        lambda u: objective(math.exp(u)),
        bracket=(grid[i - 1], grid[i], grid[i + 1]),
        method="golden",
        options={"xtol": xtol / max(abs(grid[i]), 1.0)},
    )
    u = float(res.x)
    return math.exp(u), math.sqrt(objective(math.exp(u)))


def force_from_dimensionless(f0: float, m: float, omega_m: float, convention: str = "sql") -> float:
    """Physical force [N] for a dimensionless amplitude.

    ``"sql"``: F = f0 sqrt(2 hbar m omega_m) (= hbar f0 / x0).
    ``"coupling"``: F = f0 sqrt(hbar omega_m m), the normalization used in the
    mechanical equation of motion.  The two differ by sqrt 2.
    """
    if convention == "sql":
        return f0 * math.sqrt(2.0 * HBAR * m * omega_m)
    if convention == "coupling":
        return f0 * math.sqrt(HBAR * m * omega_m)
    raise ParameterError("force_convention", f"expected 'sql' or 'coupling', got {convention!r}")


def sql_force(m: float, omega_m: float, tau: float, *, band: str = "symmetric", branch: str = "approx"):
    """Minimal force of an undamped oscillator measured for a time ``tau``.

    Uses dW = 2 pi / tau.  Returns ``(f0, F0, xi)`` with f0 = xi / tau and F0 in
    newtons (sql convention).
    """
    for name, v in (("m", m), ("omega_m", omega_m), ("tau", tau)):
        if not v > 0:
            raise ParameterError(name, f"must be > 0, got {v!r}")
    delta_omega = 2.0 * math.pi / tau
    _, f0 = optimize_eta(0.0, 0.0, delta_omega, band=band, branch=branch)
    return f0, force_from_dimensionless(f0, m, omega_m, "sql"), f0 * tau


def thermal_force(m: float, omega_m: float, gamma_m: float, n_T: float, tau: float) -> float:
    """F0 = sqrt(4 hbar m omega_m gamma_m (n_T + 1) / tau), valid for gamma_m tau > 1."""
    for name, v in (("m", m), ("omega_m", omega_m), ("gamma_m", gamma_m), ("tau", tau)):
        if not v > 0:
            raise ParameterError(name, f"must be > 0, got {v!r}")
    if gamma_m * tau <= 1.0:
        warnings.warn(
            f"gamma_m * tau = {gamma_m * tau:.3g} <= 1: outside the narrow-band regime",
            RuntimeWarning,
            stacklevel=2,
        )
    return math.sqrt(4.0 * HBAR * m * omega_m * gamma_m * (n_T + 1.0) / tau)


@dataclass
class ForceBudget:
    nu: np.ndarray
    S_f: np.ndarray
    Delta_Omega: float
    tau: float
    eta_r_opt: float
    f0_min: float
    F0_min: float
    xi: float
    band: str
    branch: str
    force_convention: str = "sql"
    F0_thermal: float | None = None
    F0_coupling_convention: float = field(default=float("nan"))

    def summary(self) -> dict:
        return {
            "Delta_Omega_rad_s": self.Delta_Omega,
            "tau_s": self.tau,
            "band_convention": self.band,
            "branch": self.branch,
            "eta_r_opt_rad_s": self.eta_r_opt,
            "f0_min": self.f0_min,
            "xi": self.xi,
            "F0_min_N": self.F0_min,
            "F0_min_N_convention": "F = f0*sqrt(2*hbar*m*omega_m)",
            "F0_min_coupling_convention_N": self.F0_coupling_convention,
            "F0_min_coupling_convention": "F = f0*sqrt(hbar*m*omega_m)",
            "F0_thermal_N": self.F0_thermal,
        }


def force_budget(
    m: float,
    omega_m: float,
    gamma_m: float,
    n_T: float,
    tau: float,
    *,
    band: str = "symmetric",
    branch: str = "exact",
    detuning_sign: int = 1,
    n_grid: int = 101,
) -> ForceBudget:
    """Optimize the pump for a measurement time ``tau`` and tabulate S_f across the band."""
    if not tau > 0:
        raise ParameterError("tau", f"must be > 0, got {tau!r}")
    delta_omega = 2.0 * math.pi / tau
    eta_opt, f0 = optimize_eta(
        gamma_m, n_T, delta_omega, band=band, branch=branch, detuning_sign=detuning_sign
    )
    lo, hi = band_limits(delta_omega, band)
    nu = np.linspace(lo, hi, n_grid)
    S_f = np.asarray(force_noise_density(eta_opt, gamma_m, n_T, nu, detuning_sign), dtype=float)
    F_th = None
    if gamma_m > 0:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            F_th = thermal_force(m, omega_m, gamma_m, n_T, tau)
    return ForceBudget(
        nu=nu,
        S_f=S_f,
        Delta_Omega=delta_omega,
        tau=tau,
        eta_r_opt=eta_opt,
        f0_min=f0,
        F0_min=force_from_dimensionless(f0, m, omega_m, "sql"),
        xi=f0 * tau,
        band=band,
        branch=branch,
        F0_thermal=F_th,
        F0_coupling_convention=force_from_dimensionless(f0, m, omega_m, "coupling"),
    )

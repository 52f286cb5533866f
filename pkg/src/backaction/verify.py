"""Cross-model checks: back-action cancellation fits, approx-vs-full sweeps and audits.

Everything here is deterministic; random audits take an explicit seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import fullmodel, sideband
from .errors import ConfigurationError, InstabilityError, ParameterError
from .physparams import SystemParams, coupling_for_damping, eta

__all__ = [
    "SCHEMA_VERSION",
    "chebyshev_grid",
    "CancellationFit",
    "cancellation_fit",
    "ComparisonRow",
    "compare_models",
    "is_non_increasing",
    "s_add_estimate",
    "unitarity_audit",
    "phase_invariance_audit",
    "VerificationReport",
    "build_report",
]

SCHEMA_VERSION = "v1"


def chebyshev_grid(lo: float, hi: float, n: int) -> np.ndarray:
    """Chebyshev nodes of the first kind mapped onto [lo, hi], ascending."""
    if n < 1:
        raise ConfigurationError("need at least one grid point")
    k = np.arange(n)
    x = np.cos((2 * k + 1) * np.pi / (2 * n))[::-1]
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * x


def s_add_estimate(sys: SystemParams, nu):
    """Order-of-magnitude phase-quadrature back-action term of the full model.

    2 eta_r^2 / |gamma_m + eta - i nu|^2 * (gamma / omega_m)^2
    """
    if sys.detuning_sign != 1:
        raise ParameterError("detuning_sign", "the estimate is defined for positive detuning")
    et = eta(sys, nu)
    return 2.0 * np.real(et) ** 2 / np.abs(sys.gamma_m + et - 1j * np.asarray(nu)) ** 2 * (sys.gamma / sys.omega_m) ** 2


@dataclass(frozen=True)
class CancellationFit:
    coefficients: tuple  # (c0, c1, c2) of S_y - 1/2 in powers of eta_r / gamma
    eta_r: np.ndarray
    excess: np.ndarray  # S_y - 1/2 at each pump
    model: str
    theta: float
    nu: float
    c2_estimate: float  # 2 (gamma/omega_m)^2 gamma^2 / |gamma_m + eta - i nu|^2 at mid-pump
    residual: float  # max |fit - data|

    @property
    def c2_ratio(self) -> float:
        return self.coefficients[2] / self.c2_estimate if self.c2_estimate else math.inf


def _excess(sys, model, theta, nu):
    if model == "rsb":
        rows = sideband.solve_rows(sys, nu)
        return sideband.quadrature_spectrum_from_rows(rows, theta, 0.0) - 0.5
    # the full model carries a term odd in nu at first order in gamma/omega_m;
    # averaging the two mirror offsets isolates the even (back-action) part
    offsets = (nu,) if nu == 0 else (nu, -nu)
    S = [fullmodel.spectrum(sys, sys.omega_m + v, sys.Delta, theta) for v in offsets]
    return float(np.mean(S)) - 0.5


def cancellation_fit(sys_template: SystemParams, pump_grid, theta: float = 0.0, model: str = "rsb", nu: float = 0.0) -> CancellationFit:
    """Least-squares fit of S_y - 1/2 = c0 + c1 x + c2 x^2 at n_T = 0, with x = eta_r / gamma.

    ``pump_grid`` holds ponderomotive damping magnitudes eta_r(nu) [rad/s]; the
    coupling is set so the template reaches each one at offset ``nu``.  The
    coefficients are dimensionless.  For the full model at ``nu != 0`` the
    samples are the mean of the spectra at omega_m + nu and omega_m - nu.
    """
    if model not in ("rsb", "full"):
        raise ConfigurationError(f"model must be 'rsb' or 'full', got {model!r}")
    grid = np.asarray(pump_grid, dtype=float)
    if np.unique(grid).size < 5:
        raise ConfigurationError(f"need >= 5 distinct pump values, got {np.unique(grid).size}")
    if np.any(grid <= 0):
        raise ConfigurationError("pump values must be positive damping magnitudes")
    base = sys_template.replace(n_T=0.0)
    phase = base.pump_phase
    ys = []
    for e in grid:
        g0 = coupling_for_damping(base.gamma, e, nu)
        s = base.replace(G0=g0 * complex(math.cos(phase), math.sin(phase)))
        ys.append(_excess(s, model, theta, nu))
    ys = np.asarray(ys)
    scale = float(np.max(grid))
    gamma = base.gamma
    V = np.vander(grid / scale, 3, increasing=True)
    if np.linalg.matrix_rank(V) < 3:
        raise ConfigurationError("degenerate fit design (rank-deficient Vandermonde matrix)")
    c, *_ = np.linalg.lstsq(V, ys, rcond=None)
    resid = float(np.max(np.abs(V @ c - ys)))
    ratio = gamma / scale
    coeffs = (float(c[0]), float(c[1] * ratio), float(c[2] * ratio**2))
    mid = 0.5 * (grid.min() + grid.max())
    smid = base.replace(G0=coupling_for_damping(base.gamma, mid, nu))
    D2 = abs(smid.gamma_m + eta(smid, nu) - 1j * nu) ** 2 if smid.detuning_sign > 0 else abs(smid.gamma_m + eta(smid, nu) + 1j * nu) ** 2
    est = 2.0 * (gamma / base.omega_m) ** 2 * gamma**2 / D2
    return CancellationFit(coeffs, grid, ys, model, float(theta), float(nu), float(est), resid)


@dataclass(frozen=True)
class ComparisonRow:
    ratio: float
    max_relative_deviation: float
    flagged: bool = False
    message: str = ""


def compare_models(sys_template: SystemParams, ratios, nu_grid, theta: float = 0.0):
    """Max over nu of |S_full - S_closed| / S_closed for each gamma/omega_m ratio.

    ``omega_m`` is set to ``gamma / ratio``; everything else comes from the
    template.  Rows where the full model is unstable are flagged, not fatal.
    """
    ratios = [float(r) for r in ratios]
    if any(b >= a for a, b in zip(ratios, ratios[1:])):
        raise ConfigurationError("ratios must be strictly decreasing")
    nu = np.asarray(nu_grid, dtype=float)
    table = []
    for r in ratios:
        s = sys_template.replace(omega_m=sys_template.gamma / r)
        closed = np.asarray(sideband.closed_spectrum(s, nu))
        try:
            if not fullmodel.is_stable(s, s.Delta):
                raise InstabilityError("full model has no stable steady state")
            full = fullmodel.spectrum(s, s.omega_m + nu, s.Delta, theta)
        except (InstabilityError, ParameterError) as exc:
            table.append(ComparisonRow(r, math.nan, True, str(exc)))
            continue
        dev = float(np.max(np.abs(full - closed) / closed))
        table.append(ComparisonRow(r, dev))
    return table


def is_non_increasing(table, noise_floor: float = 2e-12) -> bool:
    """True when deviations never grow down the table.

    Growth below ``noise_floor`` (twice the round-off level of a spectrum
    evaluation) is ignored; flagged rows are skipped.
    """
    devs = [row.max_relative_deviation for row in table if not row.flagged]
    return all(b <= a or b < noise_floor for a, b in zip(devs, devs[1:]))


def unitarity_audit(n_draws: int = 1000, seed: int = 0) -> float:
    """Max violation of the flux identities over random resolved-sideband draws.

    Cooling side: |c_ain|^2 + |c_bth|^2 = 1.  Heating side: |c_ain_minus|^2 - |c_bth|^2 = 1.
    The residual is relative to the larger of 1 and the amplified term.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for sign in (1, -1):
        gm = 10.0 ** rng.uniform(-6, -1, n_draws)
        g = np.ones(n_draws)
        wm = 10.0 ** rng.uniform(2, 6, n_draws)
        for i in range(n_draws):
            eta_r = gm[i] * 10.0 ** rng.uniform(-3, 3) if sign > 0 else gm[i] * rng.uniform(0.0, 2.0)
            nu = rng.uniform(-10.0, 10.0) * (gm[i] + eta_r)
            phase = rng.uniform(0.0, 2.0 * math.pi)
            G = coupling_for_damping(g[i], eta_r) * complex(math.cos(phase), math.sin(phase))
            s = SystemParams(g[i], gm[i], wm[i], G, 0.0, sign)
            rows = sideband.solve_rows(s, nu)
            res = rows[0]
            if sign > 0:
                big = abs(res.c_ain) ** 2
                val = big + abs(res.c_bth) ** 2
            else:
                big = abs(res.c_ain_minus) ** 2
                val = big - abs(res.c_bth) ** 2
            worst = max(worst, abs(val - 1.0) / max(1.0, big))
    return worst


def phase_invariance_audit(sys: SystemParams, nu_grid, n_phases: int = 8, thetas=(0.0, math.pi / 4, math.pi / 2)) -> float:
    """Max relative change of RSB and full spectra (and closed energy) as arg(G0) rotates."""
    nu = np.asarray(nu_grid, dtype=float)

    def snapshot(s):
        parts = [np.atleast_1d(sideband.closed_spectrum(s, nu))]
        for th in thetas:
            parts.append(np.atleast_1d(sideband.quadrature_spectrum_from_rows(sideband.solve_rows(s, nu), th, s.n_T)))
            parts.append(np.atleast_1d(fullmodel.spectrum(s, s.omega_m + nu, s.Delta, th)))
        try:
            parts.append(np.array([sideband.mean_phonon_closed(s) + 0.5]))
        except InstabilityError:
            pass
        return np.concatenate(parts)

    ref = snapshot(sys.with_phase(0.0))
    worst = 0.0
    for k in range(1, n_phases):
        cur = snapshot(sys.with_phase(2.0 * math.pi * k / n_phases))
        worst = max(worst, float(np.max(np.abs(cur - ref) / np.abs(ref))))
    return worst


@dataclass
class VerificationReport:
    fit_coefficients: list
    max_relative_deviation: float
    s_add_ratio: float
    unitarity_residual: float
    phase_invariance_residual: float
    details: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        for name in ("max_relative_deviation", "unitarity_residual", "phase_invariance_residual"):
            v = getattr(self, name)
            if not (v >= 0 or math.isnan(v)):
                raise ValueError(f"{name} must be >= 0, got {v}")

    def to_dict(self) -> dict:
        return {
            "schema": "backaction.verification_report",
            "schema_version": self.schema_version,
            "fit_coefficients": [float(c) for c in self.fit_coefficients],
            "max_relative_deviation": _num(self.max_relative_deviation),
            "s_add_ratio": _num(self.s_add_ratio),
            "unitarity_residual": _num(self.unitarity_residual),
            "phase_invariance_residual": _num(self.phase_invariance_residual),
            "details": self.details,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def build_report(
    sys: SystemParams,
    pump_grid,
    theta: float,
    model: str,
    nu: float = 0.0,
    ratios=(1e-1, 1e-2, 1e-3),
    nu_grid=None,
    n_audit: int = 200,
    seed: int = 0,
) -> VerificationReport:
    """Run the fit, the model comparison and both audits for one configuration."""
    fit = cancellation_fit(sys, pump_grid, theta, model, nu)
    if nu_grid is None:
        width = sys.gamma_m + abs(eta(sys, 0.0).real)
        nu_grid = np.linspace(-5.0 * width, 5.0 * width, 41)
    table = compare_models(sys, ratios, nu_grid, theta=0.0)
    devs = [row.max_relative_deviation for row in table if not row.flagged]
    details = {
        "model": model,
        "theta_rad": float(theta),
        "nu_rad_s": float(nu),
        "eta_r_grid_rad_s": [float(e) for e in fit.eta_r],
        "excess": [float(v) for v in fit.excess],
        "c2_estimate": fit.c2_estimate,
        "fit_residual": fit.residual,
        "comparison": [
            {"ratio": row.ratio, "max_relative_deviation": _num(row.max_relative_deviation), "flagged": row.flagged, "message": row.message}
            for row in table
        ],
        "comparison_non_increasing": is_non_increasing(table),
    }
    return VerificationReport(
        fit_coefficients=list(fit.coefficients),
        max_relative_deviation=max(devs) if devs else math.nan,
        s_add_ratio=fit.c2_ratio,
        unitarity_residual=unitarity_audit(n_audit, seed),
        phase_invariance_residual=phase_invariance_audit(sys, nu_grid[:: max(1, len(nu_grid) // 8)]),
        details=details,
    )

"""Both optical sidebands coupled to the mirror, with a free detuning.

Unknowns at a positive frequency Omega are the intracavity sideband ``a(Omega)``,
the conjugate far sideband ``a^dag(-Omega)`` and the mechanical amplitude
``b_m(Omega)``; inputs are ``a_in(Omega)``, ``a_in^dag(-Omega)``, ``b_th(Omega)``
and the signal force.  The mechanical equation keeps the rotating-wave form
(no ``b_m^dag`` coupling).

Quadrature angles are measured from the pump phase ``arg(G0)``, which makes
every spectrum independent of that phase.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, InstabilityError, ParameterError
from .physparams import HBAR, SystemParams
from .sideband import MINUS_DAG, PLUS, SpectrumPoint, TransferRow, channel_weights

log = logging.getLogger(__name__)

__all__ = [
    "FullSystem",
    "TransferMatrix",
    "COND_LIMIT",
    "assemble",
    "solve_transfer",
    "transfer_batch",
    "spectrum",
    "quadrature_spectrum",
    "dynamics_matrix",
    "poles",
    "mechanical_pole",
    "is_stable",
    "PhononIntegral",
    "integrate_phonons",
    "mean_phonon_number",
    "mean_energy",
]

# row-equilibrated condition number above which a solve is rejected
COND_LIMIT = 1e13


@dataclass(frozen=True)
class FullSystem:
    matrix: np.ndarray  # 3x3, unknowns (a, a_-^dag, b_m)
    input_map: np.ndarray  # 3x4, channels (a_in, a_in,-^dag, b_th, f)
    Omega: float
    Delta: float


@dataclass(frozen=True)
class TransferMatrix:
    plus: TransferRow  # a_out(Omega)
    minus_dag: TransferRow  # a_out^dag(-Omega)
    mechanics: np.ndarray  # b_m response to the 4 channels
    condition: float
    Omega: float
    Delta: float

    @property
    def rows(self):
        return self.plus, self.minus_dag

    def as_array(self) -> np.ndarray:
        return np.array(
            [[r.c_ain, r.c_ain_minus, r.c_bth, r.c_f] for r in self.rows],
            dtype=complex,
        )


def dynamics_matrix(sys: SystemParams, Delta: float) -> np.ndarray:
    """K such that the frequency-domain system reads ``(K - i Omega) x = inputs``."""
    G0 = sys.G0
    return np.array(
        [
            [sys.gamma + 1j * Delta, 0.0, 1j * G0],
            [0.0, sys.gamma - 1j * Delta, -1j * np.conj(G0)],
            [1j * np.conj(G0), 1j * G0, sys.gamma_m + 1j * sys.omega_m],
        ],
        dtype=complex,
    )


def _input_map(sys: SystemParams) -> np.ndarray:
    B = np.zeros((3, 4), dtype=complex)
    B[0, 0] = B[1, 1] = math.sqrt(2.0 * sys.gamma)
    B[2, 2] = math.sqrt(2.0 * sys.gamma_m)
    B[2, 3] = 1.0
    return B


def assemble(sys: SystemParams, Omega: float, Delta: float) -> FullSystem:
    if not Omega > 0:
        raise ParameterError("Omega", f"must be > 0 (use S(-Omega) = S(Omega)), got {Omega!r}")
    M = dynamics_matrix(sys, Delta) - 1j * Omega * np.eye(3)
    return FullSystem(matrix=M, input_map=_input_map(sys), Omega=float(Omega), Delta=float(Delta))


def transfer_batch(sys: SystemParams, Omega, Delta: float, check: bool = True):
    """Solve at many frequencies at once.

    Returns ``(T, X, cond)``: ``T[n]`` is the 2x4 output map (rows a_out(Omega),
    a_out^dag(-Omega)), ``X[n]`` the 3x4 intracavity/mechanical response and
    ``cond[n]`` the row-equilibrated condition number.
    """
    Omega = np.atleast_1d(np.asarray(Omega, dtype=float))
    if np.any(~(Omega > 0)):
        bad = Omega[~(Omega > 0)][0]
        raise ParameterError("Omega", f"must be > 0 (use S(-Omega) = S(Omega)), got {bad!r}")
    K = dynamics_matrix(sys, Delta)
    M = K[None, :, :] - 1j * Omega[:, None, None] * np.eye(3)[None]
    B = _input_map(sys)
    # row scaling changes neither the solution nor the physics, only the conditioning
    scale = np.max(np.abs(M), axis=2, keepdims=True)
    zero_row = np.any(scale[:, :, 0] == 0, axis=1)
    scale = np.where(scale == 0, 1.0, scale)
    Ms = M / scale
    Bs = B[None, :, :] / scale
    cond = np.full(Omega.shape, np.inf)
    ok = ~zero_row
    if np.any(ok):
        cond[ok] = np.linalg.cond(Ms[ok])
    if check:
        bad = ~(cond < COND_LIMIT)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise InstabilityError(
                f"linear system is singular or near-singular at Omega = {Omega[i]:.17g} rad/s "
                f"(condition number {cond[i]:.3g})",
                Omega=float(Omega[i]),
            )
    if not check and np.any(zero_row):
        raise InstabilityError("linear system is exactly singular", Omega=float(Omega[int(np.argmax(zero_row))]))
    X = np.linalg.solve(Ms, Bs)
    T = math.sqrt(2.0 * sys.gamma) * X[:, :2, :]
    T[:, 0, 0] -= 1.0
    T[:, 1, 1] -= 1.0
    return T, X, cond


def solve_transfer(sys: SystemParams, Omega: float, Delta: float) -> TransferMatrix:
    assemble(sys, Omega, Delta)  # domain check
    T, X, cond = transfer_batch(sys, Omega, Delta)
    nu = float(Omega) - sys.omega_m
    plus = TransferRow(*(complex(v) for v in T[0, 0]), PLUS, nu)
    minus = TransferRow(*(complex(v) for v in T[0, 1]), MINUS_DAG, nu)
    return TransferMatrix(plus, minus, X[0, 2].copy(), float(cond[0]), float(Omega), float(Delta))


def _spectrum_from_T(T, theta_eff, n_T):
    h = (np.exp(-1j * theta_eff) * T[:, 0, :3] + np.exp(1j * theta_eff) * T[:, 1, :3]) / math.sqrt(2.0)
    return np.sum(np.abs(h) ** 2 * channel_weights(n_T)[None, :], axis=1)


def spectrum(sys: SystemParams, Omega, Delta: float, theta: float = 0.0):
    """Noise spectrum of the quadrature at angle ``theta`` from the pump phase (array in, array out)."""
    Omega = np.asarray(Omega, dtype=float)
    T, _, _ = transfer_batch(sys, Omega.ravel(), Delta)
    S = _spectrum_from_T(T, theta + sys.pump_phase, sys.n_T)
    return S.item() if Omega.ndim == 0 else S.reshape(Omega.shape)


def quadrature_spectrum(sys: SystemParams, Omega: float, Delta: float, theta: float = 0.0) -> SpectrumPoint:
    return SpectrumPoint(float(Omega) - sys.omega_m, float(spectrum(sys, Omega, Delta, theta)))


def poles(sys: SystemParams, Delta: float) -> np.ndarray:
    """Eigenvalues lambda of K; each mode evolves as exp(-lambda t)."""
    return np.linalg.eigvals(dynamics_matrix(sys, Delta))


def mechanical_pole(sys: SystemParams, Delta: float) -> complex:
    """Eigenvalue whose eigenvector is dominated by the mechanical amplitude.

    Its real part is the effective damping gamma_m + eta_r, its imaginary part
    the shifted mechanical frequency.
    """
    w, v = np.linalg.eig(dynamics_matrix(sys, Delta))
    weight = np.abs(v[2, :]) / np.linalg.norm(v, axis=0)
    return complex(w[int(np.argmax(weight))])


def is_stable(sys: SystemParams, Delta: float) -> bool:
    return bool(np.all(poles(sys, Delta).real > 0))


@dataclass(frozen=True)
class PhononIntegral:
    n_phonon: float
    n_points: int
    relative_change: float
    thermal_part: float
    optical_part: float


def _phonon_integrand(sys, Delta, Omega):
    _, X, _ = transfer_batch(sys, Omega, Delta)
    Hb = X[:, 2, :]
    # normal-ordered weights: a_in carries 0, a_in^dag(-Omega) carries 1, b_th carries n_T
    return np.abs(Hb[:, 1]) ** 2, sys.n_T * np.abs(Hb[:, 2]) ** 2


def integrate_phonons(
    sys: SystemParams,
    Delta: float,
    *,
    rtol: float = 1e-6,
    n_start: int = 4096,
    max_points: int = 2**21,
    reach: float = 1e9,
) -> PhononIntegral:
    """Mean phonon number <b^dag b> = integral over Omega > 0 of the normal-ordered response.

    The offset from the mechanical pole is mapped through ``nu = width * sinh(s)``:
    the Lorentzian core stays uniformly resolved while algebraic tails become
    exponentially decaying, so a uniform trapezoid grid in ``s`` converges
    fast.  The grid is doubled until the relative change drops below ``rtol``.
    ``reach`` sets the upper limit as a multiple of the pole width (the
    truncated tail is a fraction ~1/reach of the total).
    """
    if Delta < 0:
        # anti-damping from the sideband resonant with the mirror; at or above
        # gamma_m any residual pole width is a higher-order artifact
        anti = sys.G0_abs**2 * sys.gamma / (sys.gamma**2 + (sys.omega_m + Delta) ** 2)
        if anti >= sys.gamma_m:
            raise InstabilityError(
                f"negative damping |eta_r| = {anti:.6g} rad/s is not below gamma_m = {sys.gamma_m:.6g} rad/s; "
                "feedback stabilization is not modeled"
            )
    if not is_stable(sys, Delta):
        raise InstabilityError(
            f"no stable steady state at Delta = {Delta:.6g} rad/s (pump-induced anti-damping "
            "exceeds the intrinsic damping); feedback stabilization is not modeled"
        )
    pole = mechanical_pole(sys, Delta)
    width, center = pole.real, pole.imag
    if not center > 0:
        raise AccuracyError(f"mechanical pole at non-positive frequency {center:.6g} rad/s")
    s_lo = math.asinh((1e-9 * center - center) / width)
    s_hi = math.asinh(reach)

    def trapezoid(n):
        s = np.linspace(s_lo, s_hi, n + 1)
        Omega = center + width * np.sinh(s)
        jac = width * np.cosh(s)
        opt, th = _phonon_integrand(sys, Delta, Omega)
        h = (s_hi - s_lo) / n
        wts = np.full(n + 1, h)
        wts[0] = wts[-1] = 0.5 * h
        return float(np.dot(wts, opt * jac)) / (2 * math.pi), float(np.dot(wts, th * jac)) / (2 * math.pi)

    n = n_start
    prev = trapezoid(n)
    while True:
        n *= 2
        cur = trapezoid(n)
        tot_prev, tot_cur = sum(prev), sum(cur)
        change = abs(tot_cur - tot_prev) / max(abs(tot_cur), 1e-300)
        log.debug("phonon integral n=%d value=%.17g change=%.3g", n, tot_cur, change)
        if change < rtol or tot_cur == 0.0:
            return PhononIntegral(tot_cur, n + 1, change, cur[1], cur[0])
        if n >= max_points:
            raise AccuracyError(
                f"phonon integral did not converge: relative change {change:.3g} at {n + 1} points"
            )
        prev = cur


def mean_phonon_number(sys: SystemParams, Delta: float, **kwargs) -> float:
    return integrate_phonons(sys, Delta, **kwargs).n_phonon


def mean_energy(sys: SystemParams, Delta: float, **kwargs) -> float:
    """hbar omega_m (<b^dag b> + 1/2) in joules."""
    return HBAR * sys.omega_m * (mean_phonon_number(sys, Delta, **kwargs) + 0.5)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backaction import fullmodel, sideband
from backaction.errors import InstabilityError, ParameterError
from backaction.physparams import HBAR, SystemParams, coupling_for_damping


def make(eta_r, gamma_m=1e-2, n_T=0.0, sign=1, gamma=1.0, omega_m=1e3, phase=0.0):
    g0 = coupling_for_damping(gamma, eta_r)
    return SystemParams(gamma, gamma_m, omega_m, g0 * complex(math.cos(phase), math.sin(phase)), n_T, sign)


def test_zero_coupling_block_diagonal():
    s = SystemParams(1.0, 1e-2, 1e3)
    fs = fullmodel.assemble(s, 1e3 + 0.2, s.Delta)
    M = fs.matrix
    assert M[0, 2] == M[2, 0] == M[1, 2] == M[2, 1] == 0
    Om, D = 1e3 + 0.2, s.Delta
    det = (1.0 - 1j * (Om - D)) * (1.0 - 1j * (Om + D)) * (1e-2 + 1j * (1e3 - Om))
    assert np.linalg.det(M) == pytest.approx(det, rel=1e-12)
    tm = fullmodel.solve_transfer(s, Om, D)
    assert tm.plus.c_bth == tm.plus.c_f == tm.minus_dag.c_bth == tm.minus_dag.c_f == 0
    x = Om - D
    assert tm.plus.c_ain == pytest.approx((1 + 1j * x) / (1 - 1j * x), rel=1e-14)
    assert abs(tm.plus.c_ain) == pytest.approx(1.0, rel=1e-14)


def test_dropping_far_coupling_gives_resonant_equations():
    s = make(0.1, phase=0.7)
    nu = 0.03
    M = fullmodel.assemble(s, s.omega_m + nu, s.omega_m).matrix
    # resonant 2x2 block (a, b_m) after dropping the a_-^dag coupling
    block = M[np.ix_([0, 2], [0, 2])]
    expected = np.array([[1.0 - 1j * nu, 1j * s.G0], [1j * np.conj(s.G0), s.gamma_m - 1j * nu]])
    np.testing.assert_allclose(block, expected, rtol=1e-14, atol=1e-13)


def test_omega_domain():
    s = make(0.1)
    with pytest.raises(ParameterError):
        fullmodel.assemble(s, 0.0, s.Delta)
    with pytest.raises(ParameterError):
        fullmodel.spectrum(s, [1.0, -2.0], s.Delta)


def test_rows_match_rsb_to_first_order():
    s = make(0.05, n_T=0.0)
    tm = fullmodel.solve_transfer(s, s.omega_m, s.omega_m)
    plus, _ = sideband.solve_positive(s, 0.0)
    r = s.gamma / s.omega_m
    assert abs(tm.plus.c_ain - plus.c_ain) < 10 * r
    assert abs(tm.plus.c_bth - plus.c_bth) < 10 * r
    assert tm.condition < fullmodel.COND_LIMIT
    assert tm.as_array().shape == (2, 4)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 0), st.floats(-10, 10))
def test_flux_close_to_unitary(log_eta, nu_scale):
    s = make(10**log_eta, 1e-3)
    nu = nu_scale * (s.gamma_m + 10**log_eta)
    tm = fullmodel.solve_transfer(s, s.omega_m + nu, s.omega_m)
    p = tm.plus
    # optical channels add, the phonon-creation leg subtracts
    flux = abs(p.c_ain) ** 2 - abs(p.c_ain_minus) ** 2 + abs(p.c_bth) ** 2
    assert flux == pytest.approx(1.0, abs=20 * (s.gamma / s.omega_m) ** 2)


def test_vacuum_without_coupling():
    s = SystemParams(1.0, 1e-2, 1e3, 0.0, 50.0, 1)
    for th in (0.0, 1.0, math.pi / 2):
        S = fullmodel.spectrum(s, s.omega_m + np.linspace(-1, 1, 9), s.Delta, th)
        np.testing.assert_allclose(S, 0.5, atol=1e-14)


def test_amplitude_quadrature_excess_is_bounded_by_estimate():
    s = make(1e-3, 1e-4, omega_m=1e3)
    S = fullmodel.spectrum(s, s.omega_m, s.omega_m, 0.0)
    est = 2 * (1e-3) ** 2 / abs(s.gamma_m + 1e-3) ** 2 * (s.gamma / s.omega_m) ** 2
    assert abs(S - 0.5) <= est


def test_phase_quadrature_excess_grows_as_pump_squared():
    pumps = np.array([1e-4, 2e-4, 4e-4])
    ex = [fullmodel.spectrum(make(e, 1e-4, omega_m=1e2), 1e2, 1e2, math.pi / 2) - 0.5 for e in pumps]
    d0 = [fullmodel.spectrum(make(e, 1e-4, omega_m=1e2), 1e2, 1e2, 0.0) - 0.5 for e in pumps]
    diff = np.array(ex) - np.array(d0)
    assert np.all(diff > 0)
    # S_add ~ eta_r^2 / (gamma_m + eta_r)^2 (gamma/omega_m)^2 with a gamma_m-dependent prefactor
    oracle = pumps**2 * (2 * pumps + 1e-4) / (1e-4 + pumps) ** 2 / pumps
    np.testing.assert_allclose(diff / diff[0], oracle / oracle[0], rtol=1e-3)


def test_exact_zero_frequency_residual():
    # at nu = 0 the phase-quadrature excess is r^2 eta (2 eta + gamma_m) / (gamma_m + eta)^2 to leading order
    for r in (1e-2, 1e-3):
        s = make(5e-4, 1e-4, omega_m=1.0 / r)
        ex = fullmodel.spectrum(s, s.omega_m, s.omega_m, math.pi / 2) - 0.5
        e, gm = 5e-4, 1e-4
        assert ex == pytest.approx(r**2 * e * (2 * e + gm) / (gm + e) ** 2, rel=5e-2)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_theta_pi_periodic_and_phase_invariant(theta, phase):
    s = make(0.02, n_T=3.0)
    Om = s.omega_m + np.linspace(-0.1, 0.1, 5)
    a = fullmodel.spectrum(s, Om, s.Delta, theta)
    np.testing.assert_allclose(fullmodel.spectrum(s, Om, s.Delta, theta + math.pi), a, rtol=1e-12)
    np.testing.assert_allclose(fullmodel.spectrum(s.with_phase(phase), Om, s.Delta, theta), a, rtol=1e-12)


def test_scalar_and_array_spectrum():
    s = make(0.02, n_T=3.0)
    v = fullmodel.spectrum(s, s.omega_m + 0.01, s.Delta)
    assert isinstance(v, float)
    p = fullmodel.quadrature_spectrum(s, s.omega_m + 0.01, s.Delta)
    assert p.nu == pytest.approx(0.01) and p.S_y == v


def test_stability_and_poles():
    s = make(1e-3, 1e-3)
    assert fullmodel.is_stable(s, s.Delta)
    pole = fullmodel.mechanical_pole(s, s.Delta)
    # weak coupling: width gamma_m + eta_r up to O(eta_r / gamma)
    assert pole.real == pytest.approx(2e-3, rel=2e-3)
    assert pole.imag == pytest.approx(s.omega_m, rel=1e-4)
    h = make(0.02, 1e-2, sign=-1)
    assert not fullmodel.is_stable(h, h.Delta)
    with pytest.raises(InstabilityError):
        fullmodel.integrate_phonons(h, h.Delta)


def test_singular_system_raises_with_frequency():
    s = SystemParams(1.0, 0.0, 1e3)
    with pytest.raises(InstabilityError) as info:
        fullmodel.spectrum(s, [999.0, 1e3], s.Delta)
    assert info.value.Omega == 1e3


def test_phonons_without_coupling_are_thermal():
    s = SystemParams(1.0, 1e-3, 1e3, 0.0, 42.0, 1)
    res = fullmodel.integrate_phonons(s, s.Delta)
    assert res.n_phonon == pytest.approx(42.0, rel=1e-6)
    assert res.optical_part == 0.0


def test_cooling_example():
    s = make(1e-2, 1e-4, n_T=100)
    n = fullmodel.mean_phonon_number(s, s.Delta)
    assert n == pytest.approx(1e-4 * 100 / (1e-4 + 1e-2), rel=1e-2)
    assert 1e-4 * 100 / (1e-4 + 1e-2) == pytest.approx(0.9901, rel=1e-4)


def test_vacuum_heating_example():
    s = make(0.5e-3, 1e-3, n_T=0.0, sign=-1)
    assert fullmodel.mean_phonon_number(s, s.Delta) == pytest.approx(1.0, rel=1e-2)


def test_grid_doubling_is_converged():
    s = make(1e-2, 1e-4, n_T=100)
    a = fullmodel.integrate_phonons(s, s.Delta, rtol=1e-7)
    b = fullmodel.integrate_phonons(s, s.Delta, n_start=2 * (a.n_points - 1))
    assert abs(b.n_phonon - a.n_phonon) / a.n_phonon < 1e-4
    assert fullmodel.mean_energy(s, s.Delta) == pytest.approx(HBAR * s.omega_m * (a.n_phonon + 0.5), rel=1e-5)

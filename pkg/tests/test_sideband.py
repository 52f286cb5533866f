import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backaction import sideband
from backaction.errors import ConsistencyError, InstabilityError, ParameterError
from backaction.physparams import HBAR, SystemParams, coupling_for_damping
from backaction.sideband import MINUS, MINUS_DAG, PLUS, TransferRow


def make(eta_r, gamma_m=1e-2, n_T=0.0, sign=1, gamma=1.0, omega_m=1e3, phase=0.0):
    g0 = coupling_for_damping(gamma, eta_r)
    return SystemParams(gamma, gamma_m, omega_m, g0 * complex(math.cos(phase), math.sin(phase)), n_T, sign)


def oracle_rows(s, nu):
    """Direct 2x2 solve of the resonant cavity sideband coupled to the mirror.

    Returns coefficients of the resonant output on (vacuum, thermal, force) and
    the far-sideband reflection.  Cooling side: unknowns a(Omega), b_m.
    Heating side: unknowns a^dag(-Omega), b_m, and the row is for a_out^dag(-Omega).
    """
    g, gm, G = s.gamma, s.gamma_m, s.G0
    if s.detuning_sign > 0:
        M = np.array([[g - 1j * nu, 1j * G], [1j * np.conj(G), gm - 1j * nu]])
    else:
        M = np.array([[g - 1j * nu, -1j * np.conj(G)], [1j * G, gm - 1j * nu]])
    B = np.array([[math.sqrt(2 * g), 0, 0], [0, math.sqrt(2 * gm), 1.0]])
    X = np.linalg.solve(M, B)
    row = math.sqrt(2 * g) * X[0]
    row[0] -= 1.0
    far = 2 * s.omega_m + nu
    return row, (g + 1j * far) / (g - 1j * far)


@settings(max_examples=200)
@given(
    st.floats(-3, 1),
    st.floats(-4, -1),
    st.floats(-20, 20),
    st.floats(0, 2 * math.pi),
)
def test_positive_rows_match_direct_solve(log_eta, log_gm, nu_scale, phase):
    s = make(10**log_eta, 10**log_gm, phase=phase)
    nu = nu_scale * (s.gamma_m + 10**log_eta)
    plus, minus = sideband.solve_positive(s, nu)
    row, far = oracle_rows(s, nu)
    np.testing.assert_allclose([plus.c_ain, plus.c_bth, plus.c_f], row, rtol=1e-9, atol=1e-12)
    assert plus.c_ain_minus == 0 and plus.output_label == PLUS
    assert minus.output_label == MINUS_DAG
    assert minus.c_ain_minus == pytest.approx(far, rel=1e-14)
    assert minus.c_ain == minus.c_bth == minus.c_f == 0


@settings(max_examples=200)
@given(st.floats(0.01, 0.99), st.floats(-4, -1), st.floats(-20, 20), st.floats(0, 2 * math.pi))
def test_negative_rows_match_direct_solve(frac, log_gm, nu_scale, phase):
    gm = 10**log_gm
    s = make(frac * gm, gm, sign=-1, phase=phase)
    nu = nu_scale * gm
    minus, plus = sideband.solve_negative(s, nu)
    assert minus.output_label == MINUS and plus.output_label == PLUS
    row, far = oracle_rows(s, nu)
    dag = minus.conjugate()
    np.testing.assert_allclose([dag.c_ain_minus, dag.c_bth, dag.c_f], row, rtol=1e-9, atol=1e-12)
    assert plus.c_ain == pytest.approx(far, rel=1e-14)


def test_zero_pump_pure_phase():
    s = SystemParams(1.0, 1e-2, 1e3)
    for solve, sign in ((sideband.solve_positive, 1), (sideband.solve_negative, -1)):
        a, b = solve(s.replace(detuning_sign=sign), 0.37)
        for r in (a, b):
            c = r.c_ain if r.output_label == PLUS else r.c_ain_minus
            assert abs(c) == pytest.approx(1.0, rel=1e-15)
            assert r.c_bth == 0 and r.c_f == 0


def test_positive_example_flux():
    # |1 - 2 eta_r / D|^2 = 1 - 4 eta_r gamma_m / |D|^2 with D = 0.26 at nu = 0
    s = make(0.25, 0.01)
    plus, _ = sideband.solve_positive(s, 0.0)
    assert abs(plus.c_ain) ** 2 == pytest.approx(1 - 4 * 0.25 * 0.01 / 0.26**2, rel=1e-13)
    assert abs(plus.c_bth) ** 2 == pytest.approx(4 * 0.25 * 0.01 / 0.26**2, rel=1e-13)
    assert abs(plus.c_ain) ** 2 + abs(plus.c_bth) ** 2 == pytest.approx(1.0, abs=1e-14)


def test_far_detuned_mechanics_transparent():
    s = make(0.25, 0.01)
    plus, _ = sideband.solve_positive(s, 1e9)
    assert abs(plus.c_ain) == pytest.approx(1.0, abs=1e-9)
    assert abs(plus.c_bth) < 1e-9


def test_negative_example_amplification():
    s = make(0.005, 0.01, sign=-1)
    minus, _ = sideband.solve_negative(s, 0.0)
    gain = abs(minus.c_ain_minus) ** 2
    assert gain == pytest.approx(1 + 4 * 0.005 * 0.01 / 0.005**2, rel=1e-12)
    assert gain > 1
    assert gain - abs(minus.c_bth) ** 2 == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=300)
@given(st.floats(-6, 2), st.floats(-6, -1), st.floats(-50, 50))
def test_flux_identity_positive(log_eta, log_gm, nu_scale):
    s = make(10**log_eta, 10**log_gm)
    nu = nu_scale * (s.gamma_m + 10**log_eta)
    plus, _ = sideband.solve_positive(s, nu)
    assert abs(plus.c_ain) ** 2 + abs(plus.c_bth) ** 2 == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=300)
@given(st.floats(0.0, 0.999), st.floats(-6, -1), st.floats(-50, 50))
def test_amplifier_identity_negative(frac, log_gm, nu_scale):
    gm = 10**log_gm
    s = make(frac * gm, gm, sign=-1)
    minus, _ = sideband.solve_negative(s, nu_scale * gm)
    g2 = abs(minus.c_ain_minus) ** 2
    assert (g2 - abs(minus.c_bth) ** 2 - 1.0) / g2 == pytest.approx(0.0, abs=1e-12)


def test_wrong_sign_rejected():
    with pytest.raises(ParameterError):
        sideband.solve_positive(make(0.1, sign=-1), 0.0)
    with pytest.raises(ParameterError):
        sideband.solve_negative(make(0.1), 0.0)


def test_closed_spectrum_examples():
    assert sideband.closed_spectrum(make(0.3, n_T=0.0), 0.1) == pytest.approx(0.5, abs=1e-15)
    s = make(0.25, 0.01, n_T=10)
    assert sideband.closed_spectrum(s, 0.0) == pytest.approx(0.5 + 0.05 / 0.0676, rel=1e-13)
    assert sideband.closed_spectrum(s, 0.0) == pytest.approx(1.2396, abs=1e-4)
    assert sideband.closed_spectrum(make(0.005, 0.01, sign=-1), 0.0) > 0.5
    p = sideband.spectral_density_closed(s, 0.0)
    assert p.nu == 0.0 and p.S_y == sideband.closed_spectrum(s, 0.0)


@settings(max_examples=200)
@given(
    st.floats(-4, 1),
    st.floats(-4, -1),
    st.floats(0, 1e3),
    st.floats(-20, 20),
    st.floats(0, 2 * math.pi),
    st.sampled_from([1, -1]),
)
def test_rows_reproduce_closed_spectrum_any_theta(log_eta, log_gm, n_T, nu_scale, theta, sign):
    gm = 10**log_gm
    e = 10**log_eta if sign > 0 else 0.9 * gm * 10**log_eta / 10
    s = make(e, gm, n_T=n_T, sign=sign)
    nu = nu_scale * (gm + e)
    S_rows = sideband.quadrature_spectrum_from_rows(sideband.solve_rows(s, nu), theta, n_T)
    S_closed = sideband.closed_spectrum(s, nu)
    assert S_rows == pytest.approx(S_closed, rel=1e-11)
    assert S_closed >= 0.5
    assert sideband.closed_spectrum(s, -nu) == pytest.approx(S_closed, rel=1e-13)


def test_rows_array_input():
    s = make(0.1, n_T=3.0)
    nu = np.linspace(-1, 1, 7)
    S = sideband.quadrature_spectrum_from_rows(sideband.solve_positive(s, nu), 0.4, 3.0)
    np.testing.assert_allclose(S, sideband.closed_spectrum(s, nu), rtol=1e-12)


def test_unit_vacuum_channel_gives_half():
    p = TransferRow(1.0, 0.0, 0.0, 0.0, PLUS, 0.0)
    m = TransferRow(0.0, 1.0, 0.0, 0.0, MINUS_DAG, 0.0)
    for th in (0.0, 0.3, math.pi / 2):
        assert sideband.quadrature_spectrum_from_rows([p, m], th, 5.0) == pytest.approx(0.5, abs=1e-15)


def test_row_pairing_errors():
    p = TransferRow(1.0, 0.0, 0.0, 0.0, PLUS, 0.0)
    m = TransferRow(0.0, 1.0, 0.0, 0.0, MINUS_DAG, 0.1)
    with pytest.raises(ConsistencyError):
        sideband.quadrature_spectrum_from_rows([p, m], 0.0, 0.0)
    with pytest.raises(ConsistencyError):
        sideband.quadrature_spectrum_from_rows([p, p], 0.0, 0.0)
    with pytest.raises(ConsistencyError):
        sideband.quadrature_spectrum_from_rows([p], 0.0, 0.0)
    with pytest.raises(ConsistencyError):
        p.conjugate()


def test_energy_examples():
    for sign in (1, -1):
        s = SystemParams(1.0, 1e-2, 1e3, 0.0, 7.0, sign)
        assert sideband.mean_energy_closed(s) == pytest.approx(HBAR * 1e3 * 7.5, rel=1e-14)
    assert sideband.mean_phonon_closed(make(1e6, 1e-2, n_T=100)) < 1e-5
    s = make(0.005, 0.01, n_T=10, sign=-1)
    assert sideband.mean_energy_closed(s) / (HBAR * s.omega_m) == pytest.approx(21.5, rel=1e-12)


def test_heating_instability():
    for frac in (1.0, 1.5):
        with pytest.raises(InstabilityError):
            sideband.mean_phonon_closed(make(frac * 0.01, 0.01, sign=-1))


@given(st.floats(1e-4, 1e2), st.floats(1.0001, 10.0))
def test_cooling_monotone(eta_r, factor):
    a = sideband.mean_energy_closed(make(eta_r, 1e-2, n_T=5.0))
    b = sideband.mean_energy_closed(make(eta_r * factor, 1e-2, n_T=5.0))
    assert b < a

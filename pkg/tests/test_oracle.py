import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlqsim.core import InvalidArgument, SegmentProfile, uniform_segment
from nlqsim.fixtures import sgvm_fixture
from nlqsim.nonlinearity import apm_profile, periodic_pattern
from nlqsim.oracle import (analytic_heralding_efficiency, first_order_jsa, interferometer_pm,
                           phase_matching_function, walkoff_and_slopes)
from nlqsim.propagator import propagate_segment

from conftest import degenerate_modes

VP = 1.3e8


def walking_segment(length, ws, wi=0.0, gamma=-150.0, dk=0.0, poling=None):
    vel = {"signal": 1 / (1 / VP + ws), "idler": 1 / (1 / VP + wi), "pump": VP}
    return uniform_segment(length, vel, gamma, delta_k_bar=dk, poling=poling)


def test_uniform_segment_is_a_sinc():
    sig, idl, _ = degenerate_modes(n=21, span=2 * np.pi * 4e12)
    L, w = 2e-3, 4e-10
    phi = phase_matching_function(walking_segment(L, w), sig, idl).values
    x = 0.5 * sig.detunings * w * L
    expected = 150.0 * L / np.sqrt(2 * np.pi) * np.abs(np.sinc(x / np.pi))
    assert np.allclose(np.abs(phi[:, 10]), expected, rtol=1e-8, atol=1e-12 * expected.max())
    # columns do not depend on the idler detuning when the idler does not walk off
    assert np.allclose(np.abs(phi[:, 0]), np.abs(phi[:, 10]), rtol=1e-10)


def test_sinc_zero_at_two_pi():
    sig, idl, _ = degenerate_modes(n=21, span=2 * np.pi * 4e12)
    L = 2e-3
    d = sig.detunings[15]
    w = 2 * np.pi / (d * L)
    phi = phase_matching_function(walking_segment(L, w), sig, idl).values
    assert abs(phi[15, 10]) < 1e-9 * abs(phi[10, 10])
    assert abs(phi[10, 10]) == pytest.approx(150.0 * L / np.sqrt(2 * np.pi), rel=1e-12)


def test_quasi_phase_matching_factor():
    dk = 2e6
    lc = np.pi / dk
    n = 40
    seg = walking_segment(n * lc, 0.0, dk=dk, poling=periodic_pattern(2 * lc, n * lc))
    sig, idl, _ = degenerate_modes(n=5)
    phi = phase_matching_function(seg, sig, idl).values
    # 16 Simpson intervals per domain leave a ~1e-7 quadrature error
    assert abs(phi[2, 2]) == pytest.approx(2 / np.pi * 150.0 * n * lc / np.sqrt(2 * np.pi), rel=1e-6)
    unpoled = phase_matching_function(walking_segment(n * lc, 0.0, dk=dk), sig, idl).values
    assert abs(unpoled[2, 2]) < 1e-6 * abs(phi[2, 2])


@pytest.mark.parametrize("dominant", [False, True])
def test_angular_phase_matching_amplitude(dominant):
    period, l_eff, g0 = 20e-6, 0.5e-3, -200.0
    length = 8 * l_eff
    z, g = apm_profile(g0, l_eff, period, length, dominant_term=dominant)
    n = z.size
    vel = {k: np.full(n, VP) for k in ("signal", "idler", "pump")}
    kbar = {"pump": np.full(n, 4 * np.pi / period), "signal": np.zeros(n), "idler": np.zeros(n)}
    seg = SegmentProfile(length, z, vel, kbar, g)
    sig, idl, _ = degenerate_modes(n=3)
    phi = phase_matching_function(seg, sig, idl).values
    assert abs(phi[1, 1]) == pytest.approx(2 * abs(g0) * l_eff / (3 * np.pi), rel=2e-3)


def test_interferometer_doubles_or_cancels():
    sig, idl, _ = degenerate_modes(n=9)
    phi = phase_matching_function(walking_segment(1e-3, 2e-10), sig, idl)
    c = 4
    assert interferometer_pm(phi, 0.0, 1e-12, 0.0).values[c, c] == pytest.approx(2 * phi.values[c, c])
    assert abs(interferometer_pm(phi, np.pi, 1e-12, 0.0).values[c, c]) < 1e-12 * abs(phi.values[c, c])


def test_interferometer_matches_longer_section():
    # two back-to-back identical sections: spacer walk-off equals the section's own
    sig, idl, _ = degenerate_modes(n=15, span=2 * np.pi * 4e12)
    L, w = 1e-3, 3e-10
    one = phase_matching_function(walking_segment(L, w), sig, idl)
    two = phase_matching_function(walking_segment(2 * L, w), sig, idl)
    ref = interferometer_pm(one, 0.0, w * L, 0.0)
    assert np.allclose(np.abs(two.values), np.abs(ref.values), rtol=1e-9, atol=1e-12 * abs(two.values).max())


def test_walkoff_and_slopes():
    a = walking_segment(1e-3, 2e-10, -1e-10)
    spacer = walking_segment(0.5e-3, 4e-10, -2e-10, gamma=0.0)
    out = walkoff_and_slopes([a, spacer, a], n_first=1)
    assert out["tau_s"] == pytest.approx(2e-13) and out["tau_i"] == pytest.approx(-1e-13)
    assert out["T_s"] == pytest.approx(6e-13) and out["T_i"] == pytest.approx(-3e-13)
    assert out["theta_pm"] == pytest.approx(np.degrees(np.arctan2(-2, -1)))
    assert out["theta_pm"] == pytest.approx(out["theta_int"])


def test_heralding_limits():
    assert analytic_heralding_efficiency(0.0, 0.0, 1e-2) == 1.0
    assert analytic_heralding_efficiency(1e-9, 0.0, 1e-2) == pytest.approx(1.0, abs=1e-6)
    assert analytic_heralding_efficiency(1e-9, -4.01, 1e-2) == pytest.approx(1.0, abs=1e-6)
    a, L = 51.12, 2e-2
    x = a * L
    assert analytic_heralding_efficiency(a, 0.0, L) == pytest.approx(x * x / (2 * (np.expm1(x) - x)), rel=1e-12)
    with pytest.raises(InvalidArgument):
        analytic_heralding_efficiency(-1.0, 0.0, 1.0)


@given(a=st.floats(0.1, 200.0), dk=st.floats(-50.0, 50.0))
@settings(max_examples=50)
def test_heralding_decreases_with_length(a, dk):
    vals = [analytic_heralding_efficiency(a, dk, L) for L in (0.01, 0.02, 0.04)]
    assert all(0 < v <= 1 for v in vals)
    assert vals[0] >= vals[1] >= vals[2]


def test_first_order_jsa_scales_with_root_energy():
    fx = sgvm_fixture(n=20, domains=20)
    phi = phase_matching_function(fx.segment, fx.signal, fx.idler)
    j1 = first_order_jsa(fx.pump(1e-13), phi).values
    j4 = first_order_jsa(fx.pump(4e-13), phi).values
    assert np.allclose(j4, 2 * j1, rtol=1e-12)


def test_first_order_jsa_matches_low_gain_block():
    fx = sgvm_fixture(n=20, domains=60)
    pump = fx.pump(1e-17)
    u = propagate_segment(fx.segment, pump, fx.signal, fx.idler)
    jsa = first_order_jsa(pump, phase_matching_function(fx.segment, fx.signal, fx.idler)).values
    block = u.U_si / fx.signal.grid.delta_omega
    assert np.linalg.norm(np.abs(block) - np.abs(jsa)) / np.linalg.norm(jsa) < 1e-3


@given(alpha=st.floats(0.0, 200.0), dk=st.floats(0.01, 50.0), L=st.floats(1e-3, 0.1))
@settings(max_examples=50)
def test_heralding_formula_even_in_mismatch(alpha, dk, L):
    a = analytic_heralding_efficiency(alpha, dk, L)
    assert analytic_heralding_efficiency(alpha, -dk, L) == pytest.approx(a, rel=1e-12)
    assert 0.0 < a <= 1.0 + 1e-12

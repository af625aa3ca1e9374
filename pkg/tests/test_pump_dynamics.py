import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlqsim.core import InvalidArgument, PumpField, uniform_segment
from nlqsim.fixtures import QPG_SPM, db_per_cm_to_alpha, qpg_fixture
from nlqsim.pump_dynamics import (apply_pump_loss, autocorrelation_matrix, evolve_pump_spm,
                                  pump_autocorrelation)


@pytest.fixture(scope="module")
def qpg_pump():
    fx = qpg_fixture(n_signal=60, n_idler=60)
    return fx.pump(11e-12)


def test_autocorrelation_zero_pump(qpg_pump):
    zero = qpg_pump.with_amplitudes(np.zeros_like(qpg_pump.amplitudes))
    assert np.all(pump_autocorrelation(zero) == 0)


def test_autocorrelation_at_zero_is_energy(qpg_pump):
    e = pump_autocorrelation(qpg_pump)
    assert e[(e.size - 1) // 2].real == pytest.approx(qpg_pump.energy, rel=1e-12)


def test_autocorrelation_hermitian_and_bilinear(qpg_pump):
    rng = np.random.default_rng(1)
    b = qpg_pump.amplitudes * np.exp(1j * rng.uniform(0, 2 * np.pi, qpg_pump.amplitudes.size))
    p = qpg_pump.with_amplitudes(b)
    e = pump_autocorrelation(p)
    assert np.allclose(e[::-1], e.conj(), atol=1e-12 * abs(e).max())
    e2 = pump_autocorrelation(p.with_amplitudes(b * np.sqrt(2)))
    assert np.allclose(e2, 2 * e, rtol=1e-12, atol=1e-30)


def test_gaussian_autocorrelation_width(qpg_pump):
    # |beta|^2 Gaussian with rms width s_w: |beta| has rms width sqrt(2) s_w and
    # the autocorrelation of beta is again Gaussian with rms width 2 s_w in |E_p|
    # i.e. sqrt(2) times the amplitude width.
    g = qpg_pump.grid
    det = qpg_pump.mode.detunings
    amp = np.abs(qpg_pump.amplitudes)
    sig_amp = np.sqrt(np.sum(det ** 2 * amp) / np.sum(amp))
    e = np.abs(pump_autocorrelation(qpg_pump))
    shifts = (np.arange(e.size) - (e.size - 1) // 2) * g.delta_omega
    sig_e = np.sqrt(np.sum(shifts ** 2 * e) / np.sum(e))
    # direct-summation oracle for the same quantity
    direct = np.array([np.sum(np.conj(np.roll(qpg_pump.amplitudes, k)) * qpg_pump.amplitudes)
                       for k in range(-5, 6)]) * g.delta_omega
    centre = (e.size - 1) // 2
    assert np.allclose(np.abs(direct), e[centre - 5:centre + 6], rtol=1e-9)
    assert sig_e == pytest.approx(np.sqrt(2) * sig_amp, rel=1e-3)


def test_autocorrelation_matrix_layout():
    k = np.arange(5, dtype=complex)  # E(-2..2)
    m = autocorrelation_matrix(k, 2, 2)
    assert np.array_equal(m, np.array([[2, 1], [3, 2]]))


def _spm_segment(gamma, length=6e-3):
    v = {"signal": 1.3e8, "idler": 1.3e8, "pump": 1.3e8}
    return uniform_segment(length, v, -258.6, process="qfc", gamma_spm=gamma)


def test_spm_off_is_identity(qpg_pump):
    traj = evolve_pump_spm(qpg_pump, _spm_segment(0.0), 1e-4)
    assert np.array_equal(traj.final.amplitudes, qpg_pump.amplitudes)


def test_spm_conserves_energy(qpg_pump):
    traj = evolve_pump_spm(qpg_pump, _spm_segment(QPG_SPM), 2e-4)
    energies = np.sum(np.abs(traj.amplitudes) ** 2, axis=1) * qpg_pump.grid.delta_omega
    assert np.max(np.abs(energies / qpg_pump.energy - 1)) < 1e-8


def _time_domain_spm(pump: PumpField, gamma, length, oversample=8):
    """Split-step oracle without dispersion: A(t) picks up exp(i gamma |A|^2 L)."""
    det = pump.mode.detunings
    dw = pump.grid.delta_omega
    n = det.size * oversample
    t = (np.arange(n) - n // 2) * 2 * np.pi / (n * dw)
    kern = np.exp(-1j * np.outer(t, det))
    a = kern @ pump.amplitudes * dw / np.sqrt(2 * np.pi)
    a_out = a * np.exp(1j * gamma * np.abs(a) ** 2 * length)
    dt = t[1] - t[0]
    beta = kern.conj().T @ a_out * dt / np.sqrt(2 * np.pi)
    return t, a, beta


def test_spm_matches_time_domain_oracle(qpg_pump):
    length = 6e-3
    traj = evolve_pump_spm(qpg_pump, _spm_segment(QPG_SPM, length), 1e-4)
    t, a, beta_ref = _time_domain_spm(qpg_pump, QPG_SPM, length)
    beta = traj.final.amplitudes
    assert np.linalg.norm(beta - beta_ref) / np.linalg.norm(beta_ref) < 1e-3
    # peak nonlinear phase read back in the time domain
    det = qpg_pump.mode.detunings
    a_out = np.exp(-1j * np.outer(t, det)) @ beta * qpg_pump.grid.delta_omega / np.sqrt(2 * np.pi)
    k = int(np.argmax(np.abs(a)))
    phase = np.angle(a_out[k] / a[k])
    assert phase == pytest.approx(QPG_SPM * np.abs(a[k]) ** 2 * length, rel=0.02)


def test_spm_commutes_with_global_phase(qpg_pump):
    seg = _spm_segment(QPG_SPM)
    ph = np.exp(0.7j)
    a = evolve_pump_spm(qpg_pump.with_amplitudes(ph * qpg_pump.amplitudes), seg, 1e-3).final.amplitudes
    b = ph * evolve_pump_spm(qpg_pump, seg, 1e-3).final.amplitudes
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12 * np.abs(b).max())


def test_pump_loss(qpg_pump):
    assert np.array_equal(apply_pump_loss(qpg_pump, 1.0).amplitudes, qpg_pump.amplitudes)
    assert np.all(apply_pump_loss(qpg_pump, 0.0).amplitudes == 0)
    alpha = db_per_cm_to_alpha(2.22)
    assert alpha == pytest.approx(51.12, rel=1e-3)
    dz = 10e-6
    out = apply_pump_loss(qpg_pump, np.exp(-alpha * dz / 2))
    assert out.energy / qpg_pump.energy == pytest.approx(np.exp(-alpha * dz), rel=1e-12)
    with pytest.raises(InvalidArgument):
        apply_pump_loss(qpg_pump, 1.5)


@given(t=st.floats(0.0, 1.0))
@settings(max_examples=25)
def test_pump_loss_energy_factor(t, qpg_pump):
    assert apply_pump_loss(qpg_pump, t).energy == pytest.approx(t * t * qpg_pump.energy, rel=1e-12, abs=1e-40)

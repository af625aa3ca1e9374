import numpy as np
import pytest
from scipy.linalg import expm
from hypothesis import given, settings, strategies as st

from nlqsim.core import InvalidArgument, build_frequency_grid
from nlqsim.gaussian import (CovarianceState, UndefinedEfficiency, apply_loss, evolve,
                             heralding_efficiency, prob_click, prob_coincidence, prob_vacuum,
                             purity_witness, quadrature_covariance, squeezing_from_covariance,
                             symplectic_defect, symplectic_from_transfer, vacuum)
from nlqsim.propagator import SQUEEZER, TransferMatrix

GRID = build_frequency_grid(1.2e15, 1e12, 2)


def thermal(nbar):
    nbar = np.broadcast_to(np.asarray(nbar, float), (4,))
    d = np.concatenate([2 * nbar + 1, 2 * nbar + 1])
    return CovarianceState(np.diag(d).astype(complex), GRID, GRID)


def tmsv(r):
    """Signal k paired with idler k, squeezing r on both pairs."""
    u = np.zeros((4, 4), dtype=complex)
    u[:2, :2] = np.cosh(r) * np.eye(2)
    u[2:, 2:] = np.cosh(r) * np.eye(2)
    u[:2, 2:] = 1j * np.sinh(r) * np.eye(2)
    u[2:, :2] = -1j * np.sinh(r) * np.eye(2)
    t = TransferMatrix(u, SQUEEZER, GRID, GRID)
    return evolve(vacuum(GRID, GRID), symplectic_from_transfer(t))


def test_vacuum_has_no_clicks():
    v = vacuum(GRID, GRID)
    assert prob_vacuum(v, "all") == pytest.approx(1.0, abs=1e-14)
    assert v.mean_photons("signal") == 0.0
    with pytest.raises(UndefinedEfficiency):
        heralding_efficiency(v)


@given(n=st.floats(0.0, 50.0))
@settings(max_examples=40)
def test_thermal_vacuum_probability(n):
    s = thermal(n)
    assert prob_vacuum(s, [0]) == pytest.approx(1.0 / (1.0 + n), rel=1e-12)
    assert prob_vacuum(s, "signal") == pytest.approx((1.0 / (1.0 + n)) ** 2, rel=1e-12)


@given(n=st.floats(0.0, 20.0), t=st.floats(0.0, 1.0))
@settings(max_examples=40)
def test_thermal_through_loss(n, t):
    out = apply_loss(thermal(n), t)
    assert out.mean_photons([0]) == pytest.approx(t * t * n, rel=1e-12, abs=1e-14)


def test_full_loss_gives_vacuum():
    out = apply_loss(tmsv(0.8), 0.0)
    assert np.allclose(out.sigma, np.eye(8))


def test_loss_validation():
    with pytest.raises(InvalidArgument):
        apply_loss(thermal(1.0), 1.2)
    with pytest.raises(InvalidArgument):
        apply_loss(thermal(1.0), np.ones(3))


def test_product_thermal_factorizes():
    s = thermal([0.1, 0.5, 2.0, 3.0])
    joint = prob_vacuum(s, [0, 2])
    assert joint == pytest.approx(prob_vacuum(s, [0]) * prob_vacuum(s, [2]), rel=1e-12)
    pc = prob_coincidence(s, [0], [2])
    assert pc == pytest.approx(prob_click(s, [0]) * prob_click(s, [2]), rel=1e-12)


@given(r=st.floats(0.01, 2.0))
@settings(max_examples=25)
def test_tmsv_perfect_heralding(r):
    s = tmsv(r)
    for k in range(2):
        pc = prob_coincidence(s, [k], [2 + k])
        assert pc == pytest.approx(prob_click(s, [k]), rel=1e-10)
    hs, hi = heralding_efficiency(s)
    assert hs == pytest.approx(1.0, rel=1e-10) and hi == pytest.approx(1.0, rel=1e-10)
    assert s.mean_photons("signal") == pytest.approx(2 * np.sinh(r) ** 2, rel=1e-12)


@given(t2=st.floats(0.05, 1.0))
@settings(max_examples=25)
def test_idler_loss_sets_signal_heralding(t2):
    s = apply_loss(tmsv(1e-3), {"idler": np.sqrt(t2)})
    hs, hi = heralding_efficiency(s)
    assert hs == pytest.approx(t2, rel=1e-4)
    assert hi == pytest.approx(1.0, rel=1e-4)


@given(r=st.floats(0.05, 1.5))
@settings(max_examples=25)
def test_squeezing_recovered_from_covariance(r):
    rs, vecs = squeezing_from_covariance(tmsv(r))
    assert np.allclose(rs, [r, r], rtol=1e-10)
    assert vecs.shape == (8, 2)


def test_loss_lowers_squeezing_monotonically():
    s = tmsv(1.0)
    prev = np.inf
    for t in (1.0, 0.9, 0.7, 0.4, 0.1):
        r = squeezing_from_covariance(apply_loss(s, t))[0][0]
        assert r < prev
        prev = r


def test_purity_witness():
    s = tmsv(0.9)
    assert purity_witness(s) == pytest.approx(1.0, rel=1e-9)
    assert purity_witness(apply_loss(s, {"idler": 0.8})) > 1.0 + 1e-3


def test_symplectic_embedding_is_symplectic():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    unitary = expm(1j * (a + a.conj().T))
    m = symplectic_from_transfer(TransferMatrix(unitary, "converter", GRID, GRID))
    assert symplectic_defect(m) < 1e-12
    assert symplectic_defect(symplectic_from_transfer(TransferMatrix(
        np.eye(4, dtype=complex), SQUEEZER, GRID, GRID))) == 0.0


def test_non_bogoliubov_transfer_rejected():
    with pytest.raises(InvalidArgument):
        symplectic_from_transfer(TransferMatrix(2 * np.eye(4, dtype=complex), SQUEEZER, GRID, GRID))


def test_detector_subsets_must_be_disjoint():
    with pytest.raises(InvalidArgument):
        prob_coincidence(thermal(1.0), [0, 1], [1, 2])


@given(r=st.floats(0.0, 2.0))
@settings(max_examples=25)
def test_pure_state_quadrature_determinant_is_one(r):
    q = quadrature_covariance(tmsv(r))
    assert np.linalg.det(q).real == pytest.approx(1.0, rel=1e-8)
    assert np.linalg.det(quadrature_covariance(thermal(0.5))).real > 1.0

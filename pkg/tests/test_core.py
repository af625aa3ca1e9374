import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlqsim.core import (C_LIGHT, InvalidArgument, ModeSpec, PolingPattern, SegmentProfile,
                         UnderResolvedPump, build_frequency_grid, difference_grid,
                         fwhm_wavelength_to_omega, gaussian_pump, sample_on_grid, sum_grid,
                         uniform_segment, wavelength_to_omega)


def test_grid_points_simple():
    g = build_frequency_grid(1.0, 2.0, 3)
    assert np.allclose(g.omegas, [0.0, 1.0, 2.0])


@given(c=st.floats(1e14, 3e15), s=st.floats(1e11, 1e14), n=st.integers(2, 400))
def test_grid_midpoint_and_index_roundtrip(c, s, n):
    g = build_frequency_grid(c, s, n)
    assert g.center == pytest.approx(c, rel=1e-12)
    for k in (0, n // 2, n - 1):
        assert g.index_of(g.omega_at(k)) == k


def test_grid_300_points():
    w = wavelength_to_omega(1550e-9)
    assert build_frequency_grid(w, 2 * np.pi * 3e12, 300).omegas.size == 300


@pytest.mark.parametrize("args", [(1.0, 0.0, 3), (1.0, -1.0, 3), (1.0, 1.0, 1), (1.0, 1.0, 2.5)])
def test_grid_rejects_bad_arguments(args):
    with pytest.raises(InvalidArgument):
        build_frequency_grid(*args)


def test_sum_and_difference_grids_cover_pairs():
    a = build_frequency_grid(10.0, 4.0, 5)
    b = build_frequency_grid(20.0, 4.0, 5)
    s, d = sum_grid(a, b), difference_grid(b, a)
    assert s.omega_start == a.omega_start + b.omega_start and s.n_points == 9
    assert np.isclose(d.omega_start, b.omega_start - a.omega_stop)
    assert np.isclose(d.omega_stop, b.omega_stop - a.omega_start)
    with pytest.raises(InvalidArgument):
        sum_grid(a, build_frequency_grid(1.0, 1.0, 3))


def _pump_mode(n=101, span=2 * np.pi * 6e12, wl=775e-9):
    w = wavelength_to_omega(wl)
    return ModeSpec("pump", w, build_frequency_grid(w, span, n))


def test_gaussian_pump_zero_energy():
    p = gaussian_pump(_pump_mode(), 1.39e-9, 0.0, 775e-9)
    assert np.all(p.amplitudes == 0)


@given(e=st.floats(1e-16, 1e-9), fwhm=st.floats(0.5e-9, 5e-9))
@settings(max_examples=30)
def test_gaussian_pump_normalization(e, fwhm):
    p = gaussian_pump(_pump_mode(), fwhm, e, 775e-9)
    assert p.energy == pytest.approx(e, rel=1e-12)


def test_gaussian_pump_fwhm_matches_hand_conversion():
    mode = _pump_mode(n=4001)
    p = gaussian_pump(mode, 1.39e-9, 0.1e-12, 775e-9)
    expected = 2 * np.pi * 3e8 * 1.39e-9 / 775e-9 ** 2
    inten = np.abs(p.amplitudes) ** 2
    above = mode.grid.omegas[inten >= 0.5 * inten.max()]
    measured = above[-1] - above[0] + mode.grid.delta_omega
    assert measured == pytest.approx(expected, rel=5e-3)
    assert fwhm_wavelength_to_omega(1.39e-9, 775e-9) == pytest.approx(expected, rel=1e-3)


def test_gaussian_pump_shape_stable_under_refinement():
    # the normalization is a Riemann sum; the spectral density it implies must converge
    peaks = []
    for n in (101, 201, 401):
        mode = _pump_mode(n)
        p = gaussian_pump(mode, 1.39e-9, 0.1e-12, 775e-9)
        peaks.append(abs(p.amplitudes[mode.grid.index_of(mode.center_frequency)]))
    assert max(peaks) / min(peaks) - 1 < 1e-3


def test_gaussian_pump_under_resolved():
    with pytest.raises(UnderResolvedPump):
        gaussian_pump(_pump_mode(n=11, span=2 * np.pi * 50e12), 0.1e-9, 1e-12, 775e-9)


def test_sample_on_grid_warns_outside_support():
    g = build_frequency_grid(0.0, 4.0, 5)
    vals = np.arange(5, dtype=complex)
    with pytest.warns(UserWarning):
        out = sample_on_grid(vals, g, np.array([1.0, 10.0]), what="pump")
    assert out[0] == 3 and out[1] == 0


def test_poling_pattern_validation():
    with pytest.raises(InvalidArgument):
        PolingPattern(np.array([0.0, 1.0, 0.5]), np.array([1.0, -1.0]))
    with pytest.raises(InvalidArgument):
        PolingPattern(np.array([0.0, 1.0]), np.array([0.5]))
    p = PolingPattern(np.array([0.0, 1.0, 2.0]), np.array([1.0, -1.0]))
    assert list(p.sign_at(np.array([0.5, 1.5]))) == [1.0, -1.0]


def test_segment_interpolation_exact_at_samples():
    z = np.array([0.0, 1e-3, 3e-3])
    g = np.array([-100.0, -150.0, -120.0])
    v = {"signal": np.full(3, 1.3e8), "idler": np.full(3, 1.31e8), "pump": np.array([1.3e8, 1.32e8, 1.33e8])}
    seg = SegmentProfile(3e-3, z, v, {"pump": np.zeros(3), "signal": np.zeros(3), "idler": np.zeros(3)}, g)
    assert np.array_equal(seg.coupling(z), g)
    assert np.array_equal(seg.v("pump", z), v["pump"])


def test_segment_validation_names_field():
    v = {"signal": 1e8, "idler": 1e8, "pump": 1e8}
    with pytest.raises(InvalidArgument, match="length"):
        uniform_segment(-1e-3, v, 1.0)
    with pytest.raises(InvalidArgument, match="velocity"):
        uniform_segment(1e-3, {"signal": 1e8, "pump": 1e8}, 1.0)
    with pytest.raises(InvalidArgument, match="alpha"):
        uniform_segment(1e-3, v, 1.0, alpha={"signal": -1.0})


def test_integrated_mismatch_and_walkoff_exact_for_linear_profiles():
    z = np.array([0.0, 2e-3])
    kb = {"pump": np.array([100.0, 300.0]), "signal": np.zeros(2), "idler": np.zeros(2)}
    v = {"signal": np.array([1e8, 1e8]), "idler": np.array([1e8, 1e8]), "pump": np.array([1e8, 2e8])}
    seg = SegmentProfile(2e-3, z, v, kb, np.array([1.0, 1.0]))
    # integral of 100 + 1e5 z over [0, 2e-3]
    assert seg.integrated_mismatch(2e-3) == pytest.approx(100 * 2e-3 + 0.5e5 * 4e-6)
    rate0, rate1 = 1 / 1e8 - 1 / 1e8, 1 / 1e8 - 1 / 2e8
    assert seg.integrated_walkoff("signal", 2e-3) == pytest.approx(0.5 * (rate0 + rate1) * 2e-3)


def test_constants():
    assert C_LIGHT == 299792458.0

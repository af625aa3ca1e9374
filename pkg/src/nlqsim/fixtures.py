"""In-repo device fixtures used by the scenario recipes and the test suite.

Group velocities are written as the walk-off rate ``1/v_j - 1/v_p`` (s/m);
couplings are in the propagator's units. Values that were tuned to land on a
published operating point say so next to the number.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (C_LIGHT, ModeSpec, PolingPattern, PumpField, SegmentProfile, build_frequency_grid,
                   difference_grid, gaussian_pump, sum_grid, uniform_segment, wavelength_to_omega)
from .nonlinearity import apodized_pattern, periodic_pattern

TWO_PI_THZ = 2.0 * np.pi * 1e12


@dataclass(frozen=True, eq=False)
class Fixture:
    segment: SegmentProfile
    signal: ModeSpec
    idler: ModeSpec
    pump_mode: ModeSpec
    pump_wavelength: float
    pump_fwhm: float

    def pump(self, energy: float, fwhm: Optional[float] = None) -> PumpField:
        return gaussian_pump(self.pump_mode, self.pump_fwhm if fwhm is None else fwhm,
                             energy, self.pump_wavelength)

    def cw_pump(self, amplitude: float) -> PumpField:
        """Single spectral line at the grid center."""
        a = np.zeros(self.pump_mode.grid.n_points, dtype=complex)
        a[self.pump_mode.grid.index_of(self.pump_mode.center_frequency)] = amplitude
        return PumpField(self.pump_mode, a)

    def with_segment(self, segment: SegmentProfile) -> "Fixture":
        return Fixture(segment, self.signal, self.idler, self.pump_mode, self.pump_wavelength,
                       self.pump_fwhm)


def _degenerate_modes(pump_wl: float, n: int, span_thz: float):
    wp = wavelength_to_omega(pump_wl)
    grid = build_frequency_grid(wp / 2, span_thz * TWO_PI_THZ, n)
    sig = ModeSpec("signal", wp / 2, grid)
    idl = ModeSpec("idler", wp / 2, grid)
    return sig, idl, ModeSpec("pump", wp, sum_grid(grid, grid))


# -- symmetric group-velocity matching, periodically poled, 775 -> 1550 + 1550 ------------
SGVM_LENGTH = 5e-3
SGVM_DOMAINS = 3116
SGVM_WALKOFF = 2.296e-10        # signal faster, idler slower by the same amount
SGVM_NG_PUMP = 2.30
SGVM_GAMMA = -182.9
SGVM_FWHM = 1.39e-9
SGVM_APODIZED_FWHM = 1.85e-9


def sgvm_delta_k() -> float:
    return SGVM_DOMAINS * np.pi / SGVM_LENGTH


def sgvm_velocities():
    vp = C_LIGHT / SGVM_NG_PUMP
    return {"signal": 1.0 / (1.0 / vp - SGVM_WALKOFF), "idler": 1.0 / (1.0 / vp + SGVM_WALKOFF),
            "pump": vp}


def sgvm_fixture(n: int = 120, span_thz: float = 2.5, apodized: bool = False,
                 domains: Optional[int] = None, gamma: float = SGVM_GAMMA) -> Fixture:
    """PPLN (or apodized) sGVM squeezer.

    ``domains`` shortens the device for fast tests while keeping the domain
    width fixed.
    """
    sig, idl, pm = _degenerate_modes(775e-9, n, span_thz)
    dk = sgvm_delta_k()
    length = SGVM_LENGTH if domains is None else domains * np.pi / dk
    if apodized:
        pattern = apodized_pattern(dk, length).pattern
    else:
        pattern = periodic_pattern(2 * np.pi / dk, length)
    seg = uniform_segment(length, sgvm_velocities(), gamma, delta_k_bar=dk, poling=pattern)
    fwhm = SGVM_APODIZED_FWHM if apodized else SGVM_FWHM
    return Fixture(seg, sig, idl, pm, 775e-9, fwhm)


# -- asymmetric matching (pump and idler locked), poled, two-stage interferometer ---------
AGVM_LENGTH = 6e-3
AGVM_PERIOD = 2.262e-6
AGVM_WALKOFF_SIGNAL = -6e-10    # signal runs ahead of the pump
AGVM_NG_PUMP = 2.30
AGVM_GAMMA = -174.4             # tuned: single-stage <n_s> = 0.270 at 2 pJ
AGVM_FWHM = 1.32e-9
AGVM_NC_TOTAL_PS = 4.01


def agvm_fixture(n: int = 120, span_thz: float = 4.0, gamma: float = AGVM_GAMMA) -> Fixture:
    sig, idl, pm = _degenerate_modes(775e-9, n, span_thz)
    vp = C_LIGHT / AGVM_NG_PUMP
    vel = {"signal": 1.0 / (1.0 / vp + AGVM_WALKOFF_SIGNAL), "idler": vp, "pump": vp}
    seg = uniform_segment(AGVM_LENGTH, vel, gamma, delta_k_bar=2 * np.pi / AGVM_PERIOD,
                          poling=periodic_pattern(AGVM_PERIOD, AGVM_LENGTH))
    return Fixture(seg, sig, idl, pm, 775e-9, AGVM_FWHM)


# -- quantum pulse gate: 775 input (idler) -> 1550 output (signal), 1550 pump ------------
QPG_LENGTH = 6e-3
QPG_WALKOFF_SIGNAL = 1.5e-9     # tuned: single-stage selectivity peak near 0.80
QPG_NG_PUMP = 2.20
QPG_GAMMA = -258.6
QPG_FWHM = 8.33e-9
QPG_NC_TOTAL_PS = 30.0
QPG_SPM = 0.97
QPG_XPM_S = 0.93
QPG_XPM_I = 5.22


def qpg_fixture(n_signal: int = 120, n_idler: int = 120, span_signal_thz: float = 6.0,
                span_idler_thz: float = 6.0, length: float = QPG_LENGTH, chi3: bool = False,
                apodized: bool = False, delta_k: float = 0.0) -> Fixture:
    """Difference-frequency converter with the input locked to the pump velocity.

    ``apodized`` needs a nonzero ``delta_k`` so that there are domains to shape.
    """
    wi0, ws0 = wavelength_to_omega(775e-9), wavelength_to_omega(1550e-9)
    sg = build_frequency_grid(ws0, span_signal_thz * TWO_PI_THZ, n_signal)
    ig = build_frequency_grid(wi0, span_idler_thz * TWO_PI_THZ, n_idler)
    sig, idl = ModeSpec("signal", ws0, sg), ModeSpec("idler", wi0, ig)
    pm = ModeSpec("pump", wi0 - ws0, difference_grid(ig, sg))
    vp = C_LIGHT / QPG_NG_PUMP
    vel = {"signal": 1.0 / (1.0 / vp + QPG_WALKOFF_SIGNAL), "idler": vp, "pump": vp}
    extra = {}
    if chi3:
        extra = dict(gamma_spm=QPG_SPM, gamma_xpm_s=QPG_XPM_S, gamma_xpm_i=QPG_XPM_I)
    poling = None
    if delta_k:
        poling = apodized_pattern(delta_k, length).pattern if apodized else \
            periodic_pattern(2 * np.pi / abs(delta_k), length)
    seg = uniform_segment(length, vel, QPG_GAMMA, delta_k_bar=delta_k, process="qfc",
                          poling=poling, **extra)
    return Fixture(seg, sig, idl, pm, 1550e-9, QPG_FWHM)


# -- intrinsic heralding efficiency: CW-like four-wave mixing with uniform loss -----------
HE_ALPHA_DB_CM = 2.22
HE_DELTA_K = -4.01


def db_per_cm_to_alpha(db_cm: float) -> float:
    """Power attenuation coefficient (1/m) from dB/cm."""
    return db_cm * 100.0 * np.log(10.0) / 10.0


def heralding_fixture(length: float, alpha_db_cm: float = HE_ALPHA_DB_CM,
                      delta_k: float = HE_DELTA_K, n: int = 3, gamma: float = 1.0) -> Fixture:
    """Near-monochromatic pump and pair modes so the single-line formula applies.

    Every mode shares one velocity, so only the central mismatch and the loss
    shape the pair amplitude.
    """
    w0 = wavelength_to_omega(1550e-9)
    grid = build_frequency_grid(w0, 1e6 * (n - 1) if n > 1 else 1e6, n)
    sig, idl = ModeSpec("signal", w0, grid), ModeSpec("idler", w0, grid)
    pm = ModeSpec("pump", w0, build_frequency_grid(w0, grid.span, n))
    v = C_LIGHT / 2.0
    a = db_per_cm_to_alpha(alpha_db_cm)
    seg = uniform_segment(length, {"signal": v, "idler": v, "pump": v, "pump2": v}, gamma,
                          delta_k_bar=delta_k, process="sfwm",
                          alpha={"signal": a, "idler": a, "pump": a, "pump2": a})
    return Fixture(seg, sig, idl, pm, 1550e-9, 0.0)

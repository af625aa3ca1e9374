"""Schmidt-mode analytics of transfer matrices."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import FrequencyGrid, InvalidArgument, NumericalFailure
from .propagator import CONVERTER, SQUEEZER, TransferMatrix


class UnitarityViolation(NumericalFailure):
    """Raised when a converter block has a singular value noticeably above one."""


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """``U_block = sum_l rho_l * s_l * tau_l^dagger`` with continuum-normalized modes.

    ``r`` holds asinh(s) for squeezers and asin(s) for converters. Modes are
    columns normalized so that ``sum |mode|^2 * delta_omega = 1``.
    """

    kind: str
    singular_values: np.ndarray
    r: np.ndarray
    input_modes: np.ndarray
    output_modes: np.ndarray
    input_grid: FrequencyGrid
    output_grid: FrequencyGrid

    @property
    def efficiencies(self) -> np.ndarray:
        return np.sin(self.r) ** 2 if self.kind == CONVERTER else np.sinh(self.r) ** 2


def schmidt_decompose(u: TransferMatrix, block: str = "si", clamp_tol: float = 1e-8) -> SchmidtDecomposition:
    """SVD of one off-diagonal block (``"si"`` or ``"is"``)."""
    if block not in ("si", "is"):
        raise InvalidArgument("block must be 'si' or 'is'")
    m = u.U_si if block == "si" else u.U_is
    out_grid, in_grid = (u.signal_grid, u.idler_grid) if block == "si" else \
        (u.idler_grid, u.signal_grid)
    left, s, vh = np.linalg.svd(m)
    right = vh.conj().T
    k = s.size
    left, right = left[:, :k], right[:, :k]
    # make the largest-magnitude-first nonzero entry of each output mode real positive
    for j in range(k):
        col = left[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * max(1e-300, np.max(np.abs(col))))
        if nz.size:
            ph = col[nz[0]] / abs(col[nz[0]])
            left[:, j] = col / ph
            right[:, j] = right[:, j] / ph
    if u.kind == CONVERTER:
        if np.any(s > 1.0 + clamp_tol):
            raise UnitarityViolation(f"converter singular value {s.max():.12f} exceeds 1")
        r = np.arcsin(np.clip(s, 0.0, 1.0))
    else:
        r = np.arcsinh(s)
    return SchmidtDecomposition(u.kind, s, r, right / np.sqrt(in_grid.delta_omega),
                                left / np.sqrt(out_grid.delta_omega), in_grid, out_grid)


def purity_and_schmidt_number(r: Sequence[float]) -> Tuple[float, float]:
    """Return ``(K, purity)`` with ``K = (sum sinh^2 r)^2 / sum sinh^4 r``."""
    w = np.sinh(np.asarray(r, dtype=float)) ** 2
    if not np.any(w > 0):
        raise InvalidArgument("Schmidt number is undefined when every r is zero")
    k = float(np.sum(w) ** 2 / np.sum(w ** 2))
    return k, 1.0 / k


def mean_photon_number(u_or_r, which: str = "signal") -> float:
    """Mean photon number of a lossless squeezer output.

    Accepts a ``TransferMatrix`` (Frobenius route over ``U_si`` or ``U_is``)
    or an array of squeezing parameters (``sum sinh^2 r``).
    """
    if isinstance(u_or_r, TransferMatrix):
        if u_or_r.kind != SQUEEZER:
            raise InvalidArgument("mean photon number from vacuum applies to squeezers")
        block = u_or_r.U_si if which == "signal" else u_or_r.U_is
        return float(np.sum(np.abs(block) ** 2))
    return float(np.sum(np.sinh(np.asarray(u_or_r, dtype=float)) ** 2))


@dataclass(frozen=True)
class QPGMetrics:
    efficiencies: np.ndarray
    separability: float
    selectivity: float


def qpg_metrics(r: Sequence[float], j: int = 1) -> QPGMetrics:
    """Conversion efficiencies, separability of mode ``j`` (1-based) and selectivity."""
    eta = np.sin(np.asarray(r, dtype=float)) ** 2
    total = float(np.sum(eta))
    if total == 0:
        return QPGMetrics(eta, 0.0, 0.0)
    if not 1 <= j <= eta.size:
        raise InvalidArgument("mode index out of range")
    sep_j = float(eta[j - 1] / total)
    sel = float(eta[0] * eta[0] / total)
    return QPGMetrics(eta, sep_j, sel)


def spectral_overlap(phi: np.ndarray, psi: np.ndarray, delta_omega: float, tol: float = 1e-6) -> float:
    """``|sum conj(phi) psi dw|^2`` for unit-normalized spectra on a shared grid."""
    phi = np.asarray(phi, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if phi.shape != psi.shape:
        raise InvalidArgument("spectra must share a grid")
    for v in (phi, psi):
        if abs(np.sum(np.abs(v) ** 2) * delta_omega - 1.0) > tol:
            raise InvalidArgument("spectra must be normalized")
    return float(abs(np.sum(phi.conj() * psi) * delta_omega) ** 2)


@dataclass(frozen=True, eq=False)
class TemporalTransfer:
    values: np.ndarray
    t_signal: np.ndarray
    t_idler: np.ndarray

    @property
    def dt(self) -> Tuple[float, float]:
        return float(self.t_signal[1] - self.t_signal[0]), float(self.t_idler[1] - self.t_idler[0])


def _time_axis(grid: FrequencyGrid) -> np.ndarray:
    n = grid.n_points
    dt = 2.0 * np.pi / (n * grid.delta_omega)
    return (np.arange(n) - n // 2) * dt


def temporal_transfer_function(u: TransferMatrix, block: str = "si") -> TemporalTransfer:
    """2D Fourier transform of the continuous transfer kernel.

    Squeezers use ``exp(+i w_s t_s) exp(+i w_i t_i)``, converters flip the
    idler sign. Frequencies are measured from each grid's center, so the
    result differs from the absolute-frequency transform by a global phase.
    """
    m = u.U_si if block == "si" else u.U_is
    g_out, g_in = (u.signal_grid, u.idler_grid) if block == "si" else (u.idler_grid, u.signal_grid)
    ts, ti = _time_axis(g_out), _time_axis(g_in)
    ws = g_out.omegas - g_out.center
    wi = g_in.omegas - g_in.center
    sgn = -1.0 if u.kind == CONVERTER else 1.0
    es = np.exp(1j * np.outer(ts, ws))
    ei = np.exp(sgn * 1j * np.outer(wi, ti))
    # kernel = m / dw, integral measure dw^2
    vals = (u.delta_omega / (2.0 * np.pi)) * es @ m @ ei
    return TemporalTransfer(vals, ts, ti)

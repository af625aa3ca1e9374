"""Undepleted classical pump: autocorrelation kernel, SPM evolution and loss."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InvalidArgument, PumpField, SegmentProfile, StepSizeError


def pump_autocorrelation(pump: PumpField) -> np.ndarray:
    """E_p on the 2N-1 point difference grid.

    Entry ``k`` holds ``E_p(d * delta_omega)`` with ``d = k - (N - 1)``, i.e.
    ``sum_j conj(beta[j - d]) * beta[j] * delta_omega``.
    """
    b = pump.amplitudes
    return np.convolve(b, np.conj(b[::-1])) * pump.grid.delta_omega


def autocorrelation_matrix(kernel: np.ndarray, n_rows: int, n_cols: int,
                           row_offset: int = 0, col_offset: int = 0) -> np.ndarray:
    """Matrix ``T[n, m] = E_p((n + row_offset) - (m + col_offset))`` in grid steps."""
    centre = (kernel.size - 1) // 2
    d = (np.arange(n_rows)[:, None] + row_offset) - (np.arange(n_cols)[None, :] + col_offset)
    idx = d + centre
    out = np.zeros((n_rows, n_cols), dtype=complex)
    ok = (idx >= 0) & (idx < kernel.size)
    out[ok] = kernel[idx[ok]]
    return out


def spm_rate(amplitudes: np.ndarray, gamma_spm: float, delta_omega: float) -> np.ndarray:
    """Right-hand side i (gamma/2pi) sum_w' E_p(w - w') beta(w') dw."""
    n = amplitudes.size
    kernel = np.convolve(amplitudes, np.conj(amplitudes[::-1])) * delta_omega
    conv = np.convolve(kernel, amplitudes)[n - 1:2 * n - 1]
    return 1j * gamma_spm / (2.0 * np.pi) * conv * delta_omega


@dataclass(frozen=True, eq=False)
class PumpTrajectory:
    """Pump amplitudes sampled at increasing positions; linear interpolation between."""

    pump: PumpField
    z: np.ndarray
    amplitudes: np.ndarray

    @classmethod
    def static(cls, pump: PumpField, length: float) -> "PumpTrajectory":
        amps = np.vstack([pump.amplitudes, pump.amplitudes])
        return cls(pump, np.array([0.0, length]), amps)

    @property
    def is_static(self) -> bool:
        return bool(np.all(self.amplitudes == self.amplitudes[0]))

    def at(self, z: float) -> PumpField:
        return self.pump.with_amplitudes(self.amplitudes_at(z))

    def amplitudes_at(self, z: float) -> np.ndarray:
        zs = self.z
        if z <= zs[0]:
            return self.amplitudes[0]
        if z >= zs[-1]:
            return self.amplitudes[-1]
        i = int(np.searchsorted(zs, z, side="right") - 1)
        w = (z - zs[i]) / (zs[i + 1] - zs[i])
        return (1 - w) * self.amplitudes[i] + w * self.amplitudes[i + 1]

    @property
    def final(self) -> PumpField:
        return self.pump.with_amplitudes(self.amplitudes[-1])


def _peak_power_bound(amplitudes: np.ndarray, delta_omega: float) -> float:
    # |A(t)| <= (1/sqrt(2 pi)) sum |beta| d_omega
    return float((np.sum(np.abs(amplitudes)) * delta_omega) ** 2 / (2.0 * np.pi))


def evolve_pump_spm(pump: PumpField, segment: SegmentProfile, dz: float,
                    drift_tol: float = 1e-6) -> PumpTrajectory:
    """Integrate pump self-phase modulation with fixed-step RK4.

    The trajectory is stored every ``dz``; internally the step is further
    limited to a twentieth of the nonlinear length ``1/(gamma_SPM * P_peak)``.
    """
    if not dz > 0:
        raise InvalidArgument("dz must be positive")
    length = segment.length
    n_out = max(1, int(np.ceil(length / dz - 1e-9)))
    z_out = np.linspace(0.0, length, n_out + 1)
    if np.all(segment.gamma_spm == 0):
        return PumpTrajectory(pump, z_out, np.tile(pump.amplitudes, (n_out + 1, 1)))

    dw = pump.grid.delta_omega
    beta = pump.amplitudes.copy()
    g_max = float(np.max(np.abs(segment.gamma_spm)))
    p_peak = _peak_power_bound(beta, dw)
    h_max = np.inf if g_max * p_peak == 0 else 1.0 / (20.0 * g_max * p_peak)
    out = [beta.copy()]
    energy0 = pump.energy
    for k in range(n_out):
        z0, z1 = z_out[k], z_out[k + 1]
        n_sub = max(1, int(np.ceil((z1 - z0) / h_max)))
        h = (z1 - z0) / n_sub
        for j in range(n_sub):
            za = z0 + j * h
            e_before = np.sum(np.abs(beta) ** 2) * dw
            k1 = spm_rate(beta, segment.spm(za), dw)
            k2 = spm_rate(beta + 0.5 * h * k1, segment.spm(za + 0.5 * h), dw)
            k3 = spm_rate(beta + 0.5 * h * k2, segment.spm(za + 0.5 * h), dw)
            k4 = spm_rate(beta + h * k3, segment.spm(za + h), dw)
            beta = beta + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            e_after = np.sum(np.abs(beta) ** 2) * dw
            if energy0 > 0 and abs(e_after - e_before) > drift_tol * energy0:
                raise StepSizeError("SPM step too large: pulse energy drift exceeds tolerance")
        out.append(beta.copy())
    return PumpTrajectory(pump, z_out, np.array(out))


def apply_pump_loss(pump: PumpField, transmittance_amplitude: float) -> PumpField:
    t = transmittance_amplitude
    if not 0.0 <= t <= 1.0:
        raise InvalidArgument("amplitude transmittance must lie in [0, 1]")
    return pump.with_amplitudes(pump.amplitudes * t)

"""First-order references: phase matching, JSA, interference, analytic heralding."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from .core import InvalidArgument, ModeSpec, PumpField, SegmentProfile
from .propagator import CONVERTER, default_dz, kind_of, pair_kernel, phase_rate_sign


@dataclass(frozen=True, eq=False)
class PhaseMatching:
    """Phi on the signal x idler grid (rows signal, columns idler)."""

    values: np.ndarray
    signal: ModeSpec
    idler: ModeSpec
    process: str = "pdc"


@dataclass(frozen=True, eq=False)
class JointSpectralAmplitude:
    values: np.ndarray
    signal: ModeSpec
    idler: ModeSpec
    normalized: bool = False

    def unit(self) -> "JointSpectralAmplitude":
        n = np.linalg.norm(self.values)
        if n == 0:
            raise InvalidArgument("cannot normalize a zero JSA")
        return JointSpectralAmplitude(self.values / n, self.signal, self.idler, True)


def _simpson_nodes(a: float, b: float, n: int):
    n = n + (n % 2)
    z = np.linspace(a, b, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return z, w * (b - a) / (3.0 * n)


def quadrature_nodes(segment: SegmentProfile, dz: Optional[float] = None,
                     min_per_piece: int = 16):
    """Composite Simpson nodes per piece, with each node's piece midpoint.

    Pieces are delimited by poling walls and profile samples; no piece is
    integrated with fewer than ``min_per_piece`` intervals when poled.
    """
    if dz is None:
        from .propagator import coherence_length

        dz = min(default_dz(segment, "co_rotating"), coherence_length(segment) / 16.0)
    bps = segment.breakpoints()
    if segment.z.size > 1:
        # profile samples are kinks of the piecewise-linear coupling
        bps = np.unique(np.concatenate([bps, segment.z]))
    zs, ws, mids = [], [], []
    for a, b in zip(bps[:-1], bps[1:]):
        if b - a <= 1e-15 * segment.length:
            continue
        n = max(2, int(np.ceil((b - a) / dz)))
        if segment.poling is not None:
            n = max(n, min_per_piece)
        z, w = _simpson_nodes(a, b, n)
        zs.append(z)
        ws.append(w)
        mids.append(np.full(z.size, 0.5 * (a + b)))
    return np.concatenate(zs), np.concatenate(ws), np.concatenate(mids)


def phase_matching_function(segment: SegmentProfile, signal: ModeSpec, idler: ModeSpec,
                            dz: Optional[float] = None, min_per_piece: int = 16,
                            chunk: int = 4096) -> PhaseMatching:
    """``(1/sqrt(2 pi)) * integral gamma(z) exp(i * accumulated mismatch) dz``.

    The accumulated phase is the central mismatch rate minus the linearized
    detuning terms of both modes, i.e. exactly the phase seen by the first-order
    term of the propagator. For converters the signal term enters with the
    opposite sign (difference-frequency kernel).
    """
    z, w, mid = quadrature_nodes(segment, dz, min_per_piece)
    # wall nodes take the sign of the piece they belong to
    g = np.asarray(segment._interp(segment.gamma, z), dtype=float)
    if segment.poling is not None:
        g = g * segment.poling.sign_at(mid)
    rho = phase_rate_sign(segment.process) * segment.integrated_mismatch(z)
    a_s = segment.integrated_walkoff("signal", z)
    a_i = segment.integrated_walkoff("idler", z)
    cs = -1.0 if kind_of(segment.process) == CONVERTER else 1.0
    ds, di = signal.detunings, idler.detunings
    weight = w * g * np.exp(1j * rho)
    out = np.zeros((ds.size, di.size), dtype=complex)
    for k in range(0, z.size, chunk):
        sl = slice(k, k + chunk)
        es = np.exp(-1j * cs * np.outer(ds, a_s[sl]))
        ei = np.exp(-1j * np.outer(a_i[sl], di))
        out += (es * weight[sl]) @ ei
    return PhaseMatching(out / np.sqrt(2.0 * np.pi), signal, idler, segment.process)


def first_order_jsa(pump: PumpField, phi: PhaseMatching, pump2: Optional[PumpField] = None,
                    walkoff_12: float = 0.0) -> JointSpectralAmplitude:
    """Pump amplitude on the pair grid times Phi.

    Down-conversion reads ``beta(w_s + w_i)``, conversion ``beta(w_i - w_s)``.
    Four-wave mixing uses the two-pump kernel divided by ``sqrt(2 pi)`` so the
    result matches the propagator's first-order block.
    """
    ws, wi = phi.signal.grid.omegas, phi.idler.grid.omegas
    if phi.process == "qfc":
        beta = pump.sample(wi[None, :] - ws[:, None])
    elif phi.process == "sfwm":
        from .core import sample_on_grid

        grid, vals = pair_kernel(pump, pump if pump2 is None else pump2, walkoff_12)
        beta = sample_on_grid(vals, grid, ws[:, None] + wi[None, :], what="pump pair kernel")
        beta = beta / np.sqrt(2.0 * np.pi)
    else:
        beta = pump.sample(ws[:, None] + wi[None, :])
    return JointSpectralAmplitude(beta * phi.values, phi.signal, phi.idler)


def interferometer_pm(phi: PhaseMatching, delta_phi: float, t_s: float, t_i: float) -> PhaseMatching:
    """Two identical sections separated by a spacer: ``2 Phi cos((dphi + T_s dws + T_i dwi)/2)``."""
    arg = delta_phi + t_s * phi.signal.detunings[:, None] + t_i * phi.idler.detunings[None, :]
    return PhaseMatching(2.0 * phi.values * np.cos(0.5 * arg), phi.signal, phi.idler, phi.process)


def walkoff_and_slopes(path: Iterable[SegmentProfile], n_first: int = 1) -> Dict[str, float]:
    """Accumulated walk-offs and the two fringe angles (degrees).

    ``tau`` values come from the first ``n_first`` segments (the nonlinear
    section), ``T`` values from the whole path.
    """
    path = list(path)
    tau_s = sum(s.integrated_walkoff("signal", s.length) for s in path[:n_first])
    tau_i = sum(s.integrated_walkoff("idler", s.length) for s in path[:n_first])
    T_s = sum(s.integrated_walkoff("signal", s.length) for s in path)
    T_i = sum(s.integrated_walkoff("idler", s.length) for s in path)

    def angle(a, b):
        return float(np.degrees(np.arctan2(-a, b))) if b != 0 else float(np.sign(-a) * 90.0)

    return {"T_s": T_s, "T_i": T_i, "tau_s": tau_s, "tau_i": tau_i,
            "theta_pm": angle(tau_s, tau_i), "theta_int": angle(T_s, T_i)}


def _expm1_minus_x(a: float) -> float:
    if abs(a) < 1e-3:
        return a * a * (0.5 + a * (1 / 6 + a * (1 / 24 + a / 120)))
    return float(np.expm1(a) - a)


def _one_minus_sinc(d: float) -> float:
    if abs(d) < 1e-2:
        d2 = d * d
        return d2 / 6.0 * (1.0 - d2 / 20.0 * (1.0 - d2 / 42.0))
    return 1.0 - np.sin(d) / d


def analytic_heralding_efficiency(alpha: float, delta_k: float, length: float) -> float:
    """Closed-form intrinsic heralding efficiency under uniform propagation loss.

    The small-argument limits are evaluated from series so that ``alpha -> 0``
    and ``delta_k -> 0`` are continuous.
    """
    if alpha < 0:
        raise InvalidArgument("alpha must be non-negative")
    if not length > 0:
        raise InvalidArgument("length must be positive")
    a = alpha * length
    d = delta_k * length
    if a == 0 and d == 0:
        return 1.0
    # e^a - (a/d) sin d - cos d, regrouped to avoid cancellation
    den = _expm1_minus_x(a) + a * _one_minus_sinc(d) + 2.0 * np.sin(0.5 * d) ** 2
    sinc_half = np.sinc(d / (2.0 * np.pi))
    return float((a * a + d * d) * sinc_half ** 2 / (2.0 * den))

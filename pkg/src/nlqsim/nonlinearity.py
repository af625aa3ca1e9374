"""Coupling coefficients from mode fields, tensor handling and poling design."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import erf

from .core import InvalidArgument, PolingPattern

EPS0 = 8.8541878128e-12
# contracted index -> (j, k) pairs
_CONTRACTED = {0: [(0, 0)], 1: [(1, 1)], 2: [(2, 2)], 3: [(1, 2), (2, 1)],
               4: [(0, 2), (2, 0)], 5: [(0, 1), (1, 0)]}


@dataclass(frozen=True, eq=False)
class ModeFieldProfile:
    """Cross-section samples of one guided mode.

    ``e`` has shape (n_cells, 3) in the normalization where the power-flow
    integral equals ``2 v``; ``h`` is optional and only used for that check.
    """

    e: np.ndarray
    area: np.ndarray
    velocity: float
    omega: float
    h: Optional[np.ndarray] = None

    def __post_init__(self):
        e = np.asarray(self.e, dtype=complex)
        a = np.asarray(self.area, dtype=float)
        if e.ndim != 2 or e.shape[1] != 3 or a.shape != (e.shape[0],):
            raise InvalidArgument("field must be (n_cells, 3) with one area per cell")
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "area", a)

    def normalization(self) -> float:
        """Cell sum of ``e x h* + e* x h`` along z."""
        if self.h is None:
            raise InvalidArgument("magnetic field not provided")
        h = np.asarray(self.h, dtype=complex)
        s = np.cross(self.e, h.conj()) + np.cross(self.e.conj(), h)
        return float(np.real(np.sum(s[:, 2] * self.area)))

    def check_normalization(self, rtol: float = 0.01) -> bool:
        return abs(self.normalization() - 2.0 * self.velocity) <= rtol * 2.0 * self.velocity


@dataclass(frozen=True, eq=False)
class SusceptibilityTensors:
    """chi2 in m/V (chi2 = 2 d) and chi3 in m^2/V^2."""

    chi2: np.ndarray = field(default_factory=lambda: np.zeros((3, 3, 3)))
    chi3: np.ndarray = field(default_factory=lambda: np.zeros((3, 3, 3, 3)))

    @classmethod
    def from_contracted_d(cls, d: np.ndarray, chi3: Optional[np.ndarray] = None):
        d = np.asarray(d, dtype=float)
        if d.shape != (3, 6):
            raise InvalidArgument("contracted d must be 3x6")
        chi2 = np.zeros((3, 3, 3))
        for i in range(3):
            for m, pairs in _CONTRACTED.items():
                for j, k in pairs:
                    chi2[i, j, k] = 2.0 * d[i, m]
        return cls(chi2, np.zeros((3, 3, 3, 3)) if chi3 is None else chi3)


def d_matrix_3m(d33: float, d31: float, d22: float) -> np.ndarray:
    """Contracted d for point group 3m (lithium niobate)."""
    return np.array([[0, 0, 0, 0, d31, -d22],
                     [-d22, d22, 0, d31, 0, 0],
                     [d31, d31, d33, 0, 0, 0]], dtype=float)


def d_matrix_43m(d14: float) -> np.ndarray:
    """Contracted d for point group -43m (zincblende, e.g. GaP)."""
    d = np.zeros((3, 6))
    d[0, 3] = d[1, 4] = d[2, 5] = d14
    return d


def isotropic_chi3(diag: float) -> np.ndarray:
    """Full-permutation-symmetric chi3 with off-diagonal pairs at diag/3."""
    t = np.zeros((3, 3, 3, 3))
    for i in range(3):
        for j in range(3):
            if i == j:
                t[i, i, i, i] = diag
            else:
                t[i, i, j, j] = t[i, j, i, j] = t[i, j, j, i] = diag / 3.0
    return t


def rotation_x(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])


def rotate_tensors(tensors: SusceptibilityTensors, theta: float) -> SusceptibilityTensors:
    if not np.isfinite(theta):
        raise InvalidArgument("angle must be finite")
    r = rotation_x(theta)
    chi2 = np.einsum("im,jn,ko,mno->ijk", r, r, r, tensors.chi2)
    chi3 = np.einsum("im,jn,ko,lp,mnop->ijkl", r, r, r, r, tensors.chi3)
    return SusceptibilityTensors(chi2, chi3)


def _check_cells(*fields: ModeFieldProfile):
    n = fields[0].e.shape[0]
    for f in fields[1:]:
        if f.e.shape[0] != n or not np.allclose(f.area, fields[0].area):
            raise InvalidArgument("field profiles must share the cross-section grid")


def overlap_gamma(process: str, tensors: SusceptibilityTensors, signal: ModeFieldProfile = None,
                  idler: ModeFieldProfile = None, pump: ModeFieldProfile = None,
                  pump2: ModeFieldProfile = None) -> float:
    """Nonlinear coupling coefficient of one process as a cell-area-weighted sum.

    ``process`` is one of pdc, qfc, spm, xpm_s, xpm_i, sfwm. The result is
    complex in general; for real-valued fixtures take ``.real``.
    """
    p = process.lower()
    conj = np.conj
    if p in ("pdc", "qfc"):
        _check_cells(signal, idler, pump)
        a = signal.area
        pref = EPS0 * np.sqrt(signal.omega * idler.omega
                              / (2.0 * pump.velocity * signal.velocity * idler.velocity))
        if p == "pdc":
            es, ei, ep = conj(signal.e), conj(idler.e), pump.e
        else:
            es, ei, ep = signal.e, conj(idler.e), conj(pump.e)
        val = np.einsum("lmn,cl,cm,cn,c->", tensors.chi2, es, ei, ep, a)
        return complex(pref * val)
    if p == "spm":
        a, e = pump.area, pump.e
        pref = EPS0 * 3.0 * pump.omega / (4.0 * pump.velocity ** 2)
        val = np.einsum("lmno,cl,cm,cn,co,c->", tensors.chi3, conj(e), conj(e), e, e, a)
        return complex(pref * val)
    if p in ("xpm_s", "xpm_i"):
        m = signal if p == "xpm_s" else idler
        _check_cells(pump, m)
        pref = EPS0 * 3.0 * m.omega / (2.0 * pump.velocity * m.velocity)
        val = np.einsum("lmno,cl,cm,cn,co,c->", tensors.chi3, conj(pump.e), conj(m.e),
                        pump.e, m.e, pump.area)
        return complex(pref * val)
    if p == "sfwm":
        p2 = pump if pump2 is None else pump2
        _check_cells(signal, idler, pump, p2)
        pref = EPS0 * 3.0 * np.sqrt(signal.omega * idler.omega) / (
            2.0 * np.sqrt(pump.velocity * p2.velocity * signal.velocity * idler.velocity))
        val = np.einsum("lmno,cl,cm,cn,co,c->", tensors.chi3, conj(signal.e), conj(idler.e),
                        pump.e, p2.e, signal.area)
        return complex(pref * val)
    raise InvalidArgument(f"unknown process {process!r}")


def millers_rule(d_ref: float, eps_ref: Sequence[float], eps_target: Sequence[float]) -> float:
    """Rescale a d coefficient with Miller's delta held constant.

    ``eps_*`` are the relative permittivities ``(eps_i(2w), eps_j(w), eps_k(w))``.
    """
    er, et = np.asarray(eps_ref, float), np.asarray(eps_target, float)
    if er.shape != (3,) or et.shape != (3,):
        raise InvalidArgument("need three permittivities per frequency triple")
    if np.any(er <= 1) or np.any(et <= 1):
        raise InvalidArgument("permittivities must exceed 1")
    return float(d_ref * np.prod(et - 1.0) / np.prod(er - 1.0))


def n2_to_chi3(n2: float, n: float) -> float:
    """Kerr index (m^2/W) to diagonal chi3 (m^2/V^2)."""
    if not n > 0:
        raise InvalidArgument("refractive index must be positive")
    return n2 * n * n / 282.55


def qpm_period(delta_k_bar: float, order: int = 1) -> Optional[float]:
    """Poling period for odd-order QPM; None when already phase matched."""
    if order < 1 or order % 2 == 0:
        raise InvalidArgument("QPM order must be a positive odd integer")
    if delta_k_bar == 0:
        return None
    return 2.0 * np.pi * order / abs(delta_k_bar)


def periodic_pattern(period: float, length: float, duty: float = 0.5,
                     first_sign: float = 1.0) -> PolingPattern:
    if not 0 < duty < 1:
        raise InvalidArgument("duty cycle must lie in (0, 1)")
    if not 0 < period <= length:
        raise InvalidArgument("period must be positive and no longer than the segment")
    walls = [0.0]
    widths = (duty * period, (1.0 - duty) * period)
    k = 0
    while walls[-1] < length * (1 - 1e-12):
        walls.append(min(length, walls[-1] + widths[k % 2]))
        k += 1
    walls = np.array(walls)
    if walls[-1] - walls[-2] < 1e-9 * period and walls.size > 2:
        walls = np.delete(walls, -2)
    n = walls.size - 1
    signs = first_sign * np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    return PolingPattern(walls, signs)


def domain_integrals(walls: np.ndarray, delta_k_bar: float) -> np.ndarray:
    """``integral exp(i dk z) dz`` over each domain."""
    a, b = walls[:-1], walls[1:]
    if delta_k_bar == 0:
        return (b - a).astype(complex)
    return (np.exp(1j * delta_k_bar * b) - np.exp(1j * delta_k_bar * a)) / (1j * delta_k_bar)


def erf_target(length: float, sigma: float, c: float) -> Callable[[np.ndarray], np.ndarray]:
    """Amplitude of the running phase-matching integral that yields a Gaussian spectrum."""
    s = 2.0 * np.sqrt(2.0) * sigma

    def target(z):
        z = np.asarray(z, dtype=float)
        return c * (erf(length / s) - erf((length - 2.0 * z) / s))

    return target


@dataclass(frozen=True, eq=False)
class ApodizationResult:
    pattern: PolingPattern
    z: np.ndarray
    realized: np.ndarray
    target: np.ndarray
    saturated: bool
    delta_k_bar: float = 0.0

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.realized - self.target)))

    @property
    def domain_increment(self) -> float:
        """Largest amplitude change one domain can contribute."""
        return float(np.max(np.abs(domain_integrals(self.z, self.delta_k_bar))))


def apodized_pattern(delta_k_bar: float, length: float, sigma: Optional[float] = None,
                     c: Optional[float] = None,
                     target: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                     first_sign: float = 1.0) -> ApodizationResult:
    """Greedy domain-by-domain sign choice tracking a target |Phi(z)|.

    Domains are one coherence length ``pi/|dk|`` wide (the last one is
    truncated at ``length``). At each wall the sign whose running integral
    lands closer to the target amplitude wins; ties keep the previous sign.
    ``saturated`` is set when the target outruns what full periodic poling can
    deliver. The running integral uses unit coupling; ``realized`` is its
    magnitude at every wall.
    """
    if delta_k_bar == 0:
        raise InvalidArgument("apodization needs a non-zero mismatch")
    lc = np.pi / abs(delta_k_bar)
    if sigma is None:
        sigma = length / 4.0
    if c is None:
        c = np.sqrt(2.0 / np.pi) * sigma
    if target is None:
        target = erf_target(length, sigma, c)
    n = int(np.ceil(length / lc - 1e-9))
    walls = np.minimum(np.arange(n + 1) * lc, length)
    walls[-1] = length
    steps = domain_integrals(walls, delta_k_bar)
    tgt = np.asarray(target(walls), dtype=float)
    phi = 0.0 + 0.0j
    realized = np.zeros(n + 1)
    signs = np.empty(n)
    prev = first_sign
    for k in range(n):
        plus = phi + steps[k]
        minus = phi - steps[k]
        dp = abs(abs(plus) - tgt[k + 1])
        dm = abs(abs(minus) - tgt[k + 1])
        if abs(dp - dm) <= 1e-12 * lc:
            s = prev
        else:
            s = 1.0 if dp < dm else -1.0
        phi = plus if s > 0 else minus
        signs[k] = s
        prev = s
        realized[k + 1] = abs(phi)
    reach = np.concatenate([[0.0], np.cumsum(np.abs(steps))])
    saturated = bool(np.any(tgt > reach + 1e-9 * lc))
    return ApodizationResult(PolingPattern(walls, signs), walls, realized, tgt, saturated,
                             float(delta_k_bar))


def apm_profile(gamma0: float, l_eff: float, period: float, length: float,
                samples_per_half_period: int = 64, dominant_term: bool = False
                ) -> Tuple[np.ndarray, np.ndarray]:
    """Angular-phase-matching coupling ``gamma(z)`` sampled on [0, length].

    The position is measured from the middle of the segment; the profile is
    a Gaussian envelope times ``|sin(2 pi u / period)|``, or with
    ``dominant_term`` the phase-matched harmonic ``-(4/3pi) cos(4 pi u / period)``.
    Samples include every zero of the sine so linear interpolation keeps the kinks.
    """
    if not (gamma0 == gamma0 and l_eff > 0 and period > 0 and length > 0):
        raise InvalidArgument("invalid APM parameters")
    half = period / 2.0
    u0, u1 = -length / 2.0, length / 2.0
    k0 = int(np.floor(u0 / half))
    k1 = int(np.ceil(u1 / half))
    zeros = half * np.arange(k0, k1 + 1)
    fine = (zeros[:-1, None] + half * np.arange(samples_per_half_period)[None, :]
            / samples_per_half_period).ravel()
    u = np.concatenate([fine, [zeros[-1]]])
    u = u[(u > u0) & (u < u1)]
    u = np.concatenate([[u0], u, [u1]])
    env = gamma0 * np.exp(-0.5 * (u / l_eff) ** 2)
    if dominant_term:
        g = env * (-4.0 / (3.0 * np.pi)) * np.cos(4.0 * np.pi * u / period)
    else:
        g = env * np.abs(np.sin(2.0 * np.pi * u / period))
    return u - u0, g

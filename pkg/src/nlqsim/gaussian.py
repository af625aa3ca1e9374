"""Gaussian states in the complex (a, a^dagger) representation.

Modes are ordered ``(a_s[0..Ns), a_i[0..Ni), a_s^dagger..., a_i^dagger...)`` and
the covariance is ``sigma_jk = <xi_j xi_k^dagger + xi_k^dagger xi_j>`` so that
vacuum is the identity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Tuple, Union

import numpy as np

from .core import FrequencyGrid, InvalidArgument, NumericalFailure
from .propagator import CONVERTER, TransferMatrix


class UndefinedEfficiency(ArithmeticError):
    """Raised when a heralding ratio has a zero click probability in its denominator."""


@dataclass(frozen=True, eq=False)
class CovarianceState:
    sigma: np.ndarray
    signal_grid: FrequencyGrid
    idler_grid: FrequencyGrid

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=complex)
        if s.shape != (2 * self.n_modes, 2 * self.n_modes):
            raise InvalidArgument("covariance size does not match the grids")
        object.__setattr__(self, "sigma", s)

    @property
    def n_s(self) -> int:
        return self.signal_grid.n_points

    @property
    def n_i(self) -> int:
        return self.idler_grid.n_points

    @property
    def n_modes(self) -> int:
        return self.n_s + self.n_i

    def mode_indices(self, which) -> np.ndarray:
        """Mode indices (into the annihilation block) of a label or explicit list."""
        if isinstance(which, str):
            if which == "signal":
                return np.arange(self.n_s)
            if which == "idler":
                return np.arange(self.n_s, self.n_modes)
            if which == "all":
                return np.arange(self.n_modes)
            raise InvalidArgument(f"unknown mode label {which!r}")
        idx = np.unique(np.asarray(list(which), dtype=int))
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_modes):
            raise InvalidArgument("mode index out of range")
        return idx

    def restricted(self, which) -> np.ndarray:
        idx = self.mode_indices(which)
        full = np.concatenate([idx, idx + self.n_modes])
        return self.sigma[np.ix_(full, full)]

    def mean_photons(self, which="signal") -> float:
        idx = self.mode_indices(which)
        return float(np.sum(self.sigma.real[idx, idx] - 1.0) / 2.0)


def vacuum(signal_grid: FrequencyGrid, idler_grid: FrequencyGrid) -> CovarianceState:
    n = signal_grid.n_points + idler_grid.n_points
    return CovarianceState(np.eye(2 * n, dtype=complex), signal_grid, idler_grid)


def symplectic_metric(n_modes: int) -> np.ndarray:
    return np.diag(np.concatenate([np.ones(n_modes), -np.ones(n_modes)]))


def symplectic_from_transfer(u: TransferMatrix, tol: float = 1e-6) -> np.ndarray:
    """Embed a two-mode transfer matrix as a map on (a_s, a_i, a_s^dagger, a_i^dagger)."""
    scale = max(1.0, float(np.linalg.norm(u.matrix)) ** 2)
    if u.defect() > tol * scale:
        raise InvalidArgument("transfer matrix violates the Bogoliubov/unitarity condition")
    ns, ni = u.n_s, u.n_i
    n = ns + ni
    m = np.zeros((2 * n, 2 * n), dtype=complex)
    if u.kind == CONVERTER:
        m[:n, :n] = u.matrix
        m[n:, n:] = u.matrix.conj()
        return m
    s, i, sd, idg = slice(0, ns), slice(ns, n), slice(n, n + ns), slice(n + ns, 2 * n)
    m[s, s] = u.U_ss
    m[s, idg] = u.U_si
    m[i, i] = u.U_ii
    m[i, sd] = u.U_is
    m[sd, i] = u.U_si.conj()
    m[sd, sd] = u.U_ss.conj()
    m[idg, s] = u.U_is.conj()
    m[idg, idg] = u.U_ii.conj()
    return m


def symplectic_defect(m: np.ndarray) -> float:
    k = symplectic_metric(m.shape[0] // 2)
    return float(np.linalg.norm(m @ k @ m.conj().T - k))


def evolve(state: CovarianceState, m: np.ndarray) -> CovarianceState:
    if m.shape != state.sigma.shape:
        raise InvalidArgument("symplectic map does not match the state dimension")
    return CovarianceState(m @ state.sigma @ m.conj().T, state.signal_grid, state.idler_grid)


def _transmittance_vector(state: CovarianceState, t) -> np.ndarray:
    if isinstance(t, Mapping):
        vec = np.ones(state.n_modes)
        for label, val in t.items():
            idx = state.mode_indices(label)
            vec[idx] = np.broadcast_to(np.asarray(val, dtype=float), idx.shape)
        return vec
    vec = np.asarray(t, dtype=float)
    if vec.ndim == 0:
        return np.full(state.n_modes, float(vec))
    if vec.shape != (state.n_modes,):
        raise InvalidArgument("need one transmittance per mode")
    return vec


def apply_loss(state: CovarianceState, t) -> CovarianceState:
    """Virtual beam splitters with amplitude transmittance ``t`` per mode.

    ``t`` may be a scalar, an array over all modes, or a mapping from
    ``"signal"``/``"idler"`` to scalars or per-frequency arrays.
    """
    vec = _transmittance_vector(state, t)
    if np.any(vec < 0) or np.any(vec > 1):
        raise InvalidArgument("transmittance must lie in [0, 1]")
    d = np.concatenate([vec, vec])
    sigma = d[:, None] * state.sigma * d[None, :]
    sigma[np.diag_indices_from(sigma)] += 1.0 - d ** 2
    return CovarianceState(sigma, state.signal_grid, state.idler_grid)


def log_prob_vacuum(state: CovarianceState, which) -> float:
    s = state.restricted(which)
    if s.size == 0:
        return 0.0
    a = 0.5 * (np.eye(s.shape[0]) + s)
    a = 0.5 * (a + a.conj().T)
    try:
        c = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("covariance block is not positive definite") from exc
    diag = np.real(np.diag(c))
    if np.any(diag <= 1e-10):
        raise NumericalFailure("covariance block is not positive definite")
    return float(-np.sum(np.log(diag)))


def prob_vacuum(state: CovarianceState, which) -> float:
    """``det[(1 + sigma_S)/2]^(-1/2)`` for the restricted covariance."""
    return float(np.exp(log_prob_vacuum(state, which)))


def prob_click(state: CovarianceState, which) -> float:
    return 1.0 - prob_vacuum(state, which)


def _disjoint(state, a, b):
    ia, ib = state.mode_indices(a), state.mode_indices(b)
    if np.intersect1d(ia, ib).size:
        raise InvalidArgument("detector subsets must be disjoint")
    return ia, ib


def prob_coincidence(state: CovarianceState, a, b) -> float:
    ia, ib = _disjoint(state, a, b)
    return (1.0 - prob_vacuum(state, ia) - prob_vacuum(state, ib)
            + prob_vacuum(state, np.concatenate([ia, ib])))


def heralding_efficiency(state: CovarianceState, signal="signal", idler="idler") -> Tuple[float, float]:
    """``(P_coin / P_on(signal), P_coin / P_on(idler))`` for ideal threshold detectors."""
    ia, ib = _disjoint(state, signal, idler)
    p_s, p_i = prob_click(state, ia), prob_click(state, ib)
    if p_s <= 0 or p_i <= 0:
        raise UndefinedEfficiency("click probability is zero")
    pc = prob_coincidence(state, ia, ib)
    return pc / p_s, pc / p_i


def quadrature_covariance(state: CovarianceState) -> np.ndarray:
    """Real covariance over (x_1, p_1, x_2, p_2, ...) with vacuum = identity."""
    n = state.n_modes
    r = np.zeros((2 * n, 2 * n), dtype=complex)
    h = 1.0 / np.sqrt(2.0)
    for k in range(n):
        r[2 * k, k] = h
        r[2 * k, n + k] = h
        r[2 * k + 1, k] = -1j * h
        r[2 * k + 1, n + k] = 1j * h
    return r @ state.sigma @ r.conj().T


def squeezing_from_covariance(state: CovarianceState, tol: float = 1e-8):
    """Squeezing parameters from the quadrature eigenvalues.

    Returns ``(r, vectors)`` where ``r`` holds ``0.5 * ln(lambda)`` for the
    anti-squeezed eigenvalues taken once per degenerate doublet (descending)
    and ``vectors`` the matching eigenvectors as columns.
    """
    q = quadrature_covariance(state)
    scale = max(1.0, float(np.max(np.abs(q))))
    if np.max(np.abs(q.imag)) > tol * scale or np.max(np.abs(q - q.T)) > tol * scale:
        raise NumericalFailure("quadrature covariance is not real symmetric")
    lam, vec = np.linalg.eigh(q.real)
    order = np.argsort(lam)[::-1]
    lam, vec = lam[order], vec[:, order]
    if lam[-1] <= 0:
        raise NumericalFailure("covariance has non-positive eigenvalues")
    n = state.n_modes
    pick = np.arange(0, n, 2)
    return 0.5 * np.log(lam[pick]), vec[:, pick]


def purity_witness(state: CovarianceState) -> float:
    """``det(sigma)`` in quadrature form: 1 for pure states, above 1 when mixed."""
    sign, logdet = np.linalg.slogdet(quadrature_covariance(state).real)
    return float(sign * np.exp(logdet))

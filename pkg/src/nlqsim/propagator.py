"""Discretized generators Q(z) and transfer matrices U(z, z0).

Squeezers (PDC, SFWM) act on the stacked vector ``(a_s, a_i^dagger)`` with

    Q = [[G, F], [-F^dagger, -H^dagger]]

and converters (QFC) act on ``(a_s, a_i)`` with the Hermitian

    Q = [[G, F^dagger], [F, H]]

so that ``d/dz a = i Q a``. The propagator is the z-ordered product of
``exp(i dz Q(z_p))`` with Q sampled at step midpoints.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
from scipy.linalg import expm

from .core import (FrequencyGrid, InvalidArgument, ModeSpec, NumericalFailure, PumpField,
                   SegmentProfile, sample_on_grid)
from .pump_dynamics import PumpTrajectory, evolve_pump_spm, pump_autocorrelation

SQUEEZER = "squeezer"
CONVERTER = "converter"
LAB = "lab"
CO_ROTATING = "co_rotating"


@dataclass(frozen=True, eq=False)
class QGenerator:
    G: np.ndarray
    F: np.ndarray
    H: np.ndarray
    kind: str = SQUEEZER

    def matrix(self) -> np.ndarray:
        if self.kind == SQUEEZER:
            top = np.hstack([self.G, self.F])
            bottom = np.hstack([-self.F.conj().T, -self.H.conj().T])
        else:
            top = np.hstack([self.G, self.F.conj().T])
            bottom = np.hstack([self.F, self.H])
        return np.vstack([top, bottom])


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Block propagator over signal and idler frequency modes.

    For squeezers the stored matrix maps ``(a_s, a_i^dagger)`` and its lower
    blocks are the complex conjugates of ``U_is`` and ``U_ii``; for converters
    it maps ``(a_s, a_i)`` directly.
    """

    matrix: np.ndarray
    kind: str
    signal_grid: FrequencyGrid
    idler_grid: FrequencyGrid

    def __post_init__(self):
        if self.kind not in (SQUEEZER, CONVERTER):
            raise InvalidArgument(f"unknown process kind {self.kind!r}")
        n = self.signal_grid.n_points + self.idler_grid.n_points
        if self.matrix.shape != (n, n):
            raise InvalidArgument("matrix shape does not match the grids")

    @classmethod
    def identity(cls, kind: str, signal_grid: FrequencyGrid,
                 idler_grid: FrequencyGrid) -> "TransferMatrix":
        n = signal_grid.n_points + idler_grid.n_points
        return cls(np.eye(n, dtype=complex), kind, signal_grid, idler_grid)

    @property
    def n_s(self) -> int:
        return self.signal_grid.n_points

    @property
    def n_i(self) -> int:
        return self.idler_grid.n_points

    @property
    def delta_omega(self) -> float:
        return self.signal_grid.delta_omega

    @property
    def U_ss(self) -> np.ndarray:
        return self.matrix[:self.n_s, :self.n_s]

    @property
    def U_si(self) -> np.ndarray:
        return self.matrix[:self.n_s, self.n_s:]

    @property
    def U_is(self) -> np.ndarray:
        block = self.matrix[self.n_s:, :self.n_s]
        return block.conj() if self.kind == SQUEEZER else block

    @property
    def U_ii(self) -> np.ndarray:
        block = self.matrix[self.n_s:, self.n_s:]
        return block.conj() if self.kind == SQUEEZER else block

    def kernel(self, block: str = "si") -> np.ndarray:
        """Continuous transfer function ``[U]_mn / delta_omega``."""
        return getattr(self, "U_" + block) / self.delta_omega

    def metric(self) -> np.ndarray:
        if self.kind == CONVERTER:
            return np.eye(self.n_s + self.n_i)
        return np.diag(np.concatenate([np.ones(self.n_s), -np.ones(self.n_i)]))

    def defect(self) -> float:
        """``||U K U^dagger - K||_F`` (squeezer) or ``||U^dagger U - 1||_F`` (converter)."""
        u = self.matrix
        if self.kind == CONVERTER:
            return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])))
        k = self.metric()
        return float(np.linalg.norm(u @ k @ u.conj().T - k))


def _check_same(a: TransferMatrix, b: TransferMatrix):
    if a.kind != b.kind:
        raise InvalidArgument("cannot compose different process kinds")
    for g1, g2 in ((a.signal_grid, b.signal_grid), (a.idler_grid, b.idler_grid)):
        if g1 != g2:
            raise InvalidArgument("cannot compose transfer matrices on different grids")


def compose(u1: TransferMatrix, u2: TransferMatrix) -> TransferMatrix:
    """Apply ``u1`` first, then ``u2``."""
    _check_same(u1, u2)
    return TransferMatrix(u2.matrix @ u1.matrix, u1.kind, u1.signal_grid, u1.idler_grid)


def step_exponential(q: Union[QGenerator, np.ndarray], dz: float) -> np.ndarray:
    """``exp(i dz Q)`` by scaling and squaring with a Pade kernel."""
    if not dz > 0:
        raise InvalidArgument("dz must be positive")
    m = q.matrix() if isinstance(q, QGenerator) else np.asarray(q)
    if not np.all(np.isfinite(m)):
        raise NumericalFailure("generator has non-finite entries")
    out = expm(1j * dz * m)
    if not np.all(np.isfinite(out)):
        raise NumericalFailure("matrix exponential overflowed")
    return out


# ---------------------------------------------------------------------------------
# generator construction


def kind_of(process: str) -> str:
    return CONVERTER if process == "qfc" else SQUEEZER


def phase_rate_sign(process: str) -> float:
    """Sign relating the F-block phase rate to the segment's central mismatch."""
    return -1.0 if process == "sfwm" else 1.0


def default_split(segment: SegmentProfile, z) -> float:
    """Signal share of the mismatch phase, proportional to |1/v_j - 1/v_p|."""
    ws = abs(segment.walkoff_rate("signal", z))
    wi = abs(segment.walkoff_rate("idler", z))
    if ws + wi == 0:
        return 0.5
    return ws / (ws + wi)


def frame_rates(segment: SegmentProfile, z: float, split: Optional[float]) -> Tuple[float, float]:
    """Per-mode co-rotating phase rates (signal, idler) at z."""
    rho = phase_rate_sign(segment.process) * segment.delta_k_bar(z)
    s = default_split(segment, z) if split is None else split
    if kind_of(segment.process) == SQUEEZER:
        return s * rho, (1.0 - s) * rho
    return -s * rho, (1.0 - s) * rho


def _xpm_block(kernel: np.ndarray, pump_grid: FrequencyGrid, grid: FrequencyGrid,
               gamma: float, conjugate: bool) -> np.ndarray:
    if gamma == 0:
        return np.zeros((grid.n_points, grid.n_points), dtype=complex)
    npump = pump_grid.n_points
    diff = FrequencyGrid(-(npump - 1) * pump_grid.delta_omega, pump_grid.delta_omega,
                         2 * npump - 1)
    w = grid.omegas
    vals = sample_on_grid(kernel, diff, w[:, None] - w[None, :], warn=False)
    if conjugate:
        vals = vals.conj()
    return gamma / (2.0 * np.pi) * vals * grid.delta_omega


def pair_kernel(pump1: PumpField, pump2: PumpField, walkoff_12: float = 0.0) -> Tuple[FrequencyGrid, np.ndarray]:
    """Two-pump kernel ``B_p`` on the sum grid of the two pump grids.

    ``B_p(w) = sum_w' beta1(w - w') beta2(w') exp(-i T12 (w' - wbar2)) dw``,
    with ``T12`` the accumulated p1/p2 walk-off. The central-mismatch phase is
    applied by the caller.
    """
    g1, g2 = pump1.grid, pump2.grid
    if not g1.same_spacing(g2):
        raise InvalidArgument("pump grids must share the same spacing")
    b2 = pump2.amplitudes
    if walkoff_12 != 0.0:
        b2 = b2 * np.exp(-1j * walkoff_12 * pump2.mode.detunings)
    vals = np.convolve(pump1.amplitudes, b2) * g1.delta_omega
    grid = FrequencyGrid(g1.omega_start + g2.omega_start, g1.delta_omega,
                         g1.n_points + g2.n_points - 1)
    return grid, vals


def build_generator(segment: SegmentProfile, pump: PumpField, signal: ModeSpec, idler: ModeSpec,
                    z: float, frame: str = LAB, split: Optional[float] = None,
                    pump2: Optional[PumpField] = None, xpm: bool = True) -> QGenerator:
    """Generator of the segment's process at position z."""
    if not signal.grid.same_spacing(idler.grid):
        raise InvalidArgument("signal and idler grids must share the same spacing")
    if frame not in (LAB, CO_ROTATING):
        raise InvalidArgument(f"unknown frame {frame!r}")
    process = segment.process
    ws, wi = signal.grid.omegas, idler.grid.omegas
    dw = signal.grid.delta_omega
    gamma = segment.coupling(z)

    rho_int = phase_rate_sign(process) * segment.integrated_mismatch(z)
    phase = 1.0 if frame == CO_ROTATING else np.exp(1j * rho_int)

    if process == "pdc":
        beta = pump.sample(ws[:, None] + wi[None, :]) if gamma != 0 else 0.0
        F = gamma / np.sqrt(2.0 * np.pi) * beta * phase * dw
    elif process == "qfc":
        beta = pump.sample(wi[:, None] - ws[None, :]) if gamma != 0 else 0.0
        F = gamma * phase / np.sqrt(2.0 * np.pi) * beta * dw
    else:
        p2 = pump if pump2 is None else pump2
        t12 = segment.integrated_walkoff("pump", z, reference="pump2") if pump2 is not None \
            and "pump2" in segment.velocity else 0.0
        bgrid, bvals = pair_kernel(pump, p2, t12)
        b = sample_on_grid(bvals, bgrid, ws[:, None] + wi[None, :], what="pump pair kernel")
        F = gamma / (2.0 * np.pi) * b * phase * dw
    shape = (len(wi), len(ws)) if process == "qfc" else (len(ws), len(wi))
    F = np.broadcast_to(np.asarray(F, dtype=complex), shape).copy()

    dks = segment.walkoff_rate("signal", z) * signal.detunings
    dki = segment.walkoff_rate("idler", z) * idler.detunings
    if frame == CO_ROTATING:
        rs, ri = frame_rates(segment, z, split)
        dks = dks - rs
        dki = dki - ri
    G = np.diag(dks).astype(complex)
    H = np.diag(dki).astype(complex)
    if xpm and process != "sfwm":
        gs, gi = segment.xpm("signal", z), segment.xpm("idler", z)
        if gs != 0 or gi != 0:
            kernel = pump_autocorrelation(pump)
            G = G + _xpm_block(kernel, pump.grid, signal.grid, gs, conjugate=False)
            H = H + _xpm_block(kernel, pump.grid, idler.grid, gi, conjugate=(process == "pdc"))
    return QGenerator(G, F, H, kind_of(process))


def build_q_generator(segment, pump, signal, idler, z, frame=LAB, split=None, xpm=True):
    if segment.process != "pdc":
        raise InvalidArgument("segment is not a down-conversion segment")
    return build_generator(segment, pump, signal, idler, z, frame, split, xpm=xpm)


def build_qfc_generator(segment, pump, signal, idler, z, frame=LAB, split=None, xpm=True):
    if segment.process != "qfc":
        raise InvalidArgument("segment is not a frequency-conversion segment")
    return build_generator(segment, pump, signal, idler, z, frame, split, xpm=xpm)


def build_sfwm_generator(pump1, pump2, segment, signal, idler, z, frame=LAB, split=None):
    if segment.process != "sfwm":
        raise InvalidArgument("segment is not a four-wave-mixing segment")
    return build_generator(segment, pump1, signal, idler, z, frame, split, pump2=pump2)


# ---------------------------------------------------------------------------------
# propagation


def coherence_length(segment: SegmentProfile) -> float:
    """pi / max|central mismatch| over the samples (inf if phase matched)."""
    dk = np.max(np.abs(np.atleast_1d(segment.delta_k_bar(segment.z))))
    return np.inf if dk == 0 else np.pi / dk


def step_edges(segment: SegmentProfile, dz: float, extra: Iterable[float] = ()) -> np.ndarray:
    """Step boundaries: never straddle a breakpoint, never longer than dz."""
    bps = np.unique(np.concatenate([segment.breakpoints(), np.asarray(list(extra), float)]))
    edges = [0.0]
    for a, b in zip(bps[:-1], bps[1:]):
        if b - a <= 1e-15 * segment.length:
            continue
        n = max(1, int(np.ceil((b - a) / dz - 1e-9)))
        edges.extend(a + (b - a) * np.arange(1, n + 1) / n)
    edges[-1] = segment.length
    return np.asarray(edges)


def default_dz(segment: SegmentProfile, frame: str) -> float:
    dz = segment.length / 2000.0
    if frame == LAB:
        dz = min(dz, coherence_length(segment) / 8.0)
    return dz


def _frame_phase_totals(segment: SegmentProfile, split: Optional[float]) -> Tuple[float, float]:
    """Integrated co-rotating phases of signal and idler over the segment."""
    rho = phase_rate_sign(segment.process) * np.atleast_1d(segment.delta_k_bar(segment.z))
    if split is None:
        s = np.array([default_split(segment, z) for z in segment.z])
    else:
        s = np.full(segment.z.size, float(split))
    L = segment.length
    if kind_of(segment.process) == SQUEEZER:
        ts = segment._cumulative(s * rho, L)
        ti = segment._cumulative((1 - s) * rho, L)
    else:
        ts = segment._cumulative(-s * rho, L)
        ti = segment._cumulative((1 - s) * rho, L)
    return float(ts), float(ti)


def _to_lab(matrix: np.ndarray, segment: SegmentProfile, split: Optional[float],
            n_s: int) -> np.ndarray:
    ts, ti = _frame_phase_totals(segment, split)
    n = matrix.shape[0]
    d = np.empty(n, dtype=complex)
    d[:n_s] = np.exp(1j * ts)
    d[n_s:] = np.exp(-1j * ti) if kind_of(segment.process) == SQUEEZER else np.exp(1j * ti)
    return d[:, None] * matrix


def to_co_rotating(segment: SegmentProfile, split: Optional[float] = None) -> Dict[str, float]:
    """Frame-change description: per-mode integrated phases removed from the segment.

    Propagating with ``frame='co_rotating'`` uses these phases and restores
    the lab frame on exit, so results agree with the lab-frame computation.
    """
    ts, ti = _frame_phase_totals(segment, split)
    return {"signal": ts, "idler": ti}


def _ordered_product(tokens: List, cache: Dict, n: int) -> np.ndarray:
    """Left-multiply cached step matrices in order, powering repeated runs."""
    # run-length encode identical consecutive tokens
    runs: List[Tuple[object, int]] = []
    for t in tokens:
        if runs and runs[-1][0] == t:
            runs[-1] = (t, runs[-1][1] + 1)
        else:
            runs.append((t, 1))

    def run_matrix(run):
        key, count = run
        return cache[key] if count == 1 else np.linalg.matrix_power(cache[key], count)

    u = np.eye(n, dtype=complex)
    i = 0
    while i < len(runs):
        if i + 3 < len(runs) and runs[i] == runs[i + 2] and runs[i + 1] == runs[i + 3]:
            r = 2
            while i + 2 * r + 1 < len(runs) and runs[i + 2 * r] == runs[i] \
                    and runs[i + 2 * r + 1] == runs[i + 1]:
                r += 1
            pair = run_matrix(runs[i + 1]) @ run_matrix(runs[i])
            u = np.linalg.matrix_power(pair, r) @ u
            i += 2 * r
        else:
            u = run_matrix(runs[i]) @ u
            i += 1
    return u


def _as_trajectory(pump, segment: SegmentProfile, dz: float, spm: bool) -> PumpTrajectory:
    if isinstance(pump, PumpTrajectory):
        return pump
    if spm and np.any(segment.gamma_spm != 0):
        return evolve_pump_spm(pump, segment, dz)
    return PumpTrajectory.static(pump, segment.length)


def propagate_with_pump(segment: SegmentProfile, pump, signal: ModeSpec, idler: ModeSpec, *,
                        frame: str = CO_ROTATING, dz: Optional[float] = None,
                        split: Optional[float] = None, pump2=None, xpm: bool = True,
                        spm: bool = True) -> Tuple[TransferMatrix, PumpField]:
    """Lossless propagation through one segment; also returns the exiting pump."""
    if frame not in (LAB, CO_ROTATING):
        raise InvalidArgument(f"unknown frame {frame!r}")
    if dz is None:
        dz = default_dz(segment, frame)
    if not dz > 0:
        raise InvalidArgument("dz must be positive")
    if frame == LAB and dz > 0.5 * coherence_length(segment) * (1 + 1e-9):
        raise InvalidArgument(
            "dz exceeds half the coherence length in the lab frame; refine dz or use "
            "the co-rotating frame")
    traj = _as_trajectory(pump, segment, dz, spm)
    traj2 = None if pump2 is None else _as_trajectory(pump2, segment, dz, spm)
    edges = step_edges(segment, dz)
    kind = kind_of(segment.process)
    n = signal.grid.n_points + idler.grid.n_points

    constant_q = (segment.is_uniform and traj.is_static and (traj2 is None or traj2.is_static)
                  and (frame == CO_ROTATING or coherence_length(segment) == np.inf)
                  and not (segment.process == "sfwm" and pump2 is not None
                           and "pump2" in segment.velocity
                           and segment.walkoff_rate("pump", 0.0, "pump2") != 0))
    if constant_q:
        # Q depends only on the poling sign; merge steps per domain and cache.
        bps = segment.breakpoints()
        base = build_generator(segment, traj.at(0.0), signal, idler, 0.0, frame, split,
                               pump2=None if traj2 is None else traj2.at(0.0), xpm=xpm)
        sign0 = 1.0 if segment.poling is None else float(segment.poling.sign_at(0.0))
        q_plus = QGenerator(base.G, base.F * sign0, base.H, base.kind).matrix()
        q_minus = QGenerator(base.G, -base.F * sign0, base.H, base.kind).matrix()
        cache: Dict = {}
        tokens = []
        for a, b in zip(bps[:-1], bps[1:]):
            if b - a <= 1e-15 * segment.length:
                continue
            sgn = 1 if segment.poling is None else int(segment.poling.sign_at(0.5 * (a + b)))
            key = (sgn, int(round((b - a) * 1e15)))
            if key not in cache:
                cache[key] = step_exponential(q_plus if sgn > 0 else q_minus, b - a)
            tokens.append(key)
        u = _ordered_product(tokens, cache, n)
    else:
        u = np.eye(n, dtype=complex)
        for a, b in zip(edges[:-1], edges[1:]):
            zm = 0.5 * (a + b)
            q = build_generator(segment, traj.at(zm), signal, idler, zm, frame, split,
                                pump2=None if traj2 is None else traj2.at(zm), xpm=xpm)
            u = step_exponential(q, b - a) @ u
    if frame == CO_ROTATING:
        u = _to_lab(u, segment, split, signal.grid.n_points)
    return TransferMatrix(u, kind, signal.grid, idler.grid), traj.final


def propagate_segment(segment: SegmentProfile, pump, signal: ModeSpec, idler: ModeSpec, *,
                      frame: str = CO_ROTATING, dz: Optional[float] = None,
                      split: Optional[float] = None, pump2=None, xpm: bool = True,
                      spm: bool = True, loss_mode: bool = False, n_sections: Optional[int] = None,
                      state=None):
    """Propagate through a segment.

    Returns a ``TransferMatrix``; with ``loss_mode=True`` the segment is cut
    into ``n_sections`` pieces, each a lossless step followed by a loss map,
    and the resulting ``CovarianceState`` is returned instead.
    """
    if loss_mode:
        return propagate_segment_lossy(segment, pump, signal, idler, frame=frame, dz=dz,
                                       split=split, pump2=pump2, xpm=xpm, spm=spm,
                                       n_sections=n_sections, state=state)[0]
    return propagate_with_pump(segment, pump, signal, idler, frame=frame, dz=dz, split=split,
                               pump2=pump2, xpm=xpm, spm=spm)[0]


def default_sections(segment: SegmentProfile) -> int:
    a = max((float(np.max(v)) for v in segment.alpha.values()), default=0.0)
    return max(1, int(np.ceil(a * segment.length / 0.01)))


def _section(segment: SegmentProfile, z0: float, z1: float) -> SegmentProfile:
    """Sub-segment on [z0, z1] re-based to start at 0 (lab-frame phases offset)."""
    from .core import PolingPattern

    zs = segment.z
    inner = zs[(zs > z0) & (zs < z1)]
    znew = np.concatenate(([z0], inner, [z1])) if zs.size > 1 else np.array([z0])

    def cut(arr):
        return np.interp(znew, zs, arr) if zs.size > 1 else arr.copy()

    poling = None
    if segment.poling is not None:
        b = segment.poling.boundaries
        walls = b[(b > z0) & (b < z1)]
        nb = np.concatenate(([z0], walls, [z1]))
        signs = segment.poling.sign_at(0.5 * (nb[1:] + nb[:-1]))
        poling = PolingPattern(nb - z0, signs)
    return SegmentProfile(
        length=z1 - z0, z=znew - z0 if zs.size > 1 else np.array([0.0]),
        velocity={k: cut(v) for k, v in segment.velocity.items()},
        kbar={k: cut(v) for k, v in segment.kbar.items()},
        gamma=cut(segment.gamma), process=segment.process,
        gamma_spm=cut(segment.gamma_spm), gamma_xpm_s=cut(segment.gamma_xpm_s),
        gamma_xpm_i=cut(segment.gamma_xpm_i),
        alpha={k: cut(v) for k, v in segment.alpha.items()}, poling=poling)


def propagate_segment_lossy(segment: SegmentProfile, pump, signal: ModeSpec, idler: ModeSpec, *,
                            frame: str = CO_ROTATING, dz: Optional[float] = None,
                            split: Optional[float] = None, pump2=None, xpm: bool = True,
                            spm: bool = True, n_sections: Optional[int] = None, state=None):
    """Sectioned propagation with a loss map after every section.

    Returns ``(CovarianceState, exiting pump, exiting pump2)``. Pump amplitudes
    are attenuated by ``exp(-alpha_p * dl / 2)`` after every section.
    """
    from . import gaussian

    if isinstance(pump, PumpTrajectory):
        pump = pump.pump
    n_sec = default_sections(segment) if n_sections is None else int(n_sections)
    if n_sec < 1:
        raise InvalidArgument("n_sections must be >= 1")
    if state is None:
        state = gaussian.vacuum(signal.grid, idler.grid)
    L = segment.length
    cuts = L * np.arange(n_sec + 1) / n_sec
    kind = kind_of(segment.process)
    # Per-section phase of the lab frame accumulates across sections.
    p1, p2 = pump, pump2
    uniform = segment.is_uniform and segment.poling is None
    cached_u = None
    for k in range(n_sec):
        z0, z1 = cuts[k], cuts[k + 1]
        sub = _section(segment, z0, z1)
        if uniform and cached_u is not None and not np.any(segment.gamma_spm != 0) \
                and not segment.alpha.get("pump", np.zeros(1)).any() \
                and (p2 is None or not segment.alpha.get("pump2", np.zeros(1)).any()):
            u = cached_u
        else:
            u, p1_out = propagate_with_pump(sub, p1, signal, idler, frame=frame, dz=dz,
                                            split=split, pump2=p2, xpm=xpm, spm=spm)
        # lab-frame mismatch phase accumulated before this section
        offset = phase_rate_sign(segment.process) * segment.integrated_mismatch(z0)
        m = u.matrix
        if offset != 0.0:
            # the sub-segment restarts its phase at zero: rotate idler-side basis
            d = np.ones(m.shape[0], dtype=complex)
            ns = signal.grid.n_points
            if kind == SQUEEZER:
                d[:ns] = np.exp(0.5j * offset)
                d[ns:] = np.exp(-0.5j * offset)
            else:
                d[:ns] = np.exp(-0.5j * offset)
                d[ns:] = np.exp(0.5j * offset)
            m = (d[:, None] * m) * d.conj()[None, :]
            u = TransferMatrix(m, kind, signal.grid, idler.grid)
        elif uniform:
            cached_u = u
        state = gaussian.evolve(state, gaussian.symplectic_from_transfer(u))
        dl = z1 - z0
        ts = np.exp(-0.5 * _mean_loss(segment, "signal", z0, z1) * dl)
        ti = np.exp(-0.5 * _mean_loss(segment, "idler", z0, z1) * dl)
        state = gaussian.apply_loss(state, np.concatenate([
            np.full(signal.grid.n_points, ts), np.full(idler.grid.n_points, ti)]))
        if np.any(segment.gamma_spm != 0) and spm:
            p1 = _advance_spm(p1, sub, spm)
            if p2 is not None:
                p2 = _advance_spm(p2, sub, spm)
        tp = np.exp(-0.5 * _mean_loss(segment, "pump", z0, z1) * dl)
        p1 = p1.with_amplitudes(p1.amplitudes * tp)
        if p2 is not None:
            lab2 = "pump2" if "pump2" in segment.alpha else "pump"
            tp2 = np.exp(-0.5 * _mean_loss(segment, lab2, z0, z1) * dl)
            p2 = p2.with_amplitudes(p2.amplitudes * tp2)
    return state, p1, p2


def _advance_spm(pump: PumpField, sub: SegmentProfile, spm: bool) -> PumpField:
    traj = evolve_pump_spm(pump, sub, sub.length)
    return traj.final


def _mean_loss(segment: SegmentProfile, label: str, z0: float, z1: float) -> float:
    if label not in segment.alpha:
        return 0.0
    zz = np.linspace(z0, z1, 5)
    return float(np.mean(segment.loss(label, zz)))

"""Multi-element circuits: nonlinear stages, delay lines, phase shifters, lossy links.

Everything is expressed in the pump's co-moving frame, so a linear element only
needs each mode's group delay relative to the pump.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import gaussian
from .analysis import mean_photon_number, purity_and_schmidt_number, qpg_metrics, schmidt_decompose
from .core import FrequencyGrid, InvalidArgument, ModeSpec, PumpField, SegmentProfile
from .propagator import (CONVERTER, SQUEEZER, TransferMatrix, compose, kind_of,
                         propagate_segment_lossy, propagate_with_pump)

DelaySpec = Union[float, Tuple[Sequence[float], Sequence[float]]]


@dataclass(frozen=True)
class LinearElement:
    """Passive element between nonlinear stages.

    ``delay_*`` are group delays relative to the pump (s), either constant or a
    ``(omegas, delays)`` table. ``phase`` is a lumped pair phase (rad) of which
    ``phase_share`` goes to the signal and the rest to the idler.
    ``loss_db`` maps mode labels (signal, idler, pump) to insertion loss in dB.
    """

    delay_signal: DelaySpec = 0.0
    delay_idler: DelaySpec = 0.0
    phase: float = 0.0
    phase_share: float = 1.0
    loss_db: Mapping[str, float] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        for k, v in self.loss_db.items():
            if k not in ("signal", "idler", "pump"):
                raise InvalidArgument(f"unknown loss label {k!r}")
            if not v >= 0:
                raise InvalidArgument("insertion loss must be non-negative")
        for d in (self.delay_signal, self.delay_idler):
            if isinstance(d, tuple):
                if not np.all(np.isfinite(np.asarray(d[1], float))):
                    raise InvalidArgument("delays must be finite")
            elif not np.isfinite(d):
                raise InvalidArgument("delays must be finite")

    @classmethod
    def from_group_delays(cls, tau_pump: float, tau_signal: float, tau_idler: float,
                          name: str = "", **kw) -> "LinearElement":
        """Element from absolute group delays; only differences to the pump are kept."""
        return cls(delay_signal=tau_signal - tau_pump, delay_idler=tau_idler - tau_pump,
                   name=name, **kw)

    def transmittance(self, label: str) -> float:
        return float(10.0 ** (-self.loss_db.get(label, 0.0) / 20.0))

    @property
    def lossy(self) -> bool:
        return any(v > 0 for k, v in self.loss_db.items() if k != "pump")

    def spectral_phase(self, mode: ModeSpec, which: str) -> np.ndarray:
        spec = self.delay_signal if which == "signal" else self.delay_idler
        det = mode.detunings
        if isinstance(spec, tuple):
            w_tab, d_tab = (np.asarray(x, float) for x in spec)
            tau = np.interp(mode.grid.omegas, w_tab, d_tab)
            # phase is the integral of the group delay from the carrier
            cum = np.concatenate(([0.0], np.cumsum(0.5 * (tau[1:] + tau[:-1])
                                                   * mode.grid.delta_omega)))
            phi = cum - np.interp(mode.center_frequency, mode.grid.omegas, cum)
        else:
            phi = det * float(spec)
        share = self.phase_share if which == "signal" else 1.0 - self.phase_share
        return phi + share * self.phase


def _phases(elem: LinearElement, signal: ModeSpec, idler: ModeSpec):
    return elem.spectral_phase(signal, "signal"), elem.spectral_phase(idler, "idler")


def linear_transfer(elem: LinearElement, kind: str, signal: ModeSpec, idler: ModeSpec) -> TransferMatrix:
    """Lossless part of a linear element as a diagonal transfer matrix."""
    ps, pi = _phases(elem, signal, idler)
    sgn = -1.0 if kind == SQUEEZER else 1.0
    d = np.concatenate([np.exp(1j * ps), np.exp(sgn * 1j * pi)])
    return TransferMatrix(np.diag(d), kind, signal.grid, idler.grid)


def apply_linear_element(target, elem: LinearElement, signal: ModeSpec, idler: ModeSpec):
    """Apply an element to a ``TransferMatrix`` (lossless only) or a ``CovarianceState``."""
    if isinstance(target, TransferMatrix):
        if elem.lossy:
            raise InvalidArgument("lossy elements need the covariance route")
        return compose(target, linear_transfer(elem, target.kind, signal, idler))
    if isinstance(target, gaussian.CovarianceState):
        ps, pi = _phases(elem, signal, idler)
        ph = np.concatenate([ps, pi])
        m = np.diag(np.concatenate([np.exp(1j * ph), np.exp(-1j * ph)]))
        state = gaussian.evolve(target, m)
        if elem.lossy:
            state = gaussian.apply_loss(state, {"signal": elem.transmittance("signal"),
                                                "idler": elem.transmittance("idler")})
        return state
    raise InvalidArgument("target must be a TransferMatrix or CovarianceState")


@dataclass(frozen=True, eq=False)
class NonlinearStage:
    segment: SegmentProfile
    frame: str = "co_rotating"
    dz: Optional[float] = None
    n_sections: Optional[int] = None
    name: str = ""


Element = Union[NonlinearStage, LinearElement]


@dataclass(frozen=True, eq=False)
class Circuit:
    elements: Tuple[Element, ...]

    def __post_init__(self):
        els = tuple(NonlinearStage(e) if isinstance(e, SegmentProfile) else e
                    for e in self.elements)
        if not els:
            raise InvalidArgument("circuit needs at least one element")
        stages = [e for e in els if isinstance(e, NonlinearStage)]
        if not stages:
            raise InvalidArgument("circuit needs at least one nonlinear stage")
        kinds = {kind_of(s.segment.process) for s in stages}
        if len(kinds) != 1:
            raise InvalidArgument("cannot mix squeezer and converter stages")
        for e in els:
            if not isinstance(e, (NonlinearStage, LinearElement)):
                raise InvalidArgument(f"unsupported circuit element {type(e).__name__}")
        object.__setattr__(self, "elements", els)

    @property
    def kind(self) -> str:
        s = next(e for e in self.elements if isinstance(e, NonlinearStage))
        return kind_of(s.segment.process)

    @property
    def lossy(self) -> bool:
        for e in self.elements:
            if isinstance(e, LinearElement) and e.lossy:
                return True
            if isinstance(e, NonlinearStage) and any(
                    np.any(v > 0) for k, v in e.segment.alpha.items() if k in ("signal", "idler")):
                return True
        return False

    def with_phase(self, index: int, phase: float) -> "Circuit":
        els = list(self.elements)
        if not isinstance(els[index], LinearElement):
            raise InvalidArgument("phase knob must sit on a linear element")
        els[index] = replace(els[index], phase=phase)
        return Circuit(tuple(els))


@dataclass(frozen=True, eq=False)
class CircuitResult:
    result: Union[TransferMatrix, "gaussian.CovarianceState"]
    pump: PumpField
    metrics: Dict[str, object]


def _attenuate_pump(pump: PumpField, elem: LinearElement) -> PumpField:
    t = elem.transmittance("pump")
    return pump if t == 1.0 else pump.with_amplitudes(pump.amplitudes * t)


def transfer_metrics(u: TransferMatrix) -> Dict[str, object]:
    sd = schmidt_decompose(u)
    out: Dict[str, object] = {"r": sd.r}
    if u.kind == SQUEEZER:
        out["mean_photons_signal"] = mean_photon_number(u, "signal")
        out["mean_photons_idler"] = mean_photon_number(u, "idler")
        if np.any(sd.r > 0):
            k, p = purity_and_schmidt_number(sd.r)
            out.update(schmidt_number=k, purity=p)
    else:
        q = qpg_metrics(sd.r)
        out.update(eta=q.efficiencies, separability=q.separability, selectivity=q.selectivity)
    out["bandwidth_signal"] = marginal_fwhm(u)
    return out


def state_metrics(state) -> Dict[str, object]:
    r, _ = gaussian.squeezing_from_covariance(state)
    return {"mean_photons_signal": state.mean_photons("signal"),
            "mean_photons_idler": state.mean_photons("idler"),
            "r_max": float(r[0]) if r.size else 0.0, "r": r}


def marginal_fwhm(u: TransferMatrix) -> float:
    """FWHM (rad/s) of the signal marginal ``sum_i |U_si|^2``."""
    m = np.sum(np.abs(u.U_si) ** 2, axis=1)
    if not np.any(m > 0):
        return 0.0
    w = u.signal_grid.omegas
    k = int(np.argmax(m))
    half = 0.5 * m[k]
    lo = k
    while lo > 0 and m[lo - 1] >= half:
        lo -= 1
    hi = k
    while hi < m.size - 1 and m[hi + 1] >= half:
        hi += 1
    left = w[lo] if lo == 0 else w[lo - 1] + (half - m[lo - 1]) / (m[lo] - m[lo - 1]) * (w[lo] - w[lo - 1])
    right = w[hi] if hi == m.size - 1 else w[hi] + (m[hi] - half) / (m[hi] - m[hi + 1]) * (w[hi + 1] - w[hi])
    return float(right - left)


def run_circuit(circuit: Circuit, pump: PumpField, signal: ModeSpec, idler: ModeSpec, *,
                route: str = "auto", pump2: Optional[PumpField] = None,
                metrics: bool = True) -> CircuitResult:
    """Run the elements in order.

    ``route='transfer'`` composes lossless transfer matrices; ``'covariance'``
    evolves a Gaussian state with loss maps; ``'auto'`` picks covariance only
    when some element is lossy.
    """
    if route == "auto":
        route = "covariance" if circuit.lossy else "transfer"
    if route not in ("transfer", "covariance"):
        raise InvalidArgument(f"unknown route {route!r}")
    p, p2 = pump, pump2
    if route == "transfer":
        u = TransferMatrix.identity(circuit.kind, signal.grid, idler.grid)
        for e in circuit.elements:
            if isinstance(e, NonlinearStage):
                step, p_out = propagate_with_pump(e.segment, p, signal, idler, frame=e.frame,
                                                  dz=e.dz, pump2=p2)
                u = compose(u, step)
                p = p_out
            else:
                u = apply_linear_element(u, e, signal, idler)
                p = _attenuate_pump(p, e)
                if p2 is not None:
                    p2 = _attenuate_pump(p2, e)
        return CircuitResult(u, p, transfer_metrics(u) if metrics else {})
    state = gaussian.vacuum(signal.grid, idler.grid)
    for e in circuit.elements:
        if isinstance(e, NonlinearStage):
            state, p, p2 = propagate_segment_lossy(e.segment, p, signal, idler, frame=e.frame,
                                                   dz=e.dz, pump2=p2, n_sections=e.n_sections,
                                                   state=state)
        else:
            state = apply_linear_element(state, e, signal, idler)
            p = _attenuate_pump(p, e)
            if p2 is not None:
                p2 = _attenuate_pump(p2, e)
    return CircuitResult(state, p, state_metrics(state) if metrics else {})


def default_sweep_metric(kind: str) -> Callable[[Union[TransferMatrix, object]], float]:
    if kind == SQUEEZER:
        def photons(res):
            if isinstance(res, TransferMatrix):
                return mean_photon_number(res, "signal")
            return res.mean_photons("signal")
        return photons

    def eta1(res):
        return float(np.sin(schmidt_decompose(res).r[0]) ** 2)
    return eta1


@dataclass(frozen=True, eq=False)
class SweepResult:
    phases: np.ndarray
    values: np.ndarray
    results: List[object]

    @property
    def visibility(self) -> float:
        hi, lo = float(np.max(self.values)), float(np.min(self.values))
        return (hi - lo) / (hi + lo) if hi + lo > 0 else 0.0


def sweep_phase(circuit: Circuit, phase_element: int, phases: Sequence[float], pump: PumpField,
                signal: ModeSpec, idler: ModeSpec, metric: Optional[Callable] = None,
                jobs: int = 1, pump2: Optional[PumpField] = None) -> SweepResult:
    """Scan the lumped phase of one linear element.

    For lossless circuits every nonlinear stage is propagated once and only the
    diagonal phase factor is recomposed per point.
    """
    phases = np.asarray(phases, dtype=float)
    if phases.size < 2 or np.ptp(phases) < 2 * np.pi - 1e-9:
        raise InvalidArgument("phase grid must span at least 2 pi")
    metric = metric or default_sweep_metric(circuit.kind)
    if not circuit.lossy:
        pieces: List[Union[TransferMatrix, int]] = []
        p, p2 = pump, pump2
        for idx, e in enumerate(circuit.elements):
            if isinstance(e, NonlinearStage):
                step, p = propagate_with_pump(e.segment, p, signal, idler, frame=e.frame,
                                              dz=e.dz, pump2=p2)
                pieces.append(step)
            else:
                pieces.append(idx if idx == phase_element
                              else linear_transfer(e, circuit.kind, signal, idler))
                p = _attenuate_pump(p, e)
                if p2 is not None:
                    p2 = _attenuate_pump(p2, e)

        def run_one(phi):
            u = TransferMatrix.identity(circuit.kind, signal.grid, idler.grid)
            for piece in pieces:
                if isinstance(piece, int):
                    elem = replace(circuit.elements[piece], phase=phi)
                    piece = linear_transfer(elem, circuit.kind, signal, idler)
                u = compose(u, piece)
            return u
    else:
        def run_one(phi):
            return run_circuit(circuit.with_phase(phase_element, phi), pump, signal, idler,
                               pump2=pump2, metrics=False).result

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(run_one, phases))
    else:
        results = [run_one(phi) for phi in phases]
    values = np.array([metric(r) for r in results])
    return SweepResult(phases, values, results)


@dataclass(frozen=True, eq=False)
class CascadeResult:
    n_stages: np.ndarray
    r_max: np.ndarray
    mean_photons: np.ndarray
    bandwidth: np.ndarray
    results: List[object]


def cascade_stages(stage: Union[SegmentProfile, NonlinearStage], twoc: Optional[LinearElement],
                   n_max: int, pump: PumpField, signal: ModeSpec, idler: ModeSpec, *,
                   lossy: bool = False) -> CascadeResult:
    """Metrics after 1..n_max identical stages joined by the compensator ``twoc``."""
    if n_max < 1:
        raise InvalidArgument("need at least one stage")
    if isinstance(stage, SegmentProfile):
        stage = NonlinearStage(stage)
    kind = kind_of(stage.segment.process)
    link = twoc if twoc is not None else LinearElement()
    r_max, photons, bw, results = [], [], [], []
    if not lossy:
        step, p_after = propagate_with_pump(stage.segment, pump, signal, idler, frame=stage.frame,
                                           dz=stage.dz)
        static = p_after is pump or np.array_equal(p_after.amplitudes, pump.amplitudes)
        u = step
        p = p_after
        for n in range(1, n_max + 1):
            if n > 1:
                u = apply_linear_element(u, link, signal, idler)
                p = _attenuate_pump(p, link)
                if static and link.transmittance("pump") == 1.0:
                    s = step
                else:
                    s, p = propagate_with_pump(stage.segment, p, signal, idler,
                                               frame=stage.frame, dz=stage.dz)
                u = compose(u, s)
            sd = schmidt_decompose(u)
            r_max.append(float(sd.r[0]))
            photons.append(mean_photon_number(u) if kind == SQUEEZER else float(np.sum(sd.efficiencies)))
            bw.append(marginal_fwhm(u))
            results.append(u)
    else:
        state = gaussian.vacuum(signal.grid, idler.grid)
        p = pump
        for n in range(1, n_max + 1):
            if n > 1:
                state = apply_linear_element(state, link, signal, idler)
                p = _attenuate_pump(p, link)
            state, p, _ = propagate_segment_lossy(stage.segment, p, signal, idler, frame=stage.frame,
                                                  dz=stage.dz, n_sections=stage.n_sections,
                                                  state=state)
            r, _ = gaussian.squeezing_from_covariance(state)
            r_max.append(float(r[0]))
            photons.append(state.mean_photons("signal"))
            bw.append(np.nan)
            results.append(state)
    return CascadeResult(np.arange(1, n_max + 1), np.array(r_max), np.array(photons),
                         np.array(bw), results)


# --------------------------------------------------------------------------------------
# walk-off compensation presets and component delay tables (ps)

PS = 1e-12
APBS_DELAYS = {"EME": (35.162, 32.422, 35.153), "FDE": (35.145, 32.407, 35.141)}
TAPER_DELAYS = {"EME": (0.827, 8.023, 0.828), "FDE": (0.827, 8.015, 0.827)}
BEND_DELAYS = {"FDTD": (1.374, 1.465, 1.366), "FDE": (1.389, 1.484, 1.386)}
# worst-case insertion losses quoted for the components (dB: signal, idler, pump)
APBS_LOSS_DB = (0.03, 0.08, 0.11)
BEND_LOSS_DB = (0.03, 0.05, 0.04)


def component_element(table: Mapping[str, Tuple[float, float, float]], method: str,
                      name: str = "") -> LinearElement:
    """Linear element from one (pump, signal, idler) group-delay row in ps."""
    tp, ts, ti = table[method]
    return LinearElement.from_group_delays(tp * PS, ts * PS, ti * PS, name=name)


def twoc_preset(mode: str, stage_walkoff_signal: float, stage_walkoff_idler: float = 0.0,
                lead_ps: float = 2.00, nc_total_ps: float = 4.01, phase: float = 0.0,
                loss_db: Optional[Mapping[str, float]] = None) -> LinearElement:
    """Link between two identical stages for full, partial or no compensation.

    Delays are chosen from the accumulated signal position at the start of
    the next stage: FC re-synchronizes it with the pump, PC leaves the signal
    ``lead_ps`` ahead, NC models a plain spacer whose walk-off brings the total
    to ``nc_total_ps``. ``stage_walkoff_*`` are a single stage's integrated
    ``1/v_j - 1/v_p`` (negative for a mode faster than the pump).
    """
    mode = mode.upper()
    ahead = -1.0 if stage_walkoff_signal < 0 else 1.0
    if mode == "FC":
        target = 0.0
    elif mode == "PC":
        target = ahead * abs(lead_ps) * PS
    elif mode == "NC":
        target = ahead * abs(nc_total_ps) * PS
    else:
        raise InvalidArgument("mode must be FC, PC or NC")
    delay = target - stage_walkoff_signal
    if mode == "NC" and delay * stage_walkoff_signal < 0:
        raise InvalidArgument("a plain spacer can only add walk-off; raise nc_total_ps")
    return LinearElement(delay_signal=delay,
                         delay_idler=-stage_walkoff_idler if mode != "NC" else 0.0,
                         phase=phase, loss_db=dict(loss_db or {}), name=f"twoc-{mode}")

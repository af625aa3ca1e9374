"""Scenario files: a YAML tree describing modes, segments, a circuit, sweeps and outputs.

Every physical quantity is a string with an explicit unit, e.g. ``"6 mm"`` or
``"2.22 dB/cm"``. Plain numbers are accepted only for dimensionless fields.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
import yaml

from .circuit import Circuit, LinearElement, NonlinearStage, twoc_preset
from .core import (C_LIGHT, InvalidArgument, ModeSpec, PumpField, SegmentProfile, build_frequency_grid,
                   difference_grid, gaussian_pump, sum_grid, uniform_segment, wavelength_to_omega)
from .nonlinearity import apodized_pattern, periodic_pattern
from .propagator import CONVERTER, kind_of


class ScenarioError(InvalidArgument):
    """Schema violation; the message names the offending key."""


UNITS: Dict[str, Dict[str, float]] = {
    "length": {"nm": 1e-9, "um": 1e-6, "mm": 1e-3, "cm": 1e-2, "m": 1.0},
    "time": {"fs": 1e-15, "ps": 1e-12, "ns": 1e-9, "s": 1.0},
    "energy": {"fJ": 1e-15, "pJ": 1e-12, "nJ": 1e-9, "J": 1.0},
    "loss": {"dB/cm": 1.0, "dB/m": 0.01},
    "insertion": {"dB": 1.0},
    "frequency": {"GHz": 1e9, "THz": 1e12, "Hz": 1.0},
    "walkoff": {"ps/mm": 1e-9, "fs/mm": 1e-12, "s/m": 1.0},
    "wavenumber": {"1/m": 1.0, "rad/m": 1.0, "1/mm": 1e3, "1/um": 1e6},
    "angle": {"rad": 1.0, "deg": np.pi / 180.0},
}

_QTY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z][A-Za-z/]*|1/[A-Za-z]+)\s*$")


def quantity(value: Any, kind: str, key: str) -> float:
    """Convert ``"<number> <unit>"`` to SI for the given quantity kind."""
    if not isinstance(value, str):
        raise ScenarioError(f"{key}: expected a {kind} with a unit suffix, got {value!r}")
    m = _QTY.match(value)
    if not m:
        raise ScenarioError(f"{key}: cannot parse {value!r} as a {kind}")
    unit = m.group(2)
    table = UNITS[kind]
    if unit not in table:
        raise ScenarioError(f"{key}: unit {unit!r} is not a {kind} unit ({', '.join(table)})")
    return float(m.group(1)) * table[unit]


def _number(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{key}: expected a number, got {value!r}")
    return float(value)


def _integer(value: Any, key: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{key}: expected an integer, got {value!r}")
    if value < minimum:
        raise ScenarioError(f"{key}: must be at least {minimum}")
    return value


def _section(tree: Any, key: str, allowed: Tuple[str, ...], required: Tuple[str, ...] = ()) -> Dict:
    if not isinstance(tree, dict):
        raise ScenarioError(f"{key}: expected a mapping")
    for k in tree:
        if k not in allowed:
            raise ScenarioError(f"{key}.{k}: unknown key (expected one of {', '.join(allowed)})")
    for k in required:
        if k not in tree:
            raise ScenarioError(f"{key}.{k}: missing required key")
    return tree


def _positive(x: float, key: str) -> float:
    if not x > 0:
        raise ScenarioError(f"{key}: must be positive")
    return x


LABELS = ("signal", "idler", "pump")


@dataclass(frozen=True, eq=False)
class PumpPlan:
    mode: ModeSpec
    wavelength: float
    fwhm: float
    energy: float

    def field(self, energy: Optional[float] = None) -> PumpField:
        return gaussian_pump(self.mode, self.fwhm, self.energy if energy is None else energy,
                             self.wavelength)


@dataclass(frozen=True, eq=False)
class PhaseSweep:
    element: int
    phases: np.ndarray


@dataclass(frozen=True, eq=False)
class CascadeSweep:
    stages: int
    link: Optional[int]


@dataclass(frozen=True, eq=False)
class EnergySweep:
    energies: np.ndarray


@dataclass(frozen=True, eq=False)
class RunPlan:
    name: str
    signal: ModeSpec
    idler: ModeSpec
    pump: PumpPlan
    segments: Dict[str, SegmentProfile]
    circuit: Circuit
    frame: str = "co_rotating"
    dz: Optional[float] = None
    route: str = "auto"
    sweeps: Dict[str, object] = field(default_factory=dict)
    outputs: Dict[str, object] = field(default_factory=dict)

    @property
    def n_propagations(self) -> int:
        return sum(isinstance(e, NonlinearStage) for e in self.circuit.elements)

    @property
    def n_linear(self) -> int:
        return sum(isinstance(e, LinearElement) for e in self.circuit.elements)


def _grid_of(tree: Dict, key: str):
    t = _section(tree, key, ("wavelength", "span", "points"), ("wavelength", "span", "points"))
    wl = _positive(quantity(t["wavelength"], "length", f"{key}.wavelength"), f"{key}.wavelength")
    span = _positive(quantity(t["span"], "frequency", f"{key}.span"), f"{key}.span")
    n = _integer(t["points"], f"{key}.points", 2)
    w = wavelength_to_omega(wl)
    return w, build_frequency_grid(w, 2 * np.pi * span, n)


def _velocities(t: Dict, key: str) -> Dict[str, float]:
    gi = _section(t.get("group_index", {}), f"{key}.group_index", LABELS)
    wo = _section(t.get("walkoff", {}), f"{key}.walkoff", ("signal", "idler"))
    if "pump" not in gi:
        raise ScenarioError(f"{key}.group_index.pump: missing required key")
    ng = {k: _positive(_number(v, f"{key}.group_index.{k}"), f"{key}.group_index.{k}")
          for k, v in gi.items()}
    inv_p = ng["pump"] / C_LIGHT
    vel = {"pump": 1.0 / inv_p}
    for lab in ("signal", "idler"):
        if lab in wo and lab in ng:
            raise ScenarioError(f"{key}.walkoff.{lab}: give either a group index or a walk-off")
        if lab in wo:
            inv = inv_p + quantity(wo[lab], "walkoff", f"{key}.walkoff.{lab}")
        elif lab in ng:
            inv = ng[lab] / C_LIGHT
        else:
            inv = inv_p
        if not inv > 0:
            raise ScenarioError(f"{key}.walkoff.{lab}: implies a non-positive velocity")
        vel[lab] = 1.0 / inv
    return vel


def _segment(t: Dict, key: str) -> SegmentProfile:
    t = _section(t, key, ("length", "process", "gamma", "delta_k", "group_index", "walkoff",
                          "poling", "loss", "gamma_spm", "gamma_xpm_s", "gamma_xpm_i"),
                 ("length", "gamma", "group_index"))
    length = quantity(t["length"], "length", f"{key}.length")
    if not length > 0:
        raise ScenarioError(f"{key}.length: must be positive")
    process = t.get("process", "pdc")
    if process not in ("pdc", "qfc"):
        raise ScenarioError(f"{key}.process: expected 'pdc' or 'qfc'")
    gamma = _number(t["gamma"], f"{key}.gamma")
    dk = quantity(t["delta_k"], "wavenumber", f"{key}.delta_k") if "delta_k" in t else 0.0
    vel = _velocities(t, key)
    poling = None
    if "poling" in t:
        p = _section(t["poling"], f"{key}.poling", ("kind", "sigma"), ("kind",))
        kind = p["kind"]
        if kind not in ("periodic", "apodized", "none"):
            raise ScenarioError(f"{key}.poling.kind: expected periodic, apodized or none")
        if kind != "none":
            if dk == 0:
                raise ScenarioError(f"{key}.delta_k: poling needs a nonzero mismatch")
            if kind == "periodic":
                poling = periodic_pattern(2 * np.pi / abs(dk), length)
            else:
                sigma = quantity(p["sigma"], "length", f"{key}.poling.sigma") if "sigma" in p else None
                poling = apodized_pattern(dk, length, sigma=sigma).pattern
    alpha = {}
    if "loss" in t:
        lo = _section(t["loss"], f"{key}.loss", LABELS)
        for lab, v in lo.items():
            db_cm = quantity(v, "loss", f"{key}.loss.{lab}")
            if db_cm < 0:
                raise ScenarioError(f"{key}.loss.{lab}: must be non-negative")
            alpha[lab] = db_cm * 100.0 * np.log(10.0) / 10.0
    extra = {k: _number(t[k], f"{key}.{k}") for k in ("gamma_spm", "gamma_xpm_s", "gamma_xpm_i")
             if k in t}
    return uniform_segment(length, vel, gamma, delta_k_bar=dk, process=process, poling=poling,
                           alpha=alpha, **extra)


def _linear(t: Dict, key: str, segments: Dict[str, SegmentProfile]) -> LinearElement:
    t = _section(t, key, ("preset", "stage", "delay_signal", "delay_idler", "phase", "phase_share",
                          "loss", "lead", "total", "name"))
    phase = quantity(t["phase"], "angle", f"{key}.phase") if "phase" in t else 0.0
    loss = {}
    if "loss" in t:
        lo = _section(t["loss"], f"{key}.loss", LABELS)
        for lab, v in lo.items():
            loss[lab] = quantity(v, "insertion", f"{key}.loss.{lab}")
            if loss[lab] < 0:
                raise ScenarioError(f"{key}.loss.{lab}: must be non-negative")
    if "preset" in t:
        if "stage" not in t or t["stage"] not in segments:
            raise ScenarioError(f"{key}.stage: preset needs the name of a defined segment")
        for k in ("delay_signal", "delay_idler"):
            if k in t:
                raise ScenarioError(f"{key}.{k}: not allowed together with a preset")
        seg = segments[t["stage"]]
        kw = {}
        if "lead" in t:
            kw["lead_ps"] = quantity(t["lead"], "time", f"{key}.lead") / 1e-12
        if "total" in t:
            kw["nc_total_ps"] = quantity(t["total"], "time", f"{key}.total") / 1e-12
        try:
            return twoc_preset(str(t["preset"]), seg.integrated_walkoff("signal", seg.length),
                               seg.integrated_walkoff("idler", seg.length), phase=phase,
                               loss_db=loss, **kw)
        except InvalidArgument as exc:
            raise ScenarioError(f"{key}.preset: {exc}") from None
    ds = quantity(t["delay_signal"], "time", f"{key}.delay_signal") if "delay_signal" in t else 0.0
    di = quantity(t["delay_idler"], "time", f"{key}.delay_idler") if "delay_idler" in t else 0.0
    share = _number(t.get("phase_share", 1.0), f"{key}.phase_share")
    return LinearElement(ds, di, phase=phase, phase_share=share, loss_db=loss,
                         name=str(t.get("name", "")))


def build_plan(tree: Any, source: str = "<scenario>") -> RunPlan:
    top = _section(tree, "scenario", ("name", "modes", "pump", "segments", "circuit", "propagation",
                                      "sweeps", "outputs"), ("modes", "pump", "segments"))
    modes = _section(top["modes"], "modes", ("signal", "idler"), ("signal", "idler"))
    ws, sg = _grid_of(modes["signal"], "modes.signal")
    wi, ig = _grid_of(modes["idler"], "modes.idler")
    if not sg.same_spacing(ig):
        raise ScenarioError("modes.idler.span: signal and idler grids must share one spacing")
    signal, idler = ModeSpec("signal", ws, sg), ModeSpec("idler", wi, ig)

    segs = top["segments"]
    if not isinstance(segs, dict) or not segs:
        raise ScenarioError("segments: expected a non-empty mapping of named segments")
    segments = {name: _segment(t, f"segments.{name}") for name, t in segs.items()}
    processes = {s.process for s in segments.values()}
    if len({kind_of(p) for p in processes}) != 1:
        raise ScenarioError("segments: cannot mix squeezer and converter processes")
    converter = kind_of(next(iter(processes))) == CONVERTER

    p = _section(top["pump"], "pump", ("wavelength", "fwhm", "energy"), ("fwhm", "energy"))
    pump_wl = (quantity(p["wavelength"], "length", "pump.wavelength") if "wavelength" in p
               else None)
    wp = wi - ws if converter else ws + wi
    if pump_wl is None:
        pump_wl = 2 * np.pi * C_LIGHT / wp
    elif abs(wavelength_to_omega(pump_wl) - wp) > 1e-6 * wp:
        raise ScenarioError("pump.wavelength: does not satisfy energy conservation with the modes")
    pgrid = difference_grid(ig, sg) if converter else sum_grid(sg, ig)
    energy = quantity(p["energy"], "energy", "pump.energy")
    if energy < 0:
        raise ScenarioError("pump.energy: must be non-negative")
    pump = PumpPlan(ModeSpec("pump", wp, pgrid), pump_wl,
                    _positive(quantity(p["fwhm"], "length", "pump.fwhm"), "pump.fwhm"), energy)

    elements: List = []
    circ = top.get("circuit")
    if circ is None:
        if len(segments) != 1:
            raise ScenarioError("circuit: required when more than one segment is defined")
        elements.append(NonlinearStage(next(iter(segments.values()))))
    else:
        if not isinstance(circ, list) or not circ:
            raise ScenarioError("circuit: expected a non-empty list")
        for k, item in enumerate(circ):
            key = f"circuit[{k}]"
            item = _section(item, key, ("segment", "linear"))
            if len(item) != 1:
                raise ScenarioError(f"{key}: give exactly one of segment or linear")
            if "segment" in item:
                if item["segment"] not in segments:
                    raise ScenarioError(f"{key}.segment: unknown segment {item['segment']!r}")
                elements.append(NonlinearStage(segments[item["segment"]], name=item["segment"]))
            else:
                elements.append(_linear(item["linear"], f"{key}.linear", segments))
    try:
        circuit = Circuit(tuple(elements))
    except InvalidArgument as exc:
        raise ScenarioError(f"circuit: {exc}") from None

    prop = _section(top.get("propagation", {}), "propagation", ("frame", "dz", "route"))
    frame = prop.get("frame", "co_rotating")
    if frame not in ("co_rotating", "lab"):
        raise ScenarioError("propagation.frame: expected co_rotating or lab")
    dz = quantity(prop["dz"], "length", "propagation.dz") if "dz" in prop else None
    if dz is not None:
        _positive(dz, "propagation.dz")
    route = prop.get("route", "auto")
    if route not in ("auto", "transfer", "covariance"):
        raise ScenarioError("propagation.route: expected auto, transfer or covariance")
    if frame != "co_rotating" or dz is not None:
        circuit = Circuit(tuple(NonlinearStage(e.segment, frame, dz, e.n_sections, e.name)
                                if isinstance(e, NonlinearStage) else e for e in circuit.elements))

    sweeps: Dict[str, object] = {}
    sw = _section(top.get("sweeps", {}), "sweeps", ("phase", "cascade", "energy"))
    if "phase" in sw:
        t = _section(sw["phase"], "sweeps.phase", ("element", "start", "stop", "points"),
                     ("element", "points"))
        idx = _integer(t["element"], "sweeps.phase.element", 0)
        if idx >= len(circuit.elements) or not isinstance(circuit.elements[idx], LinearElement):
            raise ScenarioError("sweeps.phase.element: must index a linear element of the circuit")
        start = quantity(t.get("start", "0 rad"), "angle", "sweeps.phase.start")
        stop = quantity(t.get("stop", "6.283185307179586 rad"), "angle", "sweeps.phase.stop")
        n = _integer(t["points"], "sweeps.phase.points", 2)
        if stop - start < 2 * np.pi - 1e-9:
            raise ScenarioError("sweeps.phase.stop: the phase grid must span at least 2 pi")
        sweeps["phase"] = PhaseSweep(idx, np.linspace(start, stop, n))
    if "cascade" in sw:
        t = _section(sw["cascade"], "sweeps.cascade", ("stages", "link"), ("stages",))
        link = t.get("link")
        if link is not None:
            link = _integer(link, "sweeps.cascade.link", 0)
            if link >= len(circuit.elements) or not isinstance(circuit.elements[link], LinearElement):
                raise ScenarioError("sweeps.cascade.link: must index a linear element")
        sweeps["cascade"] = CascadeSweep(_integer(t["stages"], "sweeps.cascade.stages"), link)
    if "energy" in sw:
        t = _section(sw["energy"], "sweeps.energy", ("start", "stop", "points"),
                     ("start", "stop", "points"))
        e0 = quantity(t["start"], "energy", "sweeps.energy.start")
        e1 = quantity(t["stop"], "energy", "sweeps.energy.stop")
        if not 0 <= e0 <= e1:
            raise ScenarioError("sweeps.energy.stop: need 0 <= start <= stop")
        sweeps["energy"] = EnergySweep(np.linspace(e0, e1, _integer(t["points"], "sweeps.energy.points")))

    out = _section(top.get("outputs", {}), "outputs", ("transfer", "metrics", "jsa", "marginals"))
    outputs = {}
    for k in ("transfer", "metrics", "jsa", "marginals"):
        v = out.get(k, k in ("transfer", "metrics"))
        if not isinstance(v, bool):
            raise ScenarioError(f"outputs.{k}: expected true or false")
        outputs[k] = v
    name = str(top.get("name", Path(source).stem))
    return RunPlan(name, signal, idler, pump, segments, circuit, frame, dz, route, sweeps, outputs)


def parse_scenario(path) -> RunPlan:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: invalid YAML: {exc}") from None
    return build_plan(tree, str(path))

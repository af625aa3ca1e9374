"""Command-line front end.

Exit codes: 0 success, 2 validation or input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import formats, gaussian
from .analysis import schmidt_decompose, temporal_transfer_function
from .circuit import (LinearElement, cascade_stages, run_circuit, sweep_phase, transfer_metrics)
from .core import InvalidArgument, NumericalFailure
from .nonlinearity import apodized_pattern, millers_rule, n2_to_chi3, periodic_pattern
from .oracle import first_order_jsa, phase_matching_function
from .propagator import SQUEEZER, TransferMatrix
from .scenario import RunPlan, ScenarioError, parse_scenario, quantity

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


def _outdir(path: str) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_run_info(out: Path, command: str, started: float, extra: Optional[Dict] = None) -> None:
    # timing lives here so the data files stay byte-identical between runs
    info = {"command": command, "elapsed_s": round(time.time() - started, 3)}
    info.update(extra or {})
    (out / "run.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")


def write_outputs(plan: RunPlan, result, metrics: Dict, out: Path) -> List[Path]:
    written = []
    if isinstance(result, TransferMatrix):
        if plan.outputs.get("transfer"):
            formats.write_transfer(out / "transfer.bin", result)
            written.append(out / "transfer.bin")
        if plan.outputs.get("jsa"):
            formats.write_jsa_magnitude(out / "jsa_abs.csv", result)
            written.append(out / "jsa_abs.csv")
        if plan.outputs.get("marginals"):
            formats.write_marginals(out / "marginals.csv", result)
            written.append(out / "marginals.csv")
    elif plan.outputs.get("transfer"):
        formats.write_matrix(out / "covariance.bin", result.sigma,
                             {"object": "covariance", "n_signal": result.n_s, "n_idler": result.n_i})
        written.append(out / "covariance.bin")
    if plan.outputs.get("metrics"):
        formats.write_metrics(out / "metrics.csv", metrics)
        written.append(out / "metrics.csv")
    return written


def cmd_simulate(args) -> int:
    t0 = time.time()
    plan = parse_scenario(args.scenario)
    res = run_circuit(plan.circuit, plan.pump.field(), plan.signal, plan.idler, route=plan.route)
    out = _outdir(args.output)
    write_outputs(plan, res.result, res.metrics, out)
    _write_run_info(out, "simulate", t0, {"scenario": plan.name})
    return EXIT_OK


def cmd_sweep(args) -> int:
    t0 = time.time()
    plan = parse_scenario(args.scenario)
    if not plan.sweeps:
        raise ScenarioError("sweeps: the scenario defines no sweep")
    out = _outdir(args.output)
    pump = plan.pump.field()
    summary: Dict[str, object] = {}
    if "phase" in plan.sweeps:
        sw = plan.sweeps["phase"]
        res = sweep_phase(plan.circuit, sw.element, sw.phases, pump, plan.signal, plan.idler,
                          jobs=args.jobs)
        formats.write_csv(out / "phase_sweep.csv", ("phase_rad", "value"),
                          zip(res.phases, res.values))
        summary.update(visibility=res.visibility, value_max=float(res.values.max()),
                       value_min=float(res.values.min()))
    if "cascade" in plan.sweeps:
        cs = plan.sweeps["cascade"]
        stage = next(e for e in plan.circuit.elements if not isinstance(e, LinearElement))
        link = plan.circuit.elements[cs.link] if cs.link is not None else None
        res = cascade_stages(stage, link, cs.stages, pump, plan.signal, plan.idler,
                             lossy=plan.circuit.lossy)
        formats.write_csv(out / "cascade.csv", ("stages", "r_max", "mean_photons", "bandwidth_rad_s"),
                          zip(res.n_stages, res.r_max, res.mean_photons, res.bandwidth))
    if "energy" in plan.sweeps:
        rows = []
        for e in plan.sweeps["energy"].energies:
            r = run_circuit(plan.circuit, plan.pump.field(e), plan.signal, plan.idler,
                            route=plan.route)
            m = r.metrics
            if "selectivity" in m:
                rows.append((e, float(m["eta"][0]), m["separability"], m["selectivity"]))
            else:
                rows.append((e, m.get("mean_photons_signal"), m.get("purity", ""),
                             float(np.max(m["r"])) if len(m["r"]) else 0.0))
        header = (("energy_J", "eta1", "separability", "selectivity")
                  if plan.circuit.kind != SQUEEZER else ("energy_J", "mean_photons", "purity", "r_max"))
        formats.write_csv(out / "energy_sweep.csv", header, rows)
    formats.write_metrics(out / "metrics.csv", summary)
    _write_run_info(out, "sweep", t0, {"scenario": plan.name, "jobs": args.jobs})
    return EXIT_OK


def cmd_oracle_jsa(args) -> int:
    t0 = time.time()
    plan = parse_scenario(args.scenario)
    seg = next(iter(plan.segments.values()))
    phi = phase_matching_function(seg, plan.signal, plan.idler)
    jsa = first_order_jsa(plan.pump.field(), phi)
    out = _outdir(args.output)
    meta = {"object": "jsa", "process": seg.process}
    formats.write_matrix(out / "jsa.bin", jsa.values, meta)
    formats.write_matrix(out / "phase_matching.bin", phi.values, {"object": "phase_matching",
                                                                   "process": seg.process})
    header, rows = formats.grid_table(np.abs(jsa.values), plan.signal.grid.omegas,
                                      plan.idler.grid.omegas, ("omega_signal", "omega_idler", "abs_jsa"))
    formats.write_csv(out / "jsa_abs.csv", header, rows)
    _write_run_info(out, "oracle-jsa", t0, {"scenario": plan.name})
    return EXIT_OK


def cmd_poling_design(args) -> int:
    dk = quantity(args.delta_k, "wavenumber", "--delta-k")
    length = quantity(args.length, "length", "--length")
    if not length > 0:
        raise InvalidArgument("--length: must be positive")
    if dk == 0:
        raise InvalidArgument("--delta-k: must be nonzero")
    if args.kind == "periodic":
        pattern = periodic_pattern(2 * np.pi / abs(dk), length)
        realized = None
    else:
        sigma = quantity(args.sigma, "length", "--sigma") if args.sigma else None
        res = apodized_pattern(dk, length, sigma=sigma)
        pattern, realized = res.pattern, res
    rows = [(pattern.boundaries[k], pattern.boundaries[k + 1], int(pattern.signs[k]))
            for k in range(pattern.n_domains)]
    formats.write_csv(args.output, ("z_start_m", "z_stop_m", "sign"), rows)
    print(f"{pattern.n_domains} domains")
    if realized is not None:
        print(f"max deviation from target {realized.max_deviation:.3e} m "
              f"(one domain step {realized.domain_increment:.3e} m)")
    return EXIT_OK


def cmd_gamma(args) -> int:
    if args.mode == "n2":
        print(repr(n2_to_chi3(args.n2, args.n) / 1e-24))
    else:
        if len(args.n_ref) != 3 or len(args.n_target) != 3:
            raise InvalidArgument("--n-ref and --n-target take three indices each")
        eps_ref = [n * n for n in args.n_ref]
        eps_tgt = [n * n for n in args.n_target]
        print(repr(millers_rule(args.d_ref, eps_ref, eps_tgt)))
    return EXIT_OK


def cmd_analyze(args) -> int:
    u = formats.read_transfer(args.matrix)
    out = _outdir(args.output)
    sd = schmidt_decompose(u)
    metrics = transfer_metrics(u)
    formats.write_metrics(out / "metrics.csv", metrics)
    k = min(args.modes, sd.r.size)
    rows = [(j + 1, sd.r[j], sd.singular_values[j]) for j in range(sd.r.size)]
    formats.write_csv(out / "schmidt.csv", ("mode", "r", "singular_value"), rows)
    formats.write_matrix(out / "input_modes.bin", sd.input_modes[:, :k], {"object": "input_modes"})
    formats.write_matrix(out / "output_modes.bin", sd.output_modes[:, :k], {"object": "output_modes"})
    return EXIT_OK


def cmd_detect(args) -> int:
    t0 = time.time()
    plan = parse_scenario(args.scenario)
    res = run_circuit(plan.circuit, plan.pump.field(), plan.signal, plan.idler, route="covariance",
                      metrics=False)
    st = res.result
    p_s, p_i = gaussian.prob_click(st, "signal"), gaussian.prob_click(st, "idler")
    p_c = gaussian.prob_coincidence(st, "signal", "idler")
    he_s, he_i = gaussian.heralding_efficiency(st)
    out = _outdir(args.output)
    formats.write_metrics(out / "detection.csv", {"p_click_signal": p_s, "p_click_idler": p_i,
                                                  "p_coincidence": p_c, "heralding_signal": he_s,
                                                  "heralding_idler": he_i})
    _write_run_info(out, "detect", t0, {"scenario": plan.name})
    return EXIT_OK


def cmd_temporal(args) -> int:
    u = formats.read_transfer(args.matrix)
    tt = temporal_transfer_function(u, args.block)
    out = _outdir(args.output)
    formats.write_matrix(out / "temporal.bin", tt.values,
                         {"object": "temporal_transfer", "block": args.block,
                          "t_signal": [float(tt.t_signal[0]), float(tt.dt[0]), int(tt.t_signal.size)],
                          "t_idler": [float(tt.t_idler[0]), float(tt.dt[1]), int(tt.t_idler.size)]})
    header, rows = formats.grid_table(np.abs(tt.values), tt.t_signal, tt.t_idler,
                                      ("t_out", "t_in", "abs_U"))
    formats.write_csv(out / "temporal_abs.csv", header, rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlqsim", description="Time-ordered nonlinear quantum optics simulator")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario's circuit once")
    s.add_argument("scenario")
    s.add_argument("-o", "--output", default="out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="run the sweeps defined in a scenario")
    s.add_argument("scenario")
    s.add_argument("-o", "--output", default="out")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("oracle-jsa", help="first-order JSA of the scenario's first segment")
    s.add_argument("scenario")
    s.add_argument("-o", "--output", default="out")
    s.set_defaults(func=cmd_oracle_jsa)

    s = sub.add_parser("poling-design", help="periodic or apodized domain layout")
    s.add_argument("--delta-k", required=True, help='e.g. "1.958e6 1/m"')
    s.add_argument("--length", required=True, help='e.g. "5 mm"')
    s.add_argument("--kind", choices=("periodic", "apodized"), default="apodized")
    s.add_argument("--sigma", help="Gaussian target width (default length/4)")
    s.add_argument("-o", "--output", default="poling.csv")
    s.set_defaults(func=cmd_poling_design)

    s = sub.add_parser("gamma", help="material coefficient conversions")
    gs = s.add_subparsers(dest="mode", required=True)
    g = gs.add_parser("n2", help="Kerr index (m^2/W) to chi3 (pm^2/V^2)")
    g.add_argument("--n2", type=float, required=True)
    g.add_argument("--n", type=float, required=True)
    g = gs.add_parser("miller", help="scale a d coefficient with Miller's rule")
    g.add_argument("--d-ref", type=float, required=True)
    g.add_argument("--n-ref", type=float, nargs=3, required=True,
                   help="refractive indices at the reference wavelengths")
    g.add_argument("--n-target", type=float, nargs=3, required=True)
    s.set_defaults(func=cmd_gamma)

    s = sub.add_parser("analyze", help="Schmidt analysis of a stored transfer matrix")
    s.add_argument("matrix")
    s.add_argument("-o", "--output", default="out")
    s.add_argument("--modes", type=int, default=10)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("detect", help="threshold-detector statistics via the covariance route")
    s.add_argument("scenario")
    s.add_argument("-o", "--output", default="out")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("temporal", help="temporal transfer function of a stored transfer matrix")
    s.add_argument("matrix")
    s.add_argument("-o", "--output", default="out")
    s.add_argument("--block", choices=("si", "is"), default="si")
    s.set_defaults(func=cmd_temporal)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (InvalidArgument, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalFailure, gaussian.UndefinedEfficiency, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

import numpy as np
import pytest

from nlqsim.circuit import (APBS_DELAYS, BEND_DELAYS, Circuit, LinearElement, NonlinearStage,
                            apply_linear_element, cascade_stages, component_element,
                            linear_transfer, run_circuit, sweep_phase, twoc_preset)
from nlqsim.core import InvalidArgument
from nlqsim.fixtures import AGVM_LENGTH, AGVM_WALKOFF_SIGNAL, agvm_fixture
from nlqsim.gaussian import vacuum
from nlqsim.propagator import SQUEEZER, TransferMatrix, compose, propagate_segment

PS = 1e-12
WALK = AGVM_WALKOFF_SIGNAL * AGVM_LENGTH  # one stage, signal ahead of the pump


@pytest.fixture(scope="module")
def agvm():
    fx = agvm_fixture(n=24)
    return fx, fx.pump(0.2e-12)


@pytest.fixture(scope="module")
def stage_u(agvm):
    fx, pump = agvm
    return propagate_segment(fx.segment, pump, fx.signal, fx.idler)


def test_empty_element_is_identity(agvm, stage_u):
    fx, _ = agvm
    out = apply_linear_element(stage_u, LinearElement(), fx.signal, fx.idler)
    assert np.array_equal(out.matrix, stage_u.matrix)


def test_component_delays_relative_to_pump():
    apbs = component_element(APBS_DELAYS, "EME")
    assert apbs.delay_signal == pytest.approx((32.422 - 35.162) * PS)
    assert apbs.delay_idler == pytest.approx((35.153 - 35.162) * PS)
    bend = component_element(BEND_DELAYS, "FDTD")
    assert bend.delay_signal == pytest.approx(0.091 * PS)


def test_common_delay_is_a_gauge(agvm):
    fx, _ = agvm
    a = LinearElement.from_group_delays(1 * PS, 3 * PS, 2 * PS)
    b = LinearElement.from_group_delays(11 * PS, 13 * PS, 12 * PS)
    ua = linear_transfer(a, SQUEEZER, fx.signal, fx.idler).matrix
    ub = linear_transfer(b, SQUEEZER, fx.signal, fx.idler).matrix
    assert np.allclose(ua, ub, atol=1e-12)


def test_tabulated_constant_delay_matches_scalar(agvm):
    fx, _ = agvm
    w = fx.signal.grid.omegas
    tab = LinearElement(delay_signal=(w, np.full(w.size, 2 * PS)))
    flat = LinearElement(delay_signal=2 * PS)
    assert np.allclose(tab.spectral_phase(fx.signal, "signal"),
                       flat.spectral_phase(fx.signal, "signal"), atol=1e-9)


def test_composition_is_associative(agvm, stage_u):
    fx, _ = agvm
    link = linear_transfer(twoc_preset("FC", WALK, phase=0.3), SQUEEZER,
                           fx.signal, fx.idler)
    left = compose(compose(stage_u, link), stage_u)
    right = compose(stage_u, compose(link, stage_u))
    assert np.allclose(left.matrix, right.matrix, atol=1e-12 * np.abs(left.matrix).max())


def test_single_stage_circuit_equals_propagation(agvm, stage_u):
    fx, pump = agvm
    res = run_circuit(Circuit((fx.segment,)), pump, fx.signal, fx.idler)
    assert np.allclose(res.result.matrix, stage_u.matrix)
    assert res.metrics["mean_photons_signal"] == pytest.approx(
        np.sum(np.abs(stage_u.U_si) ** 2))


def test_transfer_and_covariance_routes_agree(agvm):
    fx, pump = agvm
    c = Circuit((fx.segment, twoc_preset("FC", WALK, phase=1.0), fx.segment))
    a = run_circuit(c, pump, fx.signal, fx.idler, route="transfer")
    b = run_circuit(c, pump, fx.signal, fx.idler, route="covariance")
    assert b.metrics["mean_photons_signal"] == pytest.approx(a.metrics["mean_photons_signal"], rel=1e-8)
    assert b.metrics["r_max"] == pytest.approx(a.metrics["r"][0], rel=1e-6)


def test_loss_lowers_squeezing(agvm):
    fx, pump = agvm
    clean = twoc_preset("FC", WALK)
    lossy = twoc_preset("FC", WALK, loss_db={"signal": 0.5, "idler": 0.5})
    a = run_circuit(Circuit((fx.segment, clean, fx.segment)), pump, fx.signal, fx.idler,
                    route="covariance")
    b = run_circuit(Circuit((fx.segment, lossy, fx.segment)), pump, fx.signal, fx.idler)
    assert b.metrics["r_max"] < a.metrics["r_max"]
    assert b.metrics["mean_photons_signal"] < a.metrics["mean_photons_signal"]


def test_lossy_element_needs_covariance_route(agvm, stage_u):
    fx, _ = agvm
    lossy = LinearElement(loss_db={"signal": 1.0})
    with pytest.raises(InvalidArgument):
        apply_linear_element(stage_u, lossy, fx.signal, fx.idler)
    out = apply_linear_element(vacuum(fx.signal.grid, fx.idler.grid), lossy, fx.signal, fx.idler)
    assert np.allclose(out.sigma, np.eye(out.sigma.shape[0]))


def test_pump_only_loss_keeps_transfer_route(agvm):
    fx, pump = agvm
    e = LinearElement(loss_db={"pump": 3.0})
    assert not e.lossy
    res = run_circuit(Circuit((fx.segment, e)), pump, fx.signal, fx.idler)
    assert isinstance(res.result, TransferMatrix)
    assert res.pump.energy == pytest.approx(pump.energy * 10 ** -0.3)


def test_circuit_validation(agvm):
    fx, _ = agvm
    from nlqsim.core import uniform_segment
    qfc = uniform_segment(1e-3, {"signal": 1e8, "idler": 1e8, "pump": 1e8}, 1.0, process="qfc")
    with pytest.raises(InvalidArgument):
        Circuit((fx.segment, qfc))
    with pytest.raises(InvalidArgument):
        LinearElement(loss_db={"signal": -1.0})
    with pytest.raises(InvalidArgument):
        LinearElement(delay_signal=np.inf)


def test_twoc_presets():
    fc = twoc_preset("FC", -0.6e-9, 0.1e-12)
    assert fc.delay_signal == pytest.approx(0.6e-9) and fc.delay_idler == pytest.approx(-0.1e-12)
    pc = twoc_preset("PC", -0.6e-9)
    assert pc.delay_signal == pytest.approx(0.6e-9 - 2.00 * PS)
    nc = twoc_preset("NC", -2e-12, nc_total_ps=4.01)
    assert nc.delay_signal == pytest.approx(-2.01 * PS)
    with pytest.raises(InvalidArgument):
        twoc_preset("NC", -0.6e-9, nc_total_ps=4.01)
    with pytest.raises(InvalidArgument):
        twoc_preset("XX", 1.0)


def test_phase_sweep_low_gain_fringe():
    fx = agvm_fixture(n=24)
    pump = fx.pump(1e-15)
    c = Circuit((fx.segment, twoc_preset("FC", WALK), fx.segment))
    phases = np.linspace(0, 2 * np.pi, 9)
    sw = sweep_phase(c, 1, phases, pump, fx.signal, fx.idler)
    n1 = np.sum(np.abs(propagate_segment(fx.segment, pump, fx.signal, fx.idler).U_si) ** 2)
    rel = sw.values / (4 * n1)
    # lumped phase on the signal: fringe maximum where the two stages add in phase
    k = int(np.argmax(rel))
    assert np.allclose(rel, np.cos(0.5 * (phases - phases[k])) ** 2, atol=2e-2)
    assert sw.visibility > 0.95
    with pytest.raises(InvalidArgument):
        sweep_phase(c, 1, np.linspace(0, np.pi, 5), pump, fx.signal, fx.idler)


def test_parallel_sweep_matches_serial(agvm):
    fx, pump = agvm
    c = Circuit((fx.segment, twoc_preset("FC", WALK), fx.segment))
    phases = np.linspace(0, 2 * np.pi, 6)
    a = sweep_phase(c, 1, phases, pump, fx.signal, fx.idler)
    b = sweep_phase(c, 1, phases, pump, fx.signal, fx.idler, jobs=3)
    assert np.array_equal(a.values, b.values)


def test_cascade_first_stage_matches_single(agvm, stage_u):
    fx, pump = agvm
    res = cascade_stages(fx.segment, twoc_preset("FC", WALK), 3, pump,
                         fx.signal, fx.idler)
    assert np.allclose(res.results[0].matrix, stage_u.matrix)
    assert np.all(np.diff(res.r_max) > 0)
    with pytest.raises(InvalidArgument):
        cascade_stages(fx.segment, None, 0, pump, fx.signal, fx.idler)


def test_phase_knob_must_sit_on_linear_element(agvm):
    fx, pump = agvm
    c = Circuit((NonlinearStage(fx.segment, name="a"),))
    assert c.kind == SQUEEZER and not c.lossy
    with pytest.raises(InvalidArgument):
        c.with_phase(0, 1.0)

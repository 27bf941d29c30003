"""Simulator core: heading wrap, validation, slip law, integration, logs."""

import math

import numpy as np
import pytest

from ikdlab.datalog import JoyLog
from ikdlab.errors import ValidationError
from ikdlab.simcore import (AV_LIMIT, DEFAULT_DT, V_CAP, ControlCommand,
                            ControlScript, ScriptSegment, SimTrace, SlipParams,
                            VehicleState, emit_sensor_logs, normalize_heading,
                            run_scenario, slip_yaw_rate, step_dynamics)

from conftest import kasa_radius


# --- normalize_heading -------------------------------------------------------

def test_heading_wraps_into_half_open_pi_interval():
    assert normalize_heading(0.0) == 0.0
    assert normalize_heading(math.pi) == pytest.approx(math.pi)
    assert normalize_heading(-math.pi) == pytest.approx(math.pi)
    assert normalize_heading(math.pi + 0.1) == pytest.approx(-math.pi + 0.1)
    assert normalize_heading(7 * math.tau + 1.2) == pytest.approx(1.2)
    for h in np.linspace(-20.0, 20.0, 101):
        w = normalize_heading(h)
        assert -math.pi < w <= math.pi + 1e-15
        assert math.cos(w) == pytest.approx(math.cos(h), abs=1e-12)
        assert math.sin(w) == pytest.approx(math.sin(h), abs=1e-12)


# --- dataclass validation ----------------------------------------------------

def test_vehicle_state_rejects_nonfinite_and_overcap():
    with pytest.raises(ValidationError):
        VehicleState(x=float("nan"))
    with pytest.raises(ValidationError):
        VehicleState(v=V_CAP + 0.01)
    VehicleState(v=V_CAP)  # at the cap is fine


def test_slip_params_validation_and_ideal():
    with pytest.raises(ValidationError):
        SlipParams(beta=-0.1)
    with pytest.raises(ValidationError):
        SlipParams(lag_tau=float("inf"))
    ideal = SlipParams.ideal()
    assert (ideal.beta, ideal.lag_tau, ideal.imu_delay,
            ideal.noise_sigma) == (0.0, 0.0, 0.0, 0.0)


def test_slip_params_json_round_trip(tmp_path):
    p = SlipParams(beta=0.03, lag_tau=0.2, imu_delay=0.15,
                   noise_sigma=0.005, seed=9)
    path = str(tmp_path / "slip.json")
    p.to_json(path)
    assert SlipParams.from_json(path) == p


def test_slip_params_json_rejects_unknown_keys(tmp_path):
    path = tmp_path / "slip.json"
    path.write_text('{"beta": 0.02, "bogus": 1}\n', encoding="utf-8")
    with pytest.raises(ValidationError, match="bogus"):
        SlipParams.from_json(str(path))


def test_control_command_rejects_excess_angular_velocity():
    ControlCommand(4.0, 1.0)  # v*c = 4.0 is on the limit
    with pytest.raises(ValidationError):
        ControlCommand(4.0, 1.1)
    assert ControlCommand(2.0, 0.7).av == pytest.approx(1.4)


def test_control_script_ordering_and_lookup():
    with pytest.raises(ValidationError):
        ControlScript.from_segments([(0.0, 1.0, 0.0), (0.0, 2.0, 0.0)])
    script = ControlScript.from_segments([(0.0, 1.0, 0.1), (2.0, 2.0, 0.2)])
    assert script.command_at(0.0) == ControlCommand(1.0, 0.1)
    assert script.command_at(1.999) == ControlCommand(1.0, 0.1)
    assert script.command_at(2.0) == ControlCommand(2.0, 0.2)
    assert script.command_at(50.0) == ControlCommand(2.0, 0.2)
    with pytest.raises(ValidationError):
        ControlScript.from_segments([(1.0, 1.0, 0.0)]).command_at(0.5)


def test_control_script_json_round_trip(tmp_path):
    script = ControlScript.from_segments([(0.0, 1.0, 0.1), (3.5, 2.0, -0.4)])
    path = str(tmp_path / "script.json")
    script.to_json(path)
    assert ControlScript.from_json(path) == script


# --- slip law and stepping ---------------------------------------------------

def test_slip_law_closed_form():
    assert slip_yaw_rate(0.0, 3.0, 0.02) == 0.0
    assert slip_yaw_rate(1.4, 2.0, 0.0) == 1.4
    # hand evaluation: 2.8 / (1 + 0.02 * 16 * 2.8) = 2.8 / 1.896
    assert slip_yaw_rate(2.8, 4.0, 0.02) == pytest.approx(2.8 / 1.896)
    assert abs(slip_yaw_rate(2.8, 4.0, 0.02)) < 2.8
    assert slip_yaw_rate(-2.8, 4.0, 0.02) == pytest.approx(-2.8 / 1.896)


def test_step_straight_line_integration():
    state = VehicleState(v=1.0)
    out = step_dynamics(state, ControlCommand(1.0, 0.0), SlipParams.ideal(),
                        dt=0.05)
    assert (out.x, out.y, out.heading, out.v, out.av) == (0.05, 0.0, 0.0, 1.0, 0.0)


def test_step_ideal_plant_executes_commanded_yaw_rate():
    out = step_dynamics(VehicleState(), ControlCommand(2.0, 0.7),
                        SlipParams.ideal(), dt=DEFAULT_DT)
    assert out.av == pytest.approx(1.4)
    assert out.av_lag == pytest.approx(1.4)


def test_step_settled_lag_applies_slip_attenuation():
    settled = VehicleState(v=4.0, av_lag=2.8)
    out = step_dynamics(settled, ControlCommand(4.0, 0.7),
                        SlipParams(beta=0.02, lag_tau=0.1), dt=DEFAULT_DT)
    assert out.av_lag == pytest.approx(2.8)
    assert out.av == pytest.approx(2.8 / 1.896)


def test_step_rejects_bad_dt():
    with pytest.raises(ValidationError):
        step_dynamics(VehicleState(), ControlCommand(1.0, 0.0),
                      SlipParams.ideal(), dt=0.0)


def test_speed_is_clamped_to_cap():
    script = ControlScript.constant(10.0, 0.0)
    trace = run_scenario(script, SlipParams(), 5.0)
    v = trace.v_true()
    assert np.max(v) <= V_CAP + 1e-12
    assert v[-1] == pytest.approx(V_CAP)


def test_slip_fraction_grows_with_speed():
    c = 0.5
    fractions = [(v * c - slip_yaw_rate(v * c, v, 0.02)) / (v * c)
                 for v in (1.0, 2.0, 3.0, 4.0)]
    assert all(b > a for a, b in zip(fractions, fractions[1:]))


# --- run_scenario ------------------------------------------------------------

def test_constant_turn_traces_circle_of_inverse_curvature():
    trace = run_scenario(ControlScript.constant(2.0, 0.7),
                         SlipParams.ideal(), 10.0)
    keep = trace.xy()[400:]  # drop spin-up from rest
    assert kasa_radius(keep) == pytest.approx(1.0 / 0.7, rel=1e-4)


def test_zero_script_leaves_state_fixed():
    trace = run_scenario(ControlScript.constant(0.0, 0.0), SlipParams(), 1.0)
    assert all(s == VehicleState() for s in trace.states)


def test_step_count_and_times():
    trace = run_scenario(ControlScript.constant(1.0, 0.0),
                         SlipParams.ideal(), 1.0)
    assert len(trace) == 200
    assert trace.duration == pytest.approx(1.0)
    assert trace.times()[-1] == pytest.approx(1.0)
    assert len(trace.states) == len(trace.commands) + 1


def test_run_scenario_rejects_bad_duration_and_late_script():
    with pytest.raises(ValidationError):
        run_scenario(ControlScript.constant(1.0, 0.0), SlipParams(), 0.0)
    late = ControlScript.from_segments([(1.0, 1.0, 0.0)])
    with pytest.raises(ValidationError):
        run_scenario(late, SlipParams(), 2.0)


def test_aggressive_script_peak_yaw_rate_attenuated():
    script = ControlScript.from_segments(
        [(0.0, 4.2, 0.0), (2.0, 4.2, 0.95), (4.0, 0.5, 0.0)])
    trace = run_scenario(script, SlipParams(beta=0.02, lag_tau=0.1,
                                            noise_sigma=0.0), 6.0)
    assert np.max(np.abs(trace.av_true())) < np.max(np.abs(trace.av_commanded()))


def test_run_scenario_deterministic():
    script = ControlScript.from_segments([(0.0, 2.0, 0.3), (1.0, 3.0, -0.5)])
    a = run_scenario(script, SlipParams(), 2.0)
    b = run_scenario(script, SlipParams(), 2.0)
    assert a.states == b.states


# --- emit_sensor_logs --------------------------------------------------------

def test_logs_match_commands_on_ideal_plant():
    trace = run_scenario(ControlScript.constant(2.0, 0.7),
                         SlipParams.ideal(), 2.0)
    joy, imu = emit_sensor_logs(trace, SlipParams.ideal())
    assert len(joy) == (2 + 2) * 40
    active = (joy.t >= 1.0) & (joy.t < 3.0)
    assert np.all(joy.v[active] == 2.0)
    assert np.all(joy.av[active] == pytest.approx(1.4))
    # skip the pad boundary sample, where the state yaw rate is still zero
    interior = (imu.t > 1.0 + DEFAULT_DT) & (imu.t < 3.0)
    assert np.all(imu.av_z[interior] == pytest.approx(1.4))


def test_log_lengths_scale_with_padding_and_rate():
    trace = run_scenario(ControlScript.constant(1.0, 0.2),
                         SlipParams.ideal(), 10.0)
    joy, imu = emit_sensor_logs(trace, SlipParams.ideal(), joy_rate=40.0,
                                imu_rate=40.0, pad=1.0)
    assert len(joy) == 480
    assert len(imu) == 480


def test_imu_stream_is_transport_delayed():
    """Brute-force lag scan between the two emitted streams peaks at the
    configured transport delay."""
    rng = np.random.default_rng(5)
    segs = [(i * 0.5, 2.0, float(c))
            for i, c in enumerate(rng.uniform(-1.7, 1.7, 24))]
    p = SlipParams(beta=0.0, lag_tau=0.0, imu_delay=0.176, noise_sigma=0.0)
    trace = run_scenario(ControlScript.from_segments(segs), p, 12.0)
    joy, imu = emit_sensor_logs(trace, p, imu_rate=1000.0)
    active = (joy.t >= 1.0) & (joy.t < 13.0)
    t, ref = joy.t[active], joy.av[active]
    lags = np.arange(0.0, 0.401, 0.001)
    errs = [float(np.mean((ref - np.interp(t + d, imu.t, imu.av_z)) ** 2))
            for d in lags]
    # one integration step of slack: recorded yaw rates switch one dt after
    # the command does
    assert lags[int(np.argmin(errs))] == pytest.approx(0.176, abs=0.01)


def test_imu_noise_is_seeded():
    trace = run_scenario(ControlScript.constant(2.0, 0.5), SlipParams(), 2.0)
    _, imu_a = emit_sensor_logs(trace, SlipParams(seed=1))
    _, imu_b = emit_sensor_logs(trace, SlipParams(seed=1))
    _, imu_c = emit_sensor_logs(trace, SlipParams(seed=2))
    assert np.array_equal(imu_a.av_z, imu_b.av_z)
    assert not np.array_equal(imu_a.av_z, imu_c.av_z)


def test_emit_rejects_empty_trace_and_bad_rates():
    trace = run_scenario(ControlScript.constant(1.0, 0.0), SlipParams(), 1.0)
    empty = SimTrace(dt=DEFAULT_DT, states=(VehicleState(),), commands=())
    with pytest.raises(ValidationError):
        emit_sensor_logs(empty, SlipParams())
    with pytest.raises(ValidationError):
        emit_sensor_logs(trace, SlipParams(), joy_rate=0.0)
    with pytest.raises(ValidationError):
        emit_sensor_logs(trace, SlipParams(), pad=-1.0)


def test_emitted_logs_are_valid_log_objects():
    trace = run_scenario(ControlScript.constant(2.0, 0.5), SlipParams(), 2.0)
    joy, imu = emit_sensor_logs(trace, SlipParams())
    assert isinstance(joy, JoyLog)
    assert np.all(np.diff(joy.t) > 0)
    assert np.all(np.diff(imu.t) > 0)

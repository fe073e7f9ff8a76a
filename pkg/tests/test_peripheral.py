import pytest
from hypothesis import given, strategies as st

from scopefleet.peripheral_sim import (
    PeripheralConfig, PeriphClient, PeripheralController, SafetyTripped,
    SerialPipe, TempTrace, TravelLimitExceeded, Light, Safety,
)
from scopefleet.runtime import Environment, SimClock, Trace


def make_rig(config=None):
    env = Environment()
    clock = SimClock(env)
    trace = Trace(clock.seconds)
    pipe = SerialPipe(env)
    alerts = []
    client = PeriphClient(env, pipe.hub_end.send, on_event=alerts.append)
    pipe.hub_end.on_line = client.on_line
    ctrl = PeripheralController(env, clock, trace, pipe.periph_end.send, config)
    pipe.periph_end.on_line = ctrl.on_line
    return env, clock, trace, client, ctrl, alerts


def run(env, gen, until=1000):
    proc = env.process(gen)
    env.run_until(until)
    assert proc.triggered, "process did not finish"
    return proc.value


def test_single_move():
    env, _, _, client, ctrl, _ = make_rig()

    def task():
        pos = yield from client.move(100)
        return pos

    assert run(env, task()) == 100
    assert ctrl.state.motor_pos_um == 100


def test_move_latency_matches_speed():
    env, _, _, client, ctrl, _ = make_rig(PeripheralConfig(speed_um_s=500))
    times = []

    def task():
        yield from client.move(1000)
        times.append(env.now)

    run(env, task())
    # 1000 um at 500 um/s = 2 s plus two 2 ms line hops
    assert times[0] == pytest.approx(2.004)


def test_ten_steps_then_home_returns_to_zero():
    env, _, _, client, ctrl, _ = make_rig()

    def task():
        for _ in range(10):
            yield from client.move(100)
        pos = yield from client.home()
        return pos

    assert run(env, task()) == 0
    assert ctrl.state.motor_pos_um == 0


def test_travel_limit_rejected():
    env, _, _, client, ctrl, _ = make_rig(PeripheralConfig(travel_max_um=500))

    def task():
        try:
            yield from client.move(501)
        except TravelLimitExceeded:
            return "rejected"

    assert run(env, task()) == "rejected"
    assert ctrl.state.motor_pos_um == 0


def test_light_set_and_noop():
    env, _, trace, client, ctrl, _ = make_rig()

    def task():
        yield from client.set_light(Light.UNDER_PLATE)
        yield from client.set_light(Light.UNDER_PLATE)  # no-op

    run(env, task())
    assert ctrl.state.light is Light.UNDER_PLATE
    assert len(trace.find("periph_light")) == 1  # no-op not logged as a change


def test_watchdog_trips_on_third_sample():
    trace_doc = TempTrace(initial_c=36, steps=[(5.0, 37.0), (10.0, 41.0)])
    env, _, trace, client, ctrl, alerts = make_rig(
        PeripheralConfig(sample_period_s=5.0, temp_trace=trace_doc))
    env.run_until(9.9)
    assert ctrl.state.safety is Safety.ARMED
    env.run_until(10.1)
    assert ctrl.state.safety is Safety.TRIPPED_SHUTOFF
    assert ctrl.state.light is Light.OFF
    assert alerts and alerts[0][0] == "OVERTEMP"
    trip = trace.find("periph_trip")
    assert len(trip) == 1 and trip[0].data["temp_c"] == 41.0


def test_constant_temperature_never_trips():
    env, _, _, _, ctrl, alerts = make_rig(
        PeripheralConfig(temp_trace=TempTrace(initial_c=37)))
    env.run_until(3600)
    assert ctrl.state.safety is Safety.ARMED
    assert alerts == []


def test_commands_rejected_while_tripped_until_rearm():
    # trips on the first sample, cools before the next one
    trace_doc = TempTrace(initial_c=45, steps=[(2.0, 37.0)])
    env, _, trace, client, ctrl, alerts = make_rig(
        PeripheralConfig(temp_trace=trace_doc))
    results = []

    def task():
        try:
            yield from client.move(100)
        except SafetyTripped:
            results.append("move-rejected")
        try:
            yield from client.set_light(Light.OVER_PLATE)
        except SafetyTripped:
            results.append("light-rejected")
        yield from client.arm()
        pos = yield from client.move(100)
        results.append(pos)

    run(env, task())
    assert results == ["move-rejected", "light-rejected", 100]
    # no motion or light-on effect appeared between trip and re-arm
    trip_t = trace.find("periph_trip")[0].t
    arm_t = trace.find("periph_arm")[0].t
    for rec in trace.records:
        if trip_t < rec.t < arm_t:
            assert rec.kind not in ("periph_light",) or rec.data["light"] == "Off"
            if rec.kind == "periph_move":
                assert rec.data["pos_um"] == 0  # only the autonomous homing
    assert ctrl.state.motor_pos_um == 100


def test_trip_homes_stage_autonomously():
    trace_doc = TempTrace(initial_c=36, steps=[(20.0, 44.0)])
    env, _, trace, client, ctrl, alerts = make_rig(
        PeripheralConfig(temp_trace=trace_doc, sample_period_s=5.0))

    def task():
        yield from client.move(3000)

    run(env, task(), until=19)
    assert ctrl.state.motor_pos_um == 3000
    env.run_until(30)
    assert ctrl.state.motor_pos_um == 0
    assert ["SAFEHOME", "0"] in alerts


@given(st.lists(st.integers(min_value=-300, max_value=300), max_size=15))
def test_position_is_exact_sum_of_applied_deltas(deltas):
    env, _, _, client, ctrl, _ = make_rig(
        PeripheralConfig(travel_min_um=-10_000, travel_max_um=10_000))
    applied = []

    def task():
        for d in deltas:
            try:
                yield from client.move(d)
                applied.append(d)
            except TravelLimitExceeded:
                pass

    run(env, task(), until=10_000)
    assert ctrl.state.motor_pos_um == sum(applied)

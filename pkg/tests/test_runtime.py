import pytest

from scopefleet.runtime import Environment, FluidChannel, SimBus, BrokerUnreachable, topic_matches


def test_timers_fire_in_order():
    env = Environment()
    seen = []
    env.call_later(5, seen.append, "b")
    env.call_later(1, seen.append, "a")
    env.call_later(5, seen.append, "c")  # same time: insertion order
    env.run_until(10)
    assert seen == ["a", "b", "c"]
    assert env.now == 10


def test_cancelled_timer_does_not_fire():
    env = Environment()
    seen = []
    handle = env.call_later(1, seen.append, "x")
    handle.cancel()
    env.run_until(5)
    assert seen == []


def test_process_sleep_and_return_value():
    env = Environment()

    def worker():
        yield env.timeout(3)
        yield env.timeout(4)
        return env.now

    proc = env.process(worker())
    env.run_until(10)
    assert proc.triggered and proc.value == 7


def test_any_of_returns_first_winner():
    env = Environment()
    results = []

    def waiter():
        fast = env.timeout(1, "fast")
        slow = env.timeout(5, "slow")
        fired = yield env.any_of([fast, slow])
        results.append(fired.value)

    env.process(waiter())
    env.run_until(10)
    assert results == ["fast"]


def test_all_of_collects_values():
    env = Environment()
    results = []

    def waiter():
        values = yield env.all_of([env.timeout(1, "a"), env.timeout(2, "b")])
        results.append(values)

    env.process(waiter())
    env.run_until(10)
    assert results == [("a", "b")]


# -- topic matching -----------------------------------------------------------

@pytest.mark.parametrize("pattern,topic,expected", [
    ("well/A1/cmd", "well/A1/cmd", True),
    ("well/+/cmd", "well/B3/cmd", True),
    ("well/+/cmd", "well/B3/evt", False),
    ("scope/dev/#", "scope/dev/shadow", True),
    ("scope/dev/#", "scope/dev/a/b/c", True),
    ("scope/+/cmd", "scope/cmd", False),
    ("a/b", "a/b/c", False),
])
def test_topic_matches(pattern, topic, expected):
    assert topic_matches(pattern, topic) is expected


def test_bus_delivers_with_latency_and_wildcards():
    env = Environment()
    bus = SimBus(env, latency_s=0.5)
    got = []
    bus.subscribe("well/+/evt", lambda t, p: got.append((env.now, t, p)))
    bus.publish("well/C4/evt", b"hi")
    env.run_until(0.4)
    assert got == []
    env.run_until(1)
    assert got == [(0.5, "well/C4/evt", b"hi")]


def test_bus_outage_raises():
    env = Environment()
    bus = SimBus(env)
    bus.set_down(True)
    with pytest.raises(BrokerUnreachable):
        bus.publish("x", b"")


# -- shared-uplink fluid model --------------------------------------------------

def test_single_flow_is_overhead_plus_payload():
    env = Environment()
    ch = FluidChannel(env, capacity_bytes_s=1_000_000, overhead_s=0.5)
    done = ch.start_flow(2_000_000)
    env.run_until(100)
    assert done.triggered
    assert done.value == pytest.approx(2.5)


def test_batch_files_share_one_connection_setup():
    # 10 files of 200 KB on one connection at 1 MB/s with 0.5 s setup: 2.5 s.
    env = Environment()
    ch = FluidChannel(env, capacity_bytes_s=1_000_000, overhead_s=0.5)
    finished = []

    def batch():
        for i in range(10):
            done = ch.start_flow(200_000, charge_overhead=(i == 0))
            yield done
        finished.append(env.now)

    env.process(batch())
    env.run_until(100)
    assert finished == [pytest.approx(2.5)]


def test_sequential_flows_cost_overhead_each():
    env = Environment()
    ch = FluidChannel(env, capacity_bytes_s=1_000_000, overhead_s=0.5)
    times = []

    def seq():
        for _ in range(3):
            yield ch.start_flow(1_000_000)
            times.append(env.now)

    env.process(seq())
    env.run_until(100)
    assert times == [pytest.approx(1.5), pytest.approx(3.0), pytest.approx(4.5)]


def test_concurrent_flows_pay_escalating_setup():
    # joining a channel with k-1 flows already open costs k * overhead of setup
    # work, so firing everything at once never beats one-at-a-time.
    env = Environment()
    capacity, overhead, size, n = 1_000_000, 0.5, 200_000, 4
    ch = FluidChannel(env, capacity_bytes_s=capacity, overhead_s=overhead)
    done = [ch.start_flow(size) for _ in range(n)]
    env.run_until(1000)
    assert all(d.triggered for d in done)
    last = max(d.value for d in done)
    # total work: sum_{k=1..n} k*c + n*size/C, delivered fair-share
    expected = overhead * n * (n + 1) / 2 + n * size / capacity
    assert last == pytest.approx(expected)
    sequential = n * (overhead + size / capacity)
    assert sequential <= last


def test_fair_sharing_slows_late_joiner():
    env = Environment()
    ch = FluidChannel(env, capacity_bytes_s=100, overhead_s=0.0)
    first = ch.start_flow(1000)  # alone: 10 s

    def join_later():
        yield env.timeout(5)
        return ch.start_flow(500)

    joiner = env.process(join_later())
    env.run_until(1000)
    # flow 1: 5 s alone (500 B left) then shares; both need 5 channel-seconds
    # of work each -> both complete at t = 15.
    assert first.value == pytest.approx(15.0)
    assert joiner.value.value == pytest.approx(15.0)

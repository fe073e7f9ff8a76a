import pytest

from scopefleet.protocol import validate_config
from scopefleet.runtime import Environment
from scopefleet.storage import (
    Manifest, ManifestEvent, MemStore, SequenceGap, SimStoreAdapter,
    StoreUnreachable, derive_urls, manifest_from_json, manifest_key,
    manifest_to_json, new_manifest, object_key, parse_object_key,
    put_with_retry, update_manifest, video_object_key,
)

TS = ["2026-01-01T00:00:00Z", "2026-01-01T00:15:00Z", "2026-01-01T00:30:00Z"]


def mk_event(seq, wells=("A1", "B2"), layers=3, missing=(), ts=None, mode="zstack"):
    return ManifestEvent(event_seq=seq, timestamp=ts or TS[seq % 3],
                         outcome="partial" if missing else "complete",
                         wells=tuple(wells), layers=layers, mode=mode,
                         missing=tuple(missing))


def mk_manifest():
    cfg = validate_config({
        "experiment_id": "exp1", "layers": 3, "layer_step_um": 100,
        "initial_offset_um": 0, "enabled_wells": ["A1", "B2"]})
    return new_manifest(cfg, "scope-01")


# -- keys ---------------------------------------------------------------------

def test_object_key_roundtrip():
    key = object_key("exp1", TS[0], "C4", 7)
    assert parse_object_key(key) == ("exp1", TS[0], "C4", 7)
    vkey = video_object_key("exp1", TS[0], "C4")
    assert parse_object_key(vkey) == ("exp1", TS[0], "C4", "video")
    assert parse_object_key(manifest_key("exp1")) is None


# -- manifest -----------------------------------------------------------------

def test_append_event_to_fresh_manifest():
    m = update_manifest(mk_manifest(), mk_event(0))
    assert len(m.events) == 1
    assert m.events[0].outcome == "complete"


def test_sequence_gap_rejected():
    m = update_manifest(mk_manifest(), mk_event(0))
    with pytest.raises(SequenceGap):
        update_manifest(m, mk_event(2))


def test_nonmonotone_timestamp_rejected():
    m = update_manifest(mk_manifest(), mk_event(0, ts=TS[1]))
    with pytest.raises(SequenceGap):
        update_manifest(m, mk_event(1, ts=TS[0]))


def test_url_counting_10_events_all_distinct():
    m = mk_manifest()
    for seq in range(10):
        ts = f"2026-01-01T{seq:02d}:00:00Z"
        m = update_manifest(m, mk_event(seq, ts=ts))
    urls = derive_urls(m, "http://store")
    assert len(urls) == 10 * 2 * 3
    assert len(set(urls)) == len(urls)


def test_two_wells_three_layers_six_urls():
    m = update_manifest(mk_manifest(), mk_event(0))
    assert len(derive_urls(m, "http://s")) == 6


def test_missing_pair_excluded_from_urls():
    m = update_manifest(mk_manifest(), mk_event(0, missing=[("B2", 2)]))
    urls = derive_urls(m, "http://s")
    assert len(urls) == 5
    assert not any(u.endswith("B2/2.png") for u in urls)


def test_video_event_urls():
    m = update_manifest(mk_manifest(), mk_event(0, mode="video", layers=1))
    urls = derive_urls(m, "http://s")
    assert urls == [f"http://s/exp1/{TS[0]}/A1/video.bin",
                    f"http://s/exp1/{TS[0]}/B2/video.bin"]


def test_manifest_json_roundtrip():
    m = update_manifest(mk_manifest(), mk_event(0, missing=[("A1", 1)]))
    assert manifest_from_json(manifest_to_json(m)) == m


def test_append_only_serialization_prefix():
    # serialized events 0..i are byte-identical before and after appending i+1
    import json
    m = mk_manifest()
    serialized = []
    for seq in range(4):
        ts = f"2026-01-01T0{seq}:00:00Z"
        m = update_manifest(m, mk_event(seq, ts=ts))
        serialized.append(manifest_to_json(m))
    for i in range(3):
        before = json.loads(serialized[i])["events"]
        after = json.loads(serialized[i + 1])["events"][: i + 1]
        assert (json.dumps(before, sort_keys=True)
                == json.dumps(after, sort_keys=True))


def test_per_event_geometry_drives_urls():
    # layer count shrank mid-experiment: later events expand fewer URLs
    m = update_manifest(mk_manifest(), mk_event(0, layers=3))
    m = update_manifest(m, mk_event(1, layers=2, ts=TS[1]))
    urls = derive_urls(m, "http://s")
    assert len(urls) == 2 * 3 + 2 * 2


# -- stores and retry ----------------------------------------------------------

def run_proc(env, gen, until=1000):
    proc = env.process(gen)
    env.run_until(until)
    assert proc.triggered
    return proc.value


def test_put_succeeds_on_third_attempt_with_backoff():
    env = Environment()
    store = MemStore()
    adapter = SimStoreAdapter(env, store, op_latency_s=0.05)
    store.fail_next(2)
    attempts = run_proc(env, put_with_retry(env, adapter, "k", b"data"))
    assert attempts == 3
    assert store.objects["k"] == b"data"
    put_ops = [op for op in store.ops if op.op == "PUT"]
    assert [op.ok for op in put_ops] == [False, False, True]
    # two retries with exponential backoff: 3 ops at 0.05 s + waits 0.5 and 1.0
    assert put_ops[-1].t == pytest.approx(1.65)


def test_store_unreachable_after_max_attempts():
    env = Environment()
    store = MemStore()
    adapter = SimStoreAdapter(env, store, op_latency_s=0.05)
    store.fail_next(99)

    def task():
        try:
            yield from put_with_retry(env, adapter, "k", b"x", max_attempts=3)
        except StoreUnreachable:
            return "unreachable"

    assert run_proc(env, task()) == "unreachable"
    assert "k" not in store.objects


def test_outage_window_recovers():
    env = Environment()
    store = MemStore()
    store.add_outage(0.0, 2.0)
    adapter = SimStoreAdapter(env, store, op_latency_s=0.05)
    attempts = run_proc(env, put_with_retry(env, adapter, "k", b"x"))
    assert attempts > 1
    assert store.objects["k"] == b"x"


def test_op_log_never_contains_list():
    env = Environment()
    store = MemStore()
    adapter = SimStoreAdapter(env, store)
    run_proc(env, put_with_retry(env, adapter, "a/b", b"1"))
    assert {op.op for op in store.ops} <= {"PUT", "GET"}

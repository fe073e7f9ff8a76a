import json
from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from scopefleet.protocol import (
    ALL_WELLS, Command, CommandKind, DecodeError, DeviceShadow, NodeMessage,
    NodeMessageKind, SCHEMA_VERSION, Status, UnsupportedVersion,
    decode_message, encode_message,
)

WELL_A1 = ALL_WELLS[0]
TS = datetime(2026, 3, 1, 12, 0, 0, tzinfo=timezone.utc)


def test_capture_roundtrip():
    msg = NodeMessage(kind=NodeMessageKind.CAPTURE, well=WELL_A1,
                      event_seq=7, layer=3, params=(("iso", "800"),))
    assert decode_message(encode_message(msg)) == msg


def test_command_roundtrip():
    cmd = Command(kind=CommandKind.START_EXPERIMENT, command_id="c-1",
                  issued_at=TS, config={"experiment_id": "x", "layers": 3})
    assert decode_message(encode_message(cmd)) == cmd


def test_encoding_is_readable_json_with_version():
    msg = NodeMessage(kind=NodeMessageKind.HEARTBEAT, well=WELL_A1, event_seq=0)
    doc = json.loads(encode_message(msg))
    assert doc["schema_version"] == SCHEMA_VERSION
    assert doc["type"] == "node_message"


def test_truncated_payload_is_decode_error():
    data = encode_message(
        NodeMessage(kind=NodeMessageKind.CAPTURE, well=WELL_A1, event_seq=1, layer=0))
    with pytest.raises(DecodeError) as err:
        decode_message(data[: len(data) // 2])
    assert err.value.offset >= 0


@pytest.mark.parametrize("garbage", [b"", b"[]", b"null", b'{"type":"command"}',
                                     b"\xff\xfe\x00", b"{nope}"])
def test_malformed_inputs_are_decode_errors(garbage):
    with pytest.raises(DecodeError):
        decode_message(garbage)


def test_future_schema_versions_rejected():
    doc = json.loads(encode_message(
        NodeMessage(kind=NodeMessageKind.HEARTBEAT, well=WELL_A1, event_seq=0)))
    for version in range(1, SCHEMA_VERSION + 2):
        doc["schema_version"] = version
        data = json.dumps(doc).encode()
        if version <= SCHEMA_VERSION:
            decode_message(data)
        else:
            with pytest.raises(UnsupportedVersion):
                decode_message(data)


# -- round-trip property over randomized valid messages -----------------------

_wells = st.sampled_from(list(ALL_WELLS))
_dt = st.datetimes(
    min_value=datetime(2020, 1, 1), max_value=datetime(2040, 1, 1),
).map(lambda d: d.replace(tzinfo=timezone.utc))
_params = st.lists(
    st.tuples(st.text(min_size=1, max_size=8), st.text(max_size=8)),
    max_size=4).map(tuple)

_node_messages = st.builds(
    NodeMessage,
    kind=st.sampled_from(list(NodeMessageKind)),
    well=_wells,
    event_seq=st.integers(min_value=0, max_value=10**6),
    layer=st.none() | st.integers(min_value=0, max_value=100),
    params=_params,
    status=st.sampled_from(list(Status)),
    detail=st.text(max_size=32),
)

_commands = st.builds(
    Command,
    kind=st.sampled_from(list(CommandKind)),
    command_id=st.uuids().map(str),
    issued_at=_dt,
    config=st.none() | st.dictionaries(st.text(min_size=1, max_size=8),
                                       st.integers() | st.text(max_size=8), max_size=4),
    patch=st.none() | st.dictionaries(st.text(min_size=1, max_size=8),
                                      st.integers(), max_size=4),
    wells=st.none() | st.frozensets(_wells, max_size=24),
)

_shadows = st.builds(
    DeviceShadow,
    device_id=st.text(min_size=1, max_size=12),
    online=st.booleans(),
    last_event_seq=st.integers(min_value=-1, max_value=10**6),
    enabled_wells=st.frozensets(_wells, max_size=24),
    reported_at=_dt,
    current_experiment=st.none() | st.text(min_size=1, max_size=12),
    last_error=st.none() | st.text(min_size=1, max_size=24),
)


@given(_node_messages | _commands | _shadows)
def test_decode_encode_identity(msg):
    assert decode_message(encode_message(msg)) == msg

"""Wire codec: versioned, human-readable JSON, one message per payload.

Layout (see docs/message-schema.md for the full schema):

    {"schema_version": 1, "type": "command" | "node_message" | "device_shadow", ...}

decode(encode(m)) == m for every well-formed message. Binary image data
never rides this codec; bulk files use the framed transfer stream.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from typing import Union

from .messages import (
    Command, CommandKind, NodeMessage, NodeMessageKind, DeviceShadow, Status,
)
from .wells import WellId

SCHEMA_VERSION = 1

Message = Union[Command, NodeMessage, DeviceShadow]


class DecodeError(Exception):
    def __init__(self, reason: str, offset: int = 0):
        self.reason = reason
        self.offset = offset
        super().__init__(f"at byte {offset}: {reason}")


class UnsupportedVersion(Exception):
    def __init__(self, version):
        self.version = version
        super().__init__(f"schema_version {version!r} not supported (current: {SCHEMA_VERSION})")


def _dt_out(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def _dt_in(s: str) -> datetime:
    for fmt in ("%Y-%m-%dT%H:%M:%S.%fZ", "%Y-%m-%dT%H:%M:%SZ"):
        try:
            return datetime.strptime(s, fmt).replace(tzinfo=timezone.utc)
        except ValueError:
            continue
    raise DecodeError(f"bad timestamp {s!r}")


def encode_message(msg: Message) -> bytes:
    if isinstance(msg, Command):
        doc = {
            "schema_version": SCHEMA_VERSION,
            "type": "command",
            "kind": msg.kind.value,
            "command_id": msg.command_id,
            "issued_at": _dt_out(msg.issued_at),
        }
        if msg.config is not None:
            doc["config"] = msg.config
        if msg.patch is not None:
            doc["patch"] = msg.patch
        if msg.wells is not None:
            doc["wells"] = [str(w) for w in sorted(msg.wells)]
    elif isinstance(msg, NodeMessage):
        doc = {
            "schema_version": SCHEMA_VERSION,
            "type": "node_message",
            "kind": msg.kind.value,
            "well": str(msg.well),
            "event_seq": msg.event_seq,
            "status": msg.status.value,
            "detail": msg.detail,
        }
        if msg.layer is not None:
            doc["layer"] = msg.layer
        if msg.params:
            doc["params"] = [list(kv) for kv in msg.params]
    elif isinstance(msg, DeviceShadow):
        doc = {
            "schema_version": SCHEMA_VERSION,
            "type": "device_shadow",
            "device_id": msg.device_id,
            "online": msg.online,
            "last_event_seq": msg.last_event_seq,
            "enabled_wells": [str(w) for w in sorted(msg.enabled_wells)],
            "reported_at": _dt_out(msg.reported_at),
        }
        if msg.current_experiment is not None:
            doc["current_experiment"] = msg.current_experiment
        if msg.last_error is not None:
            doc["last_error"] = msg.last_error
    else:
        raise TypeError(f"cannot encode {type(msg).__name__}")
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode()


def _require(doc: dict, key: str):
    if key not in doc:
        raise DecodeError(f"missing field {key!r}")
    return doc[key]


def _parse_well(s) -> WellId:
    try:
        return WellId.parse(str(s))
    except ValueError as exc:
        raise DecodeError(str(exc)) from None


def _parse_wellset(items) -> frozenset[WellId]:
    if not isinstance(items, list):
        raise DecodeError("wells must be a list")
    return frozenset(_parse_well(s) for s in items)


def decode_message(data: bytes) -> Message:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DecodeError(f"not utf-8: {exc.reason}", exc.start) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DecodeError(exc.msg, exc.pos) from None
    if not isinstance(doc, dict):
        raise DecodeError("top level must be an object")

    version = _require(doc, "schema_version")
    if version != SCHEMA_VERSION:
        raise UnsupportedVersion(version)

    mtype = _require(doc, "type")
    try:
        if mtype == "command":
            wells = doc.get("wells")
            return Command(
                kind=CommandKind(_require(doc, "kind")),
                command_id=_require(doc, "command_id"),
                issued_at=_dt_in(_require(doc, "issued_at")),
                config=doc.get("config"),
                patch=doc.get("patch"),
                wells=_parse_wellset(wells) if wells is not None else None,
            )
        if mtype == "node_message":
            params = doc.get("params", [])
            if not isinstance(params, list):
                raise DecodeError("params must be a list of pairs")
            return NodeMessage(
                kind=NodeMessageKind(_require(doc, "kind")),
                well=_parse_well(_require(doc, "well")),
                event_seq=int(_require(doc, "event_seq")),
                layer=doc.get("layer"),
                params=tuple((str(k), str(v)) for k, v in params),
                status=Status(doc.get("status", "Ok")),
                detail=str(doc.get("detail", "")),
            )
        if mtype == "device_shadow":
            return DeviceShadow(
                device_id=_require(doc, "device_id"),
                online=bool(_require(doc, "online")),
                last_event_seq=int(_require(doc, "last_event_seq")),
                enabled_wells=_parse_wellset(_require(doc, "enabled_wells")),
                reported_at=_dt_in(_require(doc, "reported_at")),
                current_experiment=doc.get("current_experiment"),
                last_error=doc.get("last_error"),
            )
    except (ValueError, TypeError) as exc:
        raise DecodeError(str(exc)) from None
    raise DecodeError(f"unknown message type {mtype!r}")

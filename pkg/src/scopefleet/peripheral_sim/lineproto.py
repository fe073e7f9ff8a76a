"""Newline-delimited ASCII command protocol for the peripheral controller.

Requests carry a sequence number echoed by the reply, so the hub can match
responses to in-flight commands over a plain byte stream:

    -> 17 MOVE -500          <- 17 OK POS 2500
    -> 18 LIGHT UNDER        <- 18 OK LIGHT UnderPlate
    -> 19 HOME               <- 19 OK POS 0
    -> 20 STATUS             <- 20 OK STATUS 0 Off 37.0 Armed
    -> 21 ARM                <- 21 OK ARMED

Failures come back as `<seq> ERR <code> [detail...]` with codes SAFETY,
LIMIT, and BADCMD. Unsolicited controller events use a `*` pseudo-seq:

    <- * OVERTEMP 41.0       temperature watchdog tripped the shutoff
    <- * SAFEHOME 0          autonomous post-trip homing finished

Full grammar in docs/serial-protocol.md.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

VERBS = {"MOVE", "HOME", "LIGHT", "STATUS", "ARM"}


class ProtocolError(Exception):
    pass


def format_command(seq: int, verb: str, *args) -> str:
    return " ".join([str(seq), verb, *map(str, args)])


def parse_command(line: str) -> tuple[int, str, list[str]]:
    parts = line.strip().split()
    if len(parts) < 2:
        raise ProtocolError(f"short command line: {line!r}")
    try:
        seq = int(parts[0])
    except ValueError:
        raise ProtocolError(f"bad sequence number: {parts[0]!r}") from None
    verb = parts[1].upper()
    if verb not in VERBS:
        raise ProtocolError(f"unknown verb: {parts[1]!r}")
    return seq, verb, parts[2:]


@dataclass
class Reply:
    seq: Optional[int]   # None for unsolicited "*" events
    ok: bool
    tokens: list[str]    # for errors: [code, detail...]


def format_reply(seq: int, ok: bool, *tokens) -> str:
    return " ".join([str(seq), "OK" if ok else "ERR", *map(str, tokens)])


def format_event(*tokens) -> str:
    return " ".join(["*", *map(str, tokens)])


def parse_reply(line: str) -> Reply:
    parts = line.strip().split()
    if not parts:
        raise ProtocolError("empty reply line")
    if parts[0] == "*":
        return Reply(seq=None, ok=True, tokens=parts[1:])
    if len(parts) < 2 or parts[1] not in ("OK", "ERR"):
        raise ProtocolError(f"malformed reply: {line!r}")
    try:
        seq = int(parts[0])
    except ValueError:
        raise ProtocolError(f"bad sequence number: {parts[0]!r}") from None
    return Reply(seq=seq, ok=parts[1] == "OK", tokens=parts[2:])

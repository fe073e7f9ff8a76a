"""Hub-side request/reply client for the peripheral line protocol."""

from __future__ import annotations

import itertools
from typing import Callable, Optional

from ..runtime import Environment
from .errors import PeripheralUnreachable, SafetyTripped, TravelLimitExceeded
from .lineproto import ProtocolError, Reply, format_command, parse_reply
from .state import Light, PeripheralState, Safety


class PeriphClient:
    def __init__(self, env: Environment, send_line: Callable[[str], None],
                 timeout_s: float = 5.0, speed_um_s: float = 1000.0,
                 on_event: Optional[Callable[[list[str]], None]] = None):
        self.env = env
        self.send_line = send_line
        self.timeout_s = timeout_s
        self.speed_um_s = speed_um_s
        self.on_event = on_event
        self._seq = itertools.count(1)
        self._pending: dict[int, object] = {}

    def on_line(self, line: str) -> None:
        try:
            reply = parse_reply(line)
        except ProtocolError:
            return
        if reply.seq is None:
            if self.on_event is not None:
                self.on_event(reply.tokens)
            return
        ev = self._pending.pop(reply.seq, None)
        if ev is not None:
            ev.trigger(reply)

    def _request(self, verb: str, *args, extra_timeout: float = 0.0):
        seq = next(self._seq)
        ev = self.env.event()
        self._pending[seq] = ev
        self.send_line(format_command(seq, verb, *args))
        raced = yield self.env.any_of([ev, self.env.timeout(self.timeout_s + extra_timeout)])
        if raced is not ev:
            self._pending.pop(seq, None)
            raise PeripheralUnreachable(f"{verb}: no reply in {self.timeout_s + extra_timeout:g} s")
        reply: Reply = ev.value
        if not reply.ok:
            code = reply.tokens[0] if reply.tokens else "?"
            detail = " ".join(reply.tokens[1:])
            if code == "SAFETY":
                raise SafetyTripped(verb)
            if code == "LIMIT":
                raise TravelLimitExceeded(detail)
            raise PeripheralUnreachable(f"{verb}: {code} {detail}")
        return reply

    # generator API: call with `yield from` inside a process

    def move(self, delta_um: int):
        motion = abs(delta_um) / self.speed_um_s
        reply = yield from self._request("MOVE", int(delta_um), extra_timeout=motion * 2)
        return int(reply.tokens[1])

    def home(self, max_travel_um: float = 100_000):
        motion = max_travel_um / self.speed_um_s
        reply = yield from self._request("HOME", extra_timeout=motion * 2)
        return int(reply.tokens[1])

    def set_light(self, mode: Light):
        token = {Light.OFF: "OFF", Light.OVER_PLATE: "OVER", Light.UNDER_PLATE: "UNDER"}[mode]
        yield from self._request("LIGHT", token)

    def arm(self):
        yield from self._request("ARM")

    def status(self):
        reply = yield from self._request("STATUS")
        pos, light, temp, safety = reply.tokens[1:5]
        return PeripheralState(motor_pos_um=int(pos), light=Light(light),
                               temperature_c=float(temp), safety=Safety(safety))

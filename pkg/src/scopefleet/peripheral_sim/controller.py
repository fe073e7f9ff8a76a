"""Motor/light/temperature controller emulator.

Single-threaded command loop: one command executes at a time, replies are
sent in arrival order, and the temperature watchdog interleaves on the same
loop. Moves take |delta| / speed seconds. The first temperature sample over
the threshold latches TrippedShutoff: light forced off, an OVERTEMP event is
pushed to the hub, the stage homes autonomously, and every motion or light
command is rejected until an explicit ARM.
"""

from __future__ import annotations

from collections import deque
from typing import Callable, Optional

from ..runtime import Environment, Clock, Trace
from .lineproto import ProtocolError, format_event, format_reply, parse_command
from .state import Light, PeripheralConfig, PeripheralState, Safety, TempTrace

_LIGHT_TOKENS = {"OFF": Light.OFF, "OVER": Light.OVER_PLATE, "UNDER": Light.UNDER_PLATE}


class PeripheralController:
    def __init__(self, env: Environment, clock: Clock, trace: Trace,
                 send_line: Callable[[str], None],
                 config: Optional[PeripheralConfig] = None,
                 source: str = "periph"):
        self.env = env
        self.clock = clock
        self.trace = trace
        self.send_line = send_line
        self.config = config or PeripheralConfig()
        self.temp_trace = self.config.temp_trace or TempTrace()
        self.state = PeripheralState(temperature_c=self.temp_trace.value(clock.seconds()))
        self.source = source
        self._queue: deque = deque()
        self._kick = env.event()
        env.process(self._command_loop())
        env.process(self._watchdog())

    # -- ingress -------------------------------------------------------------

    def on_line(self, line: str) -> None:
        try:
            seq, verb, args = parse_command(line)
        except ProtocolError as exc:
            self.send_line(format_event("BADLINE", str(exc).replace(" ", "_")))
            return
        self._queue.append((seq, verb, args))
        self._kick.trigger()

    def _enqueue_internal(self, job: str) -> None:
        self._queue.appendleft((None, job, []))
        self._kick.trigger()

    # -- command loop ----------------------------------------------------------

    def _command_loop(self):
        while True:
            if not self._queue:
                self._kick = self.env.event()
                yield self._kick
                continue
            seq, verb, args = self._queue.popleft()
            if verb == "MOVE":
                yield from self._do_move(seq, args)
            elif verb == "HOME":
                yield from self._do_home(seq)
            elif verb == "LIGHT":
                self._do_light(seq, args)
            elif verb == "STATUS":
                self._do_status(seq)
            elif verb == "ARM":
                self._do_arm(seq)
            elif verb == "_SAFEHOME":
                yield from self._do_safehome()

    def _reply(self, seq: Optional[int], ok: bool, *tokens) -> None:
        if seq is not None:
            self.send_line(format_reply(seq, ok, *tokens))

    def _travel(self, delta_um: int):
        """Shared motion: latency then exact-integer position update."""
        target = self.state.motor_pos_um + delta_um
        yield self.env.timeout(abs(delta_um) / self.config.speed_um_s)
        self.state.motor_pos_um = target
        self.trace.log(self.source, "periph_move", pos_um=target, delta_um=delta_um)

    def _do_move(self, seq, args):
        if self.state.safety is Safety.TRIPPED_SHUTOFF:
            self._reply(seq, False, "SAFETY")
            return
        try:
            delta = int(args[0])
        except (IndexError, ValueError):
            self._reply(seq, False, "BADCMD", "MOVE needs an integer delta")
            return
        target = self.state.motor_pos_um + delta
        if not (self.config.travel_min_um <= target <= self.config.travel_max_um):
            self._reply(seq, False, "LIMIT",
                        f"{target} outside [{self.config.travel_min_um},{self.config.travel_max_um}]")
            return
        yield from self._travel(delta)
        self._reply(seq, True, "POS", self.state.motor_pos_um)

    def _do_home(self, seq):
        if self.state.safety is Safety.TRIPPED_SHUTOFF:
            self._reply(seq, False, "SAFETY")
            return
        if self.state.motor_pos_um != 0:
            yield from self._travel(-self.state.motor_pos_um)
        self._reply(seq, True, "POS", 0)

    def _do_light(self, seq, args) -> None:
        if self.state.safety is Safety.TRIPPED_SHUTOFF:
            self._reply(seq, False, "SAFETY")
            return
        mode = _LIGHT_TOKENS.get(args[0].upper()) if args else None
        if mode is None:
            self._reply(seq, False, "BADCMD", "LIGHT needs OFF|OVER|UNDER")
            return
        if mode is not self.state.light:
            self.state.light = mode
            self.trace.log(self.source, "periph_light", light=mode.value)
        self._reply(seq, True, "LIGHT", mode.value)

    def _do_status(self, seq) -> None:
        s = self.state
        self._reply(seq, True, "STATUS", s.motor_pos_um, s.light.value,
                    f"{s.temperature_c:g}", s.safety.value)

    def _do_arm(self, seq) -> None:
        if self.state.safety is Safety.TRIPPED_SHUTOFF:
            self.state.safety = Safety.ARMED
            self.trace.log(self.source, "periph_arm")
        self._reply(seq, True, "ARMED")

    def _do_safehome(self):
        if self.state.motor_pos_um != 0:
            yield from self._travel(-self.state.motor_pos_um)
        self.send_line(format_event("SAFEHOME", self.state.motor_pos_um))

    # -- temperature watchdog --------------------------------------------------

    def _watchdog(self):
        while True:
            temp = self.temp_trace.value(self.clock.seconds())
            if temp != self.state.temperature_c:
                self.state.temperature_c = temp
                self.trace.log(self.source, "temp_sample", temp_c=temp)
            if temp > self.config.threshold_c and self.state.safety is Safety.ARMED:
                self._trip(temp)
            yield self.env.timeout(self.config.sample_period_s)

    def _trip(self, temp: float) -> None:
        self.state.safety = Safety.TRIPPED_SHUTOFF
        if self.state.light is not Light.OFF:
            self.state.light = Light.OFF
            self.trace.log(self.source, "periph_light", light=Light.OFF.value)
        self.trace.log(self.source, "periph_trip", temp_c=temp,
                       threshold_c=self.config.threshold_c)
        self.send_line(format_event("OVERTEMP", f"{temp:g}"))
        # shutoff retracts the stage on its own authority; hub commands
        # stay rejected until re-armed
        self._enqueue_internal("_SAFEHOME")

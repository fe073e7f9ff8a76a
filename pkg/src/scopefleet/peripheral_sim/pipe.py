"""In-process serial emulation: two line endpoints with symmetric latency."""

from __future__ import annotations

from typing import Callable, Optional

from ..runtime import Environment


class _End:
    def __init__(self, pipe: "SerialPipe"):
        self._pipe = pipe
        self.on_line: Optional[Callable[[str], None]] = None
        self.peer: Optional["_End"] = None

    def send(self, line: str) -> None:
        peer = self.peer
        if peer is None or peer.on_line is None:
            return
        self._pipe.env.call_later(self._pipe.latency_s, peer.on_line, line)


class SerialPipe:
    def __init__(self, env: Environment, latency_s: float = 0.002):
        self.env = env
        self.latency_s = latency_s
        self.hub_end = _End(self)
        self.periph_end = _End(self)
        self.hub_end.peer = self.periph_end
        self.periph_end.peer = self.hub_end

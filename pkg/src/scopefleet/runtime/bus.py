"""Topic-based publish/subscribe.

SimBus delivers in-process with a fixed latency on the shared scheduler.
Multi-process deployments use the line-protocol broker client in
`scopefleet.fleetctl.broker`; both expose the same publish/subscribe surface
so actor code is transport-agnostic.

Topic patterns follow the usual wildcard rules: `+` matches one level,
a trailing `#` matches any remainder.
"""

from __future__ import annotations

from typing import Callable, Protocol

from .sim import Environment

Handler = Callable[[str, bytes], None]


class BrokerUnreachable(Exception):
    pass


def topic_matches(pattern: str, topic: str) -> bool:
    pat = pattern.split("/")
    top = topic.split("/")
    for i, part in enumerate(pat):
        if part == "#":
            return True
        if i >= len(top):
            return False
        if part != "+" and part != top[i]:
            return False
    return len(pat) == len(top)


class Bus(Protocol):
    def publish(self, topic: str, payload: bytes) -> None: ...
    def subscribe(self, pattern: str, handler: Handler) -> None: ...


class SimBus:
    def __init__(self, env: Environment, latency_s: float = 0.001):
        self.env = env
        self.latency_s = latency_s
        self._subs: list[tuple[str, Handler]] = []
        self._down = False
        self.delivered = 0

    def set_down(self, down: bool) -> None:
        """Fault injection: while down, publishes raise BrokerUnreachable."""
        self._down = down

    def subscribe(self, pattern: str, handler: Handler) -> None:
        self._subs.append((pattern, handler))

    def publish(self, topic: str, payload: bytes) -> None:
        if self._down:
            raise BrokerUnreachable(topic)
        for pattern, handler in list(self._subs):
            if topic_matches(pattern, topic):
                self.env.call_later(self.latency_s, handler, topic, payload)
                self.delivered += 1

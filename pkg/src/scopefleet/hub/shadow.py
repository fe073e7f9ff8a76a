"""Shadow publishing: state mirror on the cloud topic, last writer wins.

Published on every hub state transition and on a heartbeat. While the broker
is unreachable the publisher keeps only the *intent* to publish; each retry
rebuilds the shadow from live state, so an outage spanning N updates yields
one fresh publish on reconnect, not N stale ones.
"""

from __future__ import annotations

from datetime import datetime, timezone
from typing import Callable, Optional

from ..protocol import DeviceShadow, cloud_shadow_topic, encode_message
from ..runtime import BrokerUnreachable, Clock, Environment, Trace


class ShadowPublisher:
    def __init__(self, env: Environment, clock: Clock, bus, device_id: str,
                 trace: Trace, state_fn: Callable[[], dict],
                 heartbeat_s: float = 60.0, retry_backoff_s: float = 1.0,
                 max_backoff_s: float = 30.0, source: str = "hub"):
        self.env = env
        self.clock = clock
        self.bus = bus
        self.device_id = device_id
        self.trace = trace
        self.state_fn = state_fn
        self.heartbeat_s = heartbeat_s
        self.retry_backoff_s = retry_backoff_s
        self.max_backoff_s = max_backoff_s
        self.source = source
        self.topic = cloud_shadow_topic(device_id)
        self._pending = False
        self._retry_timer = None
        self._backoff = retry_backoff_s
        self._last_reported: Optional[datetime] = None
        self.published: list[DeviceShadow] = []
        env.process(self._heartbeat())

    def _build(self) -> DeviceShadow:
        state = self.state_fn()
        reported = self.clock.utc()
        if self._last_reported is not None and reported < self._last_reported:
            reported = self._last_reported
        self._last_reported = reported
        return DeviceShadow(device_id=self.device_id, reported_at=reported, **state)

    def publish(self) -> None:
        shadow = self._build()
        try:
            self.bus.publish(self.topic, encode_message(shadow))
        except BrokerUnreachable:
            self._pending = True
            self.trace.log(self.source, "shadow_deferred")
            self._schedule_retry()
            return
        self._pending = False
        self._backoff = self.retry_backoff_s
        self.published.append(shadow)
        self.trace.log(self.source, "shadow_published",
                       online=shadow.online,
                       current_experiment=shadow.current_experiment,
                       last_event_seq=shadow.last_event_seq)

    def _schedule_retry(self) -> None:
        if self._retry_timer is not None:
            self._retry_timer.cancel()
        delay = self._backoff
        self._backoff = min(self._backoff * 2, self.max_backoff_s)
        self._retry_timer = self.env.call_later(delay, self._retry)

    def _retry(self) -> None:
        self._retry_timer = None
        if self._pending:
            self.publish()

    def _heartbeat(self):
        while True:
            self.publish()
            yield self.env.timeout(self.heartbeat_s)

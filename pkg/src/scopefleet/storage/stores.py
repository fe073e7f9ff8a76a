"""Store backends behind one async-style surface.

Adapters expose `put(key, data) -> Event` and `get(key) -> Event`; events
trigger with (ok, value). The call trace records every operation issued —
the API has no list operation at all, and audits check the trace to prove
normal operation never needs one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..runtime import Environment, Event, FluidChannel


class StoreUnreachable(Exception):
    pass


@dataclass
class StoreOp:
    t: float
    op: str        # "PUT" | "GET"
    key: str
    ok: bool
    nbytes: int = 0


class MemStore:
    """In-memory object store with scriptable outage windows."""

    def __init__(self):
        self.objects: dict[str, bytes] = {}
        self.ops: list[StoreOp] = []
        self._outages: list[tuple[float, float]] = []
        self._fail_next = 0

    # fault injection
    def add_outage(self, from_t: float, to_t: float) -> None:
        self._outages.append((from_t, to_t))

    def fail_next(self, n: int) -> None:
        self._fail_next += n

    def _up(self, t: float) -> bool:
        if self._fail_next > 0:
            self._fail_next -= 1
            return False
        return not any(a <= t < b for a, b in self._outages)

    # raw synchronous ops (sim adapter charges time around these)
    def put(self, t: float, key: str, data: bytes) -> bool:
        ok = self._up(t)
        self.ops.append(StoreOp(t, "PUT", key, ok, len(data)))
        if ok:
            self.objects[key] = data
        return ok

    def get(self, t: float, key: str) -> tuple[bool, Optional[bytes]]:
        ok = self._up(t)
        found = self.objects.get(key) if ok else None
        self.ops.append(StoreOp(t, "GET", key, ok and found is not None,
                                len(found) if found else 0))
        return ok, found

    def keys(self) -> set[str]:
        """Test/audit backdoor; not part of the client surface."""
        return set(self.objects)


class SimStoreAdapter:
    """Charges simulated time per operation against a store uplink."""

    def __init__(self, env: Environment, store: MemStore,
                 uplink: Optional[FluidChannel] = None,
                 op_latency_s: float = 0.05):
        self.env = env
        self.store = store
        self.uplink = uplink
        self.op_latency_s = op_latency_s

    def put(self, key: str, data: bytes) -> Event:
        done = self.env.event()

        def finish(_ev=None):
            ok = self.store.put(self.env.now, key, data)
            done.trigger((ok, None))

        if self.uplink is not None:
            self.uplink.start_flow(len(data)).on(finish)
        else:
            self.env.call_later(self.op_latency_s, finish)
        return done

    def get(self, key: str) -> Event:
        done = self.env.event()

        def finish():
            ok, data = self.store.get(self.env.now, key)
            done.trigger((ok, data))

        self.env.call_later(self.op_latency_s, finish)
        return done

"""Shared-uplink cost model for simulated bulk transfers.

The uplink is a fluid processor-sharing channel: at any instant the k active
flows each progress at 1/k channel-seconds per second. A flow's required
service is

    setup + payload = (overhead_s * k_admit) + nbytes / capacity_bytes_s

where k_admit counts the flows active immediately after this one joins,
itself included. Joining a busy channel is progressively more expensive
(contention rounds scale with the number of stations holding the medium),
which is what makes one-at-a-time queuing beat firing every transfer at
once. A flow that runs alone costs exactly overhead_s + nbytes/capacity.

Subsequent files on an already-open connection carry no setup cost
(`charge_overhead=False`).
"""

from __future__ import annotations

from typing import Optional

from .sim import Environment, Event, TimerHandle


class _Flow:
    __slots__ = ("remaining", "done")

    def __init__(self, work: float, done: Event):
        self.remaining = work
        self.done = done


class FluidChannel:
    def __init__(self, env: Environment, capacity_bytes_s: float,
                 overhead_s: float):
        if capacity_bytes_s <= 0:
            raise ValueError("capacity must be positive")
        self.env = env
        self.capacity_bytes_s = float(capacity_bytes_s)
        self.overhead_s = float(overhead_s)
        self._flows: list[_Flow] = []
        self._last_settled = env.now
        self._timer: Optional[TimerHandle] = None

    def active(self) -> int:
        return len(self._flows)

    def service_time(self, nbytes: float) -> float:
        """Uncontended duration of a single fresh connection."""
        return self.overhead_s + nbytes / self.capacity_bytes_s

    def start_flow(self, nbytes: float, charge_overhead: bool = True) -> Event:
        """Begin a transfer; the returned event fires at completion."""
        self._settle()
        k_admit = len(self._flows) + 1
        work = nbytes / self.capacity_bytes_s
        if charge_overhead:
            work += self.overhead_s * k_admit
        done = self.env.event()
        flow = _Flow(work, done)
        self._flows.append(flow)
        if flow.remaining <= 0:
            self._complete(flow)
        self._reschedule()
        return done

    # -- internals -----------------------------------------------------------

    def _settle(self) -> None:
        elapsed = self.env.now - self._last_settled
        self._last_settled = self.env.now
        k = len(self._flows)
        if k == 0 or elapsed <= 0:
            return
        share = elapsed / k
        for flow in self._flows:
            flow.remaining -= share

    def _complete(self, flow: _Flow) -> None:
        self._flows.remove(flow)
        flow.done.trigger(self.env.now)

    def _reschedule(self) -> None:
        if self._timer is not None:
            self._timer.cancel()
            self._timer = None
        if not self._flows:
            return
        soonest = min(f.remaining for f in self._flows)
        delay = max(0.0, soonest * len(self._flows))
        self._timer = self.env.call_later(delay, self._on_tick)

    def _on_tick(self) -> None:
        self._timer = None
        self._settle()
        eps = 1e-9
        for flow in [f for f in self._flows if f.remaining <= eps]:
            self._complete(flow)
        self._reschedule()

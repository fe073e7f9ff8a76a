"""Discrete-event scheduler with generator-based processes.

One Environment drives every actor in single-process mode. Events fire in
(time, insertion order) so runs are bit-reproducible. The same queue can be
paced against the wall clock (`run_realtime`) for multi-process deployments,
where socket reader threads inject work via `call_threadsafe`.
"""

from __future__ import annotations

import heapq
import itertools
import threading
import time as _time
from typing import Any, Callable, Generator, Iterable, Optional


class TimerHandle:
    __slots__ = ("when", "fn", "cancelled")

    def __init__(self, when: float, fn: Callable[[], None]):
        self.when = when
        self.fn = fn
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


class Event:
    """One-shot event. Callbacks run through the scheduler, never inline."""

    __slots__ = ("env", "triggered", "value", "_callbacks")

    def __init__(self, env: "Environment"):
        self.env = env
        self.triggered = False
        self.value: Any = None
        self._callbacks: list[Callable[["Event"], None]] = []

    def trigger(self, value: Any = None) -> None:
        if self.triggered:
            return
        self.triggered = True
        self.value = value
        callbacks, self._callbacks = self._callbacks, []
        for cb in callbacks:
            self.env.call_soon(cb, self)

    def on(self, cb: Callable[["Event"], None]) -> None:
        if self.triggered:
            self.env.call_soon(cb, self)
        else:
            self._callbacks.append(cb)


class Process(Event):
    """Drives a generator that yields Events; the Process itself triggers
    with the generator's return value."""

    __slots__ = ("_gen",)

    def __init__(self, env: "Environment", gen: Generator):
        super().__init__(env)
        self._gen = gen
        env.call_soon(self._resume, None)

    def _resume(self, fired: Optional[Event]) -> None:
        try:
            value = fired.value if fired is not None else None
            target = self._gen.send(value)
        except StopIteration as stop:
            self.trigger(stop.value)
            return
        if not isinstance(target, Event):
            raise TypeError(f"process yielded {target!r}, expected an Event")
        target.on(self._resume)


class Environment:
    def __init__(self, start: float = 0.0):
        self.now = float(start)
        self._heap: list[tuple[float, int, TimerHandle]] = []
        self._seq = itertools.count()
        # realtime support
        self._cond = threading.Condition()
        self._injected: list[tuple[Callable, tuple]] = []

    # -- scheduling --------------------------------------------------------

    def call_at(self, when: float, fn: Callable, *args) -> TimerHandle:
        handle = TimerHandle(when, (lambda: fn(*args)) if args else fn)
        heapq.heappush(self._heap, (when, next(self._seq), handle))
        return handle

    def call_later(self, delay: float, fn: Callable, *args) -> TimerHandle:
        return self.call_at(self.now + max(0.0, delay), fn, *args)

    def call_soon(self, fn: Callable, *args) -> TimerHandle:
        return self.call_at(self.now, fn, *args)

    # -- events ------------------------------------------------------------

    def event(self) -> Event:
        return Event(self)

    def timeout(self, delay: float, value: Any = None) -> Event:
        ev = Event(self)
        self.call_later(delay, ev.trigger, value)
        return ev

    def process(self, gen: Generator) -> Process:
        return Process(self, gen)

    def any_of(self, events: Iterable[Event]) -> Event:
        """Triggers with the first source event that fires."""
        race = Event(self)
        for ev in events:
            ev.on(lambda fired, race=race: race.trigger(fired))
        return race

    def all_of(self, events: Iterable[Event]) -> Event:
        events = list(events)
        done = Event(self)
        remaining = [len(events)]
        if not events:
            done.trigger(())
            return done

        def arm(_fired):
            remaining[0] -= 1
            if remaining[0] == 0:
                done.trigger(tuple(ev.value for ev in events))

        for ev in events:
            ev.on(arm)
        return done

    # -- simulated run loop --------------------------------------------------

    def _pop_due(self, until: float) -> Optional[TimerHandle]:
        while self._heap:
            when, _, handle = self._heap[0]
            if when > until:
                return None
            heapq.heappop(self._heap)
            if handle.cancelled:
                continue
            self.now = when
            return handle
        return None

    def run_until(self, until: float) -> None:
        """Process every event due at or before `until`; ends with now == until."""
        while True:
            handle = self._pop_due(until)
            if handle is None:
                break
            handle.fn()
        if until > self.now:
            self.now = until

    def run(self) -> None:
        """Drain the queue completely."""
        while self._heap:
            handle = self._pop_due(float("inf"))
            if handle is None:
                break
            handle.fn()

    # -- realtime run loop ---------------------------------------------------

    def call_threadsafe(self, fn: Callable, *args) -> None:
        """Inject work from another thread (socket readers, signal handlers)."""
        with self._cond:
            self._injected.append((fn, args))
            self._cond.notify()

    def run_realtime(self, should_stop: Callable[[], bool]) -> None:
        """Pace the event queue against the wall clock until should_stop().

        `now` advances with the monotonic clock; timers fire no earlier than
        their due time. Injected callables run as soon as the loop wakes.
        """
        origin = _time.monotonic() - self.now
        while not should_stop():
            with self._cond:
                injected, self._injected = self._injected, []
            for fn, args in injected:
                self.now = max(self.now, _time.monotonic() - origin)
                fn(*args)
            wall = _time.monotonic() - origin
            self.run_until(wall)
            # sleep until next timer or injection
            with self._cond:
                if self._injected:
                    continue
                delay = 0.05
                if self._heap:
                    when = self._heap[0][0]
                    delay = min(delay, max(0.0, when - (_time.monotonic() - origin)))
                if delay > 0:
                    self._cond.wait(timeout=delay)

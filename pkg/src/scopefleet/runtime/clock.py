"""Injectable clocks: simulated time for tests, wall time for deployments."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

from .sim import Environment

DEFAULT_EPOCH = datetime(2026, 1, 1, 0, 0, 0, tzinfo=timezone.utc)


def rfc3339(dt: datetime) -> str:
    """UTC, second precision, Z suffix."""
    return dt.astimezone(timezone.utc).replace(microsecond=0).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_rfc3339(s: str) -> datetime:
    return datetime.strptime(s, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)


class Clock:
    def seconds(self) -> float:
        raise NotImplementedError

    def utc(self) -> datetime:
        raise NotImplementedError


class SimClock(Clock):
    def __init__(self, env: Environment, epoch: datetime = DEFAULT_EPOCH):
        self.env = env
        self.epoch = epoch

    def seconds(self) -> float:
        return self.env.now

    def utc(self) -> datetime:
        return self.epoch + timedelta(seconds=self.env.now)


class RealClock(Clock):
    def __init__(self, env: Environment):
        self.env = env

    def seconds(self) -> float:
        return self.env.now

    def utc(self) -> datetime:
        return datetime.now(timezone.utc)

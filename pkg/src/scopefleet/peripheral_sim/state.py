"""Peripheral controller state: motor, light, temperature, safety latch."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional


class Light(str, Enum):
    OFF = "Off"
    OVER_PLATE = "OverPlate"
    UNDER_PLATE = "UnderPlate"


class Safety(str, Enum):
    ARMED = "Armed"
    TRIPPED_SHUTOFF = "TrippedShutoff"


@dataclass
class PeripheralState:
    motor_pos_um: int = 0            # signed micrometers from home, exact ints
    light: Light = Light.OFF
    temperature_c: float = 37.0
    safety: Safety = Safety.ARMED


@dataclass
class TempTrace:
    """Step function: temperature holds the latest sample at or before t."""
    initial_c: float = 37.0
    steps: list[tuple[float, float]] = field(default_factory=list)  # (at_s, temp_c)

    def value(self, t: float) -> float:
        current = self.initial_c
        for at, temp in self.steps:
            if at <= t:
                current = temp
            else:
                break
        return current

    @classmethod
    def from_doc(cls, doc) -> "TempTrace":
        if doc is None:
            return cls()
        steps = sorted((float(s["at"]), float(s["temp_c"])) for s in doc.get("steps", []))
        return cls(initial_c=float(doc.get("initial_c", 37.0)), steps=steps)


@dataclass
class PeripheralConfig:
    speed_um_s: float = 1000.0
    travel_min_um: int = 0
    travel_max_um: int = 50_000
    threshold_c: float = 40.0
    sample_period_s: float = 5.0
    temp_trace: Optional[TempTrace] = None

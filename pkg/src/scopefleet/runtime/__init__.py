from .sim import Environment, Event, Process, TimerHandle
from .clock import Clock, SimClock, RealClock, rfc3339, parse_rfc3339
from .bus import Bus, SimBus, BrokerUnreachable, topic_matches
from .channel import FluidChannel
from .trace import Trace, TraceRecord

__all__ = [
    "Environment", "Event", "Process", "TimerHandle",
    "Clock", "SimClock", "RealClock", "rfc3339", "parse_rfc3339",
    "Bus", "SimBus", "BrokerUnreachable", "topic_matches",
    "FluidChannel",
    "Trace", "TraceRecord",
]

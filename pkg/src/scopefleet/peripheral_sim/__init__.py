from .state import PeripheralState, Light, Safety, PeripheralConfig, TempTrace
from .controller import PeripheralController
from .lineproto import (
    format_command, parse_command, format_reply, parse_reply, Reply,
    ProtocolError,
)
from .errors import PeripheralUnreachable, SafetyTripped, TravelLimitExceeded
from .client import PeriphClient
from .pipe import SerialPipe

__all__ = [
    "PeripheralState", "Light", "Safety", "PeripheralConfig", "TempTrace",
    "PeripheralController", "PeriphClient", "SerialPipe",
    "format_command", "parse_command", "format_reply", "parse_reply",
    "Reply", "ProtocolError",
    "PeripheralUnreachable", "SafetyTripped", "TravelLimitExceeded",
]

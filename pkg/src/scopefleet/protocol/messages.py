"""Message bodies exchanged between console, hub, camera nodes, and cloud."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Optional

from .wells import WellId
from .config import LightMode, CaptureMode  # re-exported for convenience


class CommandKind(str, Enum):
    START_EXPERIMENT = "StartExperiment"
    STOP_EXPERIMENT = "StopExperiment"
    UPDATE_PARAMS = "UpdateParams"
    CAPTURE_NOW = "CaptureNow"
    ENABLE_WELLS = "EnableWells"
    DISABLE_WELLS = "DisableWells"
    EMERGENCY_STOP = "EmergencyStop"


@dataclass(frozen=True)
class Command:
    kind: CommandKind
    command_id: str
    issued_at: datetime
    # kind-specific body: raw config document for StartExperiment, partial
    # document for UpdateParams, list of wells for Enable/DisableWells
    config: Optional[dict] = None
    patch: Optional[dict] = None
    wells: Optional[frozenset[WellId]] = None


class NodeMessageKind(str, Enum):
    CAPTURE = "Capture"
    CAPTURE_ACK = "CaptureAck"
    BEGIN_TRANSFER = "BeginTransfer"
    TRANSFER_DONE = "TransferDone"
    HEARTBEAT = "Heartbeat"


class Status(str, Enum):
    OK = "Ok"
    ERROR = "Error"


@dataclass(frozen=True)
class NodeMessage:
    kind: NodeMessageKind
    well: WellId
    event_seq: int
    layer: Optional[int] = None           # Capture / CaptureAck only
    params: tuple[tuple[str, str], ...] = ()  # Capture only
    status: Status = Status.OK
    detail: str = ""

    def ack_key(self) -> tuple[WellId, int, Optional[int]]:
        return (self.well, self.event_seq, self.layer)


@dataclass(frozen=True)
class DeviceShadow:
    device_id: str
    online: bool
    last_event_seq: int
    enabled_wells: frozenset[WellId]
    reported_at: datetime
    current_experiment: Optional[str] = None
    last_error: Optional[str] = None    # most recent rejected-command reason


def shadow_to_doc(shadow: DeviceShadow) -> dict[str, Any]:
    return {
        "device_id": shadow.device_id,
        "online": shadow.online,
        "current_experiment": shadow.current_experiment,
        "last_event_seq": shadow.last_event_seq,
        "enabled_wells": [str(w) for w in sorted(shadow.enabled_wells)],
        "reported_at": shadow.reported_at,
    }

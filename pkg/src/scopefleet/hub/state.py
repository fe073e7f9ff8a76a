"""Hub-side bookkeeping: per-node lifecycle and capture-event records."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Optional

from ..protocol import WellId


class NodePhase(str, Enum):
    DISABLED = "Disabled"
    IDLE = "Idle"
    CAPTURE_SENT = "CaptureSent"
    ACKED = "Acked"
    TRANSFER_PENDING = "TransferPending"
    TRANSFERRING = "Transferring"
    TRANSFER_DONE = "TransferDone"
    UNRESPONSIVE = "Unresponsive"


@dataclass
class NodeState:
    well: WellId
    phase: NodePhase = NodePhase.IDLE
    last_seen: Optional[datetime] = None
    pending_layers: int = 0

    def snapshot(self) -> dict:
        return {"phase": self.phase.value, "pending_layers": self.pending_layers}


@dataclass
class CaptureEvent:
    event_seq: int
    experiment_id: str
    started_at: datetime
    layers: int
    per_node: dict[WellId, dict] = field(default_factory=dict)
    outcome: str = "complete"      # complete | partial | aborted


@dataclass
class QueueSchedule:
    order: list[WellId]            # row-major over wells holding pending files
    per_node_timeout_s: float
    cursor: int = 0

    def __post_init__(self):
        if self.per_node_timeout_s <= 0:
            raise ValueError("per_node_timeout_s must be positive")
        if len(set(self.order)) != len(self.order):
            raise ValueError("schedule lists a well twice")


@dataclass
class HubOptions:
    ack_timeout_s: float = 10.0
    per_node_timeout_s: float = 60.0
    shadow_heartbeat_s: float = 60.0
    periph_speed_um_s: float = 1000.0
    video_fps: float = 4.0

from .state import NodePhase, NodeState, CaptureEvent, QueueSchedule, HubOptions
from .errors import AbortedByCommand, AllNodesUnresponsive
from .controller import HubController
from .transfers import SimTransferManager
from .uploader import Uploader
from .shadow import ShadowPublisher

__all__ = [
    "NodePhase", "NodeState", "CaptureEvent", "QueueSchedule", "HubOptions",
    "AbortedByCommand", "AllNodesUnresponsive",
    "HubController", "SimTransferManager", "Uploader", "ShadowPublisher",
]

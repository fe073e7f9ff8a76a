"""Bulk-transfer access: the hub pulls one node's files at a time.

The manager hides the channel: in single-process mode it drives the node
actor's stream directly over the shared uplink model; the wall-clock
deployment's manager (fleetctl.netproc) opens the node's framed TCP stream.
Either way the hub sees a TransferSession: received files grow one by one
and `done` fires only when the node finished its batch.
"""

from __future__ import annotations

from typing import Optional

from ..camera_node import CameraNode, TransferSession
from ..protocol import WellId
from ..runtime import Environment


class SimTransferManager:
    def __init__(self, env: Environment):
        self.env = env
        self.nodes: dict[WellId, CameraNode] = {}

    def register(self, node: CameraNode) -> None:
        self.nodes[node.well] = node

    def begin(self, well: WellId, event_seq: int) -> TransferSession:
        session = TransferSession(self.env, well, event_seq)
        node = self.nodes.get(well)
        if node is not None:
            self.env.process(node.serve_transfer(session))
        # unknown node: the session simply never completes and the hub's
        # per-node timeout skips it
        return session

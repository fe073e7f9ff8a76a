"""Fleet assembly.

Single-process mode wires every actor (hub, 24 nodes, peripheral, store)
onto one simulated scheduler: deterministic, fast, and the default for
scenarios and CI. Multi-process mode (see netproc/cli) spawns the same
actors as OS processes against a socket broker and the HTTP store stub;
the protocol code paths are identical, only transports differ.
"""

from __future__ import annotations

import itertools
import uuid
from dataclasses import dataclass, field
from datetime import timezone
from typing import Any, Optional

from ..camera_node import CameraNode, FaultScript, NodeConfig
from ..hub import HubController, HubOptions, SimTransferManager, Uploader
from ..peripheral_sim import (
    PeriphClient, PeripheralConfig, PeripheralController, SerialPipe, TempTrace,
)
from ..protocol import (
    ALL_WELLS, Command, CommandKind, WellId, cloud_cmd_topic, encode_message,
)
from ..runtime import Environment, FluidChannel, SimBus, SimClock, Trace, parse_rfc3339
from ..storage import MemStore, SimStoreAdapter


@dataclass
class TopologyConfig:
    device_id: str = "scope-01"
    wells: Any = "all"                     # "all" or list of well names
    scene_seed_base: int = 100
    image_size: tuple[int, int] = (640, 480)
    capture_time_s: float = 1.0
    nominal_file_bytes: Optional[int] = None
    uplink_bytes_per_s: float = 1_000_000.0
    per_connection_overhead_s: float = 0.5
    ack_timeout_s: float = 10.0
    per_node_timeout_s: float = 60.0
    shadow_heartbeat_s: float = 60.0
    bus_latency_s: float = 0.001
    store_op_latency_s: float = 0.05
    epoch: str = "2026-01-01T00:00:00Z"
    node_faults: dict[str, dict] = field(default_factory=dict)
    periph_speed_um_s: float = 1000.0
    temp_threshold_c: float = 40.0
    temp_sample_period_s: float = 5.0
    temp_trace: Optional[dict] = None
    node_heartbeat_s: float = 30.0

    @classmethod
    def from_doc(cls, doc: dict) -> "TopologyConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown topology fields: {sorted(unknown)}")
        cfg = cls(**doc)
        if isinstance(cfg.image_size, list):
            cfg.image_size = tuple(cfg.image_size)
        return cfg

    def well_ids(self) -> list[WellId]:
        if self.wells == "all":
            return list(ALL_WELLS)
        wells = [WellId.parse(w) for w in self.wells]
        if len(set(wells)) != len(wells):
            raise ValueError("duplicate well in topology config")
        return wells


class SimTopology:
    """Everything in one scheduler; the handle scenarios and tests drive."""

    def __init__(self, config: TopologyConfig):
        self.config = config
        self.env = Environment()
        self.clock = SimClock(self.env,
                              epoch=parse_rfc3339(config.epoch).replace(tzinfo=timezone.utc))
        self.trace = Trace(self.clock.seconds)
        self.cloud_bus = SimBus(self.env, latency_s=config.bus_latency_s)
        self.local_bus = SimBus(self.env, latency_s=config.bus_latency_s)
        self.uplink = FluidChannel(self.env, config.uplink_bytes_per_s,
                                   config.per_connection_overhead_s)

        # peripheral controller on its serial pipe
        self.pipe = SerialPipe(self.env)
        self.periph_client = PeriphClient(self.env, self.pipe.hub_end.send,
                                          speed_um_s=config.periph_speed_um_s)
        self.pipe.hub_end.on_line = self.periph_client.on_line
        self.periph = PeripheralController(
            self.env, self.clock, self.trace, self.pipe.periph_end.send,
            PeripheralConfig(
                speed_um_s=config.periph_speed_um_s,
                threshold_c=config.temp_threshold_c,
                sample_period_s=config.temp_sample_period_s,
                temp_trace=TempTrace.from_doc(config.temp_trace)))
        self.pipe.periph_end.on_line = self.periph.on_line

        # camera nodes
        self.transfer_mgr = SimTransferManager(self.env)
        self.nodes: dict[WellId, CameraNode] = {}
        for i, well in enumerate(config.well_ids()):
            node_cfg = NodeConfig(
                well=well, scene_seed=config.scene_seed_base + i,
                capture_time_s=config.capture_time_s,
                image_size=config.image_size,
                nominal_file_bytes=config.nominal_file_bytes,
                heartbeat_interval_s=config.node_heartbeat_s)
            faults = FaultScript.from_doc(config.node_faults.get(str(well)))
            node = CameraNode(self.env, self.clock, self.local_bus, self.trace,
                              node_cfg, uplink=self.uplink, faults=faults)
            self.nodes[well] = node
            self.transfer_mgr.register(node)

        # storage and hub
        self.store = MemStore()
        self.store_adapter = SimStoreAdapter(self.env, self.store,
                                             op_latency_s=config.store_op_latency_s)
        self.uploader = Uploader(self.env, self.store_adapter, self.trace,
                                 config.device_id)
        self.hub = HubController(
            self.env, self.clock, self.cloud_bus, self.local_bus,
            self.periph_client, self.transfer_mgr, self.uploader, self.trace,
            config.device_id,
            HubOptions(ack_timeout_s=config.ack_timeout_s,
                       per_node_timeout_s=config.per_node_timeout_s,
                       shadow_heartbeat_s=config.shadow_heartbeat_s,
                       periph_speed_um_s=config.periph_speed_um_s))
        self._cmd_seq = itertools.count(1)

    # -- console-side helpers ------------------------------------------------------

    def send_command(self, kind: CommandKind | str, command_id: Optional[str] = None,
                     **payload) -> str:
        """Publish a command exactly as the console would."""
        kind = CommandKind(kind)
        command_id = command_id or f"cmd-{next(self._cmd_seq)}-{uuid.uuid4().hex[:6]}"
        cmd = Command(kind=kind, command_id=command_id, issued_at=self.clock.utc(),
                      config=payload.get("config"), patch=payload.get("patch"),
                      wells=(frozenset(WellId.parse(w) for w in payload["wells"])
                             if "wells" in payload else None))
        self.cloud_bus.publish(cloud_cmd_topic(self.config.device_id),
                               encode_message(cmd))
        return command_id

    def run_until(self, t: float) -> None:
        self.env.run_until(t)

    def manifest(self):
        return self.uploader.manifest

    def settle_uploads(self, max_extra: float = 3600.0) -> None:
        """Advance time until the upload queue drains (end-of-scenario)."""
        step = 5.0
        waited = 0.0
        while not self.uploader.idle() and waited < max_extra:
            self.env.run_until(self.env.now + step)
            waited += step

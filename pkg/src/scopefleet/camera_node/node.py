"""Per-well camera agent.

Answers Capture commands by rendering the well's scene at the commanded
focal depth, stores the PNG locally, and acks with the echoed
(well, event_seq, layer) key. Re-delivered Captures never store twice.
Bulk data leaves through the transfer channel, one file at a time, with
local copies deleted only after the hub confirms receipt; an interrupted
transfer leaves the remaining files in place for the next queue pass.

Capture handling and transfer serving are mutually exclusive within a node.

Hub-internal entries ride in the capture params under a leading underscore
(`_focal_um`, `_cfg`, `_mode`, `_video_s`, `_fps`); user camera parameters
pass through and are echoed into the PNG metadata verbatim, never
interpreted.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Optional, Union

from ..protocol import (
    NodeMessage, NodeMessageKind, Status, WellId, encode_message,
    decode_message, well_cmd_topic, well_evt_topic,
)
from ..runtime import Clock, Environment, FluidChannel, Trace, rfc3339
from .faults import FaultScript
from .render import encode_png, render_layer, DEFAULT_BLUR_PX_PER_UM, DEFAULT_IMAGE_SIZE
from .scene import SyntheticScene, make_random_scene

LayerKey = Union[int, str]   # layer index, or "video" for burst files


@dataclass
class NodeConfig:
    well: WellId
    scene_seed: int = 0
    capture_time_s: float = 1.0
    image_size: tuple[int, int] = DEFAULT_IMAGE_SIZE
    blur_px_per_um: float = DEFAULT_BLUR_PX_PER_UM
    heartbeat_interval_s: float = 30.0
    nominal_file_bytes: Optional[int] = None   # transfer-cost size; None = actual
    video_fps: float = 4.0
    transfer_addr: str = "sim"


@dataclass
class LocalImage:
    well: str
    event_seq: int
    layer: LayerKey
    captured_at: str
    data: bytes

    def meta(self) -> dict:
        return {"well": self.well, "event_seq": self.event_seq,
                "layer": self.layer, "captured_at": self.captured_at}


class TransferSession:
    """Hub-side handle for one node's transfer; the node streams into it."""

    def __init__(self, env: Environment, well: WellId, event_seq: int):
        self.env = env
        self.well = well
        self.event_seq = event_seq
        self.done = env.event()
        self.cancelled = False
        self.received: list[LocalImage] = []

    def deliver(self, image: LocalImage) -> bool:
        """Hub receipt + ack; False tells the node to stop streaming."""
        if self.cancelled:
            return False
        self.received.append(image)
        return True

    def complete(self) -> None:
        self.done.trigger(len(self.received))

    def cancel(self) -> None:
        self.cancelled = True


def pack_video(frames: list[bytes], fps: float) -> bytes:
    header = json.dumps({"format": "frameseq/1", "fps": fps,
                         "frames": len(frames)}).encode() + b"\n"
    parts = [header]
    for frame in frames:
        parts.append(struct.pack(">Q", len(frame)))
        parts.append(frame)
    return b"".join(parts)


class CameraNode:
    def __init__(self, env: Environment, clock: Clock, bus, trace: Trace,
                 config: NodeConfig, scene: Optional[SyntheticScene] = None,
                 uplink: Optional[FluidChannel] = None,
                 faults: Optional[FaultScript] = None):
        self.env = env
        self.clock = clock
        self.bus = bus
        self.trace = trace
        self.config = config
        self.well = config.well
        self.scene = scene or make_random_scene(config.scene_seed, str(config.well),
                                                size=config.image_size)
        self.uplink = uplink
        self.faults = faults or FaultScript()
        self.source = f"node/{config.well}"
        self.images: dict[tuple[int, LayerKey], LocalImage] = {}
        self._busy = False
        self._wakeup = env.event()
        self._rendering: set[tuple[int, LayerKey]] = set()
        self.last_event_seq = 0
        bus.subscribe(well_cmd_topic(self.well), self._on_cmd)
        env.process(self._heartbeat_loop())

    # -- liveness ------------------------------------------------------------

    def alive(self) -> bool:
        return not self.faults.dead(self.clock.seconds())

    def _may_publish(self) -> bool:
        return self.alive() and not self.faults.silent(self.clock.seconds())

    def _publish(self, msg: NodeMessage) -> None:
        if self._may_publish():
            self.bus.publish(well_evt_topic(self.well), encode_message(msg))

    def _heartbeat_loop(self):
        while True:
            self._publish(NodeMessage(kind=NodeMessageKind.HEARTBEAT, well=self.well,
                                      event_seq=self.last_event_seq,
                                      detail=self.config.transfer_addr))
            yield self.env.timeout(self.config.heartbeat_interval_s)

    # -- capture ---------------------------------------------------------------

    def _on_cmd(self, topic: str, payload: bytes) -> None:
        if not self.alive():
            return
        msg = decode_message(payload)
        if not isinstance(msg, NodeMessage):
            return
        if msg.kind is NodeMessageKind.CAPTURE:
            self.env.process(self._handle_capture(msg))
        # BeginTransfer intent arrives on the bus for the record; the bulk
        # stream itself is driven through serve_transfer by the hub side.

    def _wait_idle(self):
        while self._busy:
            yield self._wakeup   # re-read each pass: it is swapped on release

    def _set_busy(self, busy: bool) -> None:
        self._busy = busy
        if not busy:
            wake, self._wakeup = self._wakeup, self.env.event()
            wake.trigger()

    def _handle_capture(self, msg: NodeMessage):
        self.last_event_seq = msg.event_seq
        params = dict(msg.params)
        is_video = params.get("_mode") == "video"
        key = (msg.event_seq, "video" if is_video else msg.layer)
        if key in self.images:
            self._ack(msg)   # duplicate delivery: identical ack, no new file
            return
        if key in self._rendering:
            return
        if self.faults.storage_full(self.clock.seconds()):
            self._ack(msg, Status.ERROR, "storage")
            self.trace.log(self.source, "capture_failed", reason="storage",
                           event_seq=msg.event_seq, layer=msg.layer)
            return

        self._rendering.add(key)
        yield from self._wait_idle()
        self._set_busy(True)
        try:
            if is_video:
                image = yield from self._record_video(msg, params)
            else:
                yield self.env.timeout(self.config.capture_time_s)
                image = self._shoot(msg, params)
        finally:
            self._set_busy(False)
            self._rendering.discard(key)
        if not self.alive():
            return   # died mid-capture: nothing stored, nothing acked
        self.images[key] = image
        self.trace.log(self.source, "image_stored", event_seq=msg.event_seq,
                       layer=image.layer, bytes=len(image.data))
        self._ack(msg)

    def _shoot(self, msg: NodeMessage, params: dict) -> LocalImage:
        focal = float(params.get("_focal_um", 0.0))
        pixels = render_layer(self.scene, focal, at_time_s=self.clock.seconds(),
                              size=self.config.image_size,
                              blur_px_per_um=self.config.blur_px_per_um)
        captured_at = rfc3339(self.clock.utc())
        data = encode_png(pixels, {
            "well": str(self.well), "event_seq": msg.event_seq,
            "layer": msg.layer, "captured_at": captured_at,
            "params": [list(kv) for kv in msg.params],
        })
        return LocalImage(well=str(self.well), event_seq=msg.event_seq,
                          layer=msg.layer, captured_at=captured_at, data=data)

    def _record_video(self, msg: NodeMessage, params: dict):
        duration = float(params.get("_video_s", 1.0))
        fps = float(params.get("_fps", self.config.video_fps))
        n_frames = max(1, int(round(duration * fps)))
        frames = []
        for i in range(n_frames):
            pixels = render_layer(self.scene, float(params.get("_focal_um", 0.0)),
                                  at_time_s=self.clock.seconds(),
                                  size=self.config.image_size,
                                  blur_px_per_um=self.config.blur_px_per_um)
            frames.append(encode_png(pixels))
            yield self.env.timeout(duration / n_frames)
        captured_at = rfc3339(self.clock.utc())
        return LocalImage(well=str(self.well), event_seq=msg.event_seq,
                          layer="video", captured_at=captured_at,
                          data=pack_video(frames, fps))

    def _ack(self, msg: NodeMessage, status: Status = Status.OK, detail: str = "") -> None:
        self._publish(NodeMessage(
            kind=NodeMessageKind.CAPTURE_ACK, well=self.well,
            event_seq=msg.event_seq, layer=msg.layer, status=status, detail=detail))

    # -- transfer serving --------------------------------------------------------

    def pending_files(self, up_to_seq: int) -> list[tuple[int, LayerKey]]:
        keys = [k for k in self.images if k[0] <= up_to_seq]
        return sorted(keys, key=lambda k: (k[0], str(k[1])))

    def serve_transfer(self, session: TransferSession):
        """Stream all pending files for sessions's event (and any stale ones)."""
        if not self.alive():
            return
        yield from self._wait_idle()
        self._set_busy(True)
        delivered = 0
        t0 = self.clock.seconds()
        dropping = self.faults.drops_transfer(t0)
        try:
            keys = self.pending_files(session.event_seq)
            for i, key in enumerate(keys):
                if session.cancelled or not self.alive():
                    return
                if (dropping and self.faults.drop_transfer_after_files and
                        delivered >= self.faults.drop_transfer_after_files):
                    self.trace.log(self.source, "transfer_dropped",
                                   after_files=delivered)
                    return
                image = self.images[key]
                size = self.config.nominal_file_bytes or len(image.data)
                if self.uplink is not None:
                    yield self.uplink.start_flow(size, charge_overhead=(i == 0))
                if session.cancelled or not self.alive():
                    return   # died or abandoned mid-file: hub discards partial
                if session.deliver(image):
                    del self.images[key]   # hub acked receipt
                    delivered += 1
                else:
                    return
            session.complete()
            self._publish(NodeMessage(
                kind=NodeMessageKind.TRANSFER_DONE, well=self.well,
                event_seq=session.event_seq, detail=str(delivered)))
        finally:
            self._set_busy(False)
            self.trace.log(self.source, "transfer_served",
                           event_seq=session.event_seq, files=delivered,
                           complete=session.done.triggered)

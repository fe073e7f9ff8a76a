"""The orchestrator: capture cycles, command intake, transfer queue.

One logical control loop owns the capture state machine; broker
subscriptions only route messages into it. Every timer runs on the injected
scheduler, so the whole hub executes identically on simulated or wall time.

Cycle shape (z-stack): light on, stage to the initial offset, then per layer
fan a Capture out to every active well and wait until all acks arrive or the
ack timeout fires; wells that time out are Unresponsive for the rest of the
cycle and cost nothing further. Stage steps up between layers and returns to
its pre-cycle position afterwards no matter how the cycle ended. Then the
transfer queue drains pending wells strictly one at a time, each guarded by
the per-node timeout, and the event is handed to the uploader.

Config changes and well enable/disable are staged and take effect at the
next event, never inside a z-stack, so every image in one event was captured
under a single config snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from ..camera_node import LocalImage
from ..peripheral_sim import Light, PeriphClient, PeripheralUnreachable, SafetyTripped
from ..protocol import (
    ALL_WELLS, CaptureMode, Command, CommandKind, ConfigValidationError,
    DecodeError, ExperimentConfig, NodeMessage, NodeMessageKind, Status,
    UnsupportedVersion, WellId, apply_update, cloud_cmd_topic, decode_message,
    encode_message, validate_config, well_cmd_topic,
)
from ..runtime import Clock, Environment, Trace, rfc3339
from ..storage import ManifestEvent
from .errors import AbortedByCommand, AllNodesUnresponsive
from .shadow import ShadowPublisher
from .state import CaptureEvent, HubOptions, NodePhase, NodeState, QueueSchedule
from .uploader import Uploader


@dataclass
class _Experiment:
    config: ExperimentConfig
    next_seq: int = 0
    staged_patch: dict = field(default_factory=dict)
    staged_well_ops: list[tuple[str, frozenset[WellId]]] = field(default_factory=list)
    stop_requested: bool = False
    halted: bool = False
    last_event_ts: str = ""


class HubController:
    def __init__(self, env: Environment, clock: Clock, cloud_bus, local_bus,
                 periph: PeriphClient, transfers, uploader: Uploader,
                 trace: Trace, device_id: str,
                 options: Optional[HubOptions] = None):
        self.env = env
        self.clock = clock
        self.cloud_bus = cloud_bus
        self.local_bus = local_bus
        self.periph = periph
        self.transfers = transfers
        self.uploader = uploader
        self.trace = trace
        self.device_id = device_id
        self.options = options or HubOptions()
        self.source = "hub"

        self.experiment: Optional[_Experiment] = None
        self.node_states: dict[WellId, NodeState] = {
            w: NodeState(well=w, phase=NodePhase.DISABLED) for w in ALL_WELLS}
        self.events: list[CaptureEvent] = []
        self.last_error: Optional[str] = None
        self._seen_commands: set[str] = set()
        self._cycle_proc = None
        self._abort = None
        self._next_timer = None
        self._fanout_wait = None

        self.shadow = ShadowPublisher(
            env, clock, cloud_bus, device_id, trace, self._shadow_state,
            heartbeat_s=self.options.shadow_heartbeat_s)
        cloud_bus.subscribe(cloud_cmd_topic(device_id), self._on_cloud_cmd)
        local_bus.subscribe("well/+/evt", self._on_node_evt)
        periph.on_event = self._on_periph_event

    # -- shadow ------------------------------------------------------------------

    def _shadow_state(self) -> dict:
        running = self.experiment is not None and not self.experiment.halted
        return {
            "online": True,
            "current_experiment": self.experiment.config.experiment_id if running else None,
            "last_event_seq": self.events[-1].event_seq if self.events else -1,
            "enabled_wells": (frozenset(self.experiment.config.enabled_wells)
                              if running else frozenset()),
            "last_error": self.last_error,
        }

    def _report_invalid(self, reason: str, command_id: str = "") -> None:
        self.last_error = reason
        self.trace.log(self.source, "command_invalid", reason=reason,
                       command_id=command_id)
        self.shadow.publish()

    # -- command intake ------------------------------------------------------------

    def _on_cloud_cmd(self, topic: str, payload: bytes) -> None:
        try:
            cmd = decode_message(payload)
        except (DecodeError, UnsupportedVersion) as exc:
            self.trace.log(self.source, "command_invalid", reason=str(exc))
            return
        if isinstance(cmd, Command):
            self.handle_command(cmd)

    def handle_command(self, cmd: Command) -> None:
        if cmd.command_id in self._seen_commands:
            self.trace.log(self.source, "command_duplicate",
                           command_id=cmd.command_id)
            return
        self._seen_commands.add(cmd.command_id)
        self.trace.log(self.source, "command_received", command=cmd.kind.value,
                       command_id=cmd.command_id)
        handler = {
            CommandKind.START_EXPERIMENT: self._cmd_start,
            CommandKind.STOP_EXPERIMENT: self._cmd_stop,
            CommandKind.UPDATE_PARAMS: self._cmd_update,
            CommandKind.CAPTURE_NOW: self._cmd_capture_now,
            CommandKind.ENABLE_WELLS: self._cmd_enable,
            CommandKind.DISABLE_WELLS: self._cmd_disable,
            CommandKind.EMERGENCY_STOP: self._cmd_emergency_stop,
        }[cmd.kind]
        handler(cmd)

    def _cmd_start(self, cmd: Command) -> None:
        if self.experiment is not None and not self.experiment.halted:
            self._report_invalid("experiment already running", cmd.command_id)
            return
        try:
            config = validate_config(cmd.config or {})
        except ConfigValidationError as exc:
            self._report_invalid(f"bad config: {exc}", cmd.command_id)
            return
        self.experiment = _Experiment(config=config)
        self.last_error = None
        self.uploader.start_experiment(config)
        self.trace.log(self.source, "experiment_started",
                       experiment_id=config.experiment_id,
                       config_rev=config.fingerprint())
        self.shadow.publish()
        self._next_timer = self.env.call_soon(self._try_start_cycle)

    def _cmd_stop(self, cmd: Command) -> None:
        exp = self.experiment
        if exp is None or exp.halted:
            self._report_invalid("no experiment running", cmd.command_id)
            return
        exp.stop_requested = True
        if self._cycle_proc is None:
            self._finish_experiment("stopped")

    def _cmd_emergency_stop(self, cmd: Command) -> None:
        exp = self.experiment
        if exp is not None:
            exp.halted = True
            exp.stop_requested = True
        if self._next_timer is not None:
            self._next_timer.cancel()
            self._next_timer = None
        if self._abort is not None:
            self._abort.trigger("emergency_stop")
        elif exp is not None:
            self._finish_experiment("emergency_stop")
        self.trace.log(self.source, "emergency_stop")
        self.shadow.publish()

    def _cmd_update(self, cmd: Command) -> None:
        exp = self.experiment
        if exp is None or exp.halted:
            self._report_invalid("UpdateParams with no active experiment",
                                 cmd.command_id)
            return
        patch = cmd.patch or {}
        try:
            apply_update(exp.config, {**exp.staged_patch, **patch})
        except ConfigValidationError as exc:
            self._report_invalid(f"bad patch: {exc}", cmd.command_id)
            return
        exp.staged_patch.update(patch)
        self.trace.log(self.source, "update_staged",
                       fields=sorted(map(str, patch)))
        self.shadow.publish()

    def _well_op(self, cmd: Command, op: str) -> None:
        exp = self.experiment
        if exp is None or exp.halted:
            self._report_invalid(f"{op} wells with no active experiment",
                                 cmd.command_id)
            return
        wells = cmd.wells or frozenset()
        current = self._effective_wells(exp)
        future = current | wells if op == "enable" else current - wells
        if not future:
            self._report_invalid("cannot disable every well", cmd.command_id)
            return
        exp.staged_well_ops.append((op, wells))
        self.trace.log(self.source, "wells_staged", op=op,
                       wells=sorted(str(w) for w in wells))

    def _cmd_enable(self, cmd: Command) -> None:
        self._well_op(cmd, "enable")

    def _cmd_disable(self, cmd: Command) -> None:
        self._well_op(cmd, "disable")

    def _cmd_capture_now(self, cmd: Command) -> None:
        if self.experiment is None or self.experiment.halted:
            self._report_invalid("CaptureNow with no active experiment",
                                 cmd.command_id)
            return
        if self._cycle_proc is not None:
            self._report_invalid("CaptureNow while a cycle is in flight",
                                 cmd.command_id)
            return
        if self._next_timer is not None:
            self._next_timer.cancel()
        self._next_timer = self.env.call_soon(self._try_start_cycle)

    # -- experiment lifecycle --------------------------------------------------------

    def _effective_wells(self, exp: _Experiment) -> frozenset[WellId]:
        wells = frozenset(exp.config.enabled_wells)
        for op, batch in exp.staged_well_ops:
            wells = wells | batch if op == "enable" else wells - batch
        return wells

    def _apply_staged(self, exp: _Experiment) -> ExperimentConfig:
        config = exp.config
        if exp.staged_patch:
            config = apply_update(config, exp.staged_patch)
            exp.staged_patch = {}
        wells = self._effective_wells(exp)
        if wells != config.enabled_wells:
            config = replace(config, enabled_wells=wells)
        exp.staged_well_ops = []
        exp.config = config
        return config

    def _finish_experiment(self, reason: str) -> None:
        exp = self.experiment
        if exp is None:
            return
        if self._next_timer is not None:
            self._next_timer.cancel()
            self._next_timer = None
        self.trace.log(self.source, "experiment_stopped",
                       experiment_id=exp.config.experiment_id, reason=reason)
        self.experiment = None
        self.shadow.publish()

    def _try_start_cycle(self) -> None:
        self._next_timer = None
        exp = self.experiment
        if exp is None or exp.halted or self._cycle_proc is not None:
            return
        if exp.stop_requested:
            self._finish_experiment("stopped")
            return
        ts = rfc3339(self.clock.utc())
        if ts == exp.last_event_ts:
            # object keys are timestamped at second precision; never start
            # two events inside the same second
            self._next_timer = self.env.call_later(1.0, self._try_start_cycle)
            return
        config = self._apply_staged(exp)
        seq = exp.next_seq
        exp.next_seq += 1
        exp.last_event_ts = ts
        started = self.env.now
        self._abort = self.env.event()
        self._cycle_proc = self.env.process(self._cycle(config, seq, ts))

        def on_done(_ev, started_at=started):
            self._cycle_proc = None
            self._abort = None
            exp_now = self.experiment
            if exp_now is None:
                return
            if exp_now.halted or exp_now.stop_requested:
                self._finish_experiment(
                    "emergency_stop" if exp_now.halted else "stopped")
                return
            next_t = started_at + config.capture_interval_s
            self._next_timer = self.env.call_at(max(next_t, self.env.now),
                                                self._try_start_cycle)

        self._cycle_proc.on(on_done)

    # -- capture cycle ------------------------------------------------------------

    def run_capture_cycle(self, config: ExperimentConfig, event_seq: int):
        """Standalone entry for driving one cycle (tests, CaptureNow paths)."""
        self._abort = self.env.event()
        ts = rfc3339(self.clock.utc())
        return self.env.process(self._cycle(config, event_seq, ts))

    def _set_phase(self, well: WellId, phase: NodePhase) -> None:
        state = self.node_states[well]
        if state.phase is not phase:
            state.phase = phase
            self.trace.log(self.source, "node_phase", well=str(well),
                           phase=phase.value)

    def _cycle(self, config: ExperimentConfig, event_seq: int, ts: str):
        started_at = self.clock.utc()
        t0 = self.env.now
        abort = self._abort
        is_video = config.mode is CaptureMode.VIDEO_BURST
        layers = 1 if is_video else config.layers
        wells = sorted(config.enabled_wells)
        self.trace.log(self.source, "event_start", event_seq=event_seq,
                       config_rev=config.fingerprint(), layers=layers,
                       wells=len(wells), light=config.light.value,
                       mode=config.mode.value, ts=ts)
        for w in ALL_WELLS:
            self._set_phase(w, NodePhase.IDLE if w in config.enabled_wells
                            else NodePhase.DISABLED)
            self.node_states[w].pending_layers = 0

        acked: dict[WellId, set] = {w: set() for w in wells}
        staged: list[LocalImage] = []
        staged_keys: set = set()
        active = list(wells)
        aborted_reason = None

        try:
            yield from self.periph.set_light(Light(config.light.value))
            if abort.triggered:
                raise AbortedByCommand(abort.value)
            if not is_video:
                offset = int(round(config.initial_offset_um))
                if offset:
                    yield from self.periph.move(offset)
                step = max(1, int(round(config.layer_step_um)))
                for layer in range(layers):
                    if abort.triggered:
                        raise AbortedByCommand(abort.value)
                    report = yield from self._fanout(
                        layer, event_seq, active, config, abort)
                    for well, ok in report.items():
                        if ok == "acked":
                            acked[well].add(layer)
                        elif ok == "timed_out":
                            self._set_phase(well, NodePhase.UNRESPONSIVE)
                    active = [w for w in active
                              if self.node_states[w].phase is not NodePhase.UNRESPONSIVE]
                    if not active:
                        raise AllNodesUnresponsive(f"layer {layer}")
                    if abort.triggered:
                        raise AbortedByCommand(abort.value)
                    if layer < layers - 1:
                        yield from self.periph.move(step)
            else:
                report = yield from self._fanout(
                    0, event_seq, active, config, abort,
                    extra_timeout=config.video_duration_s or 0.0)
                for well, ok in report.items():
                    if ok == "acked":
                        acked[well].add(0)
                    elif ok == "timed_out":
                        self._set_phase(well, NodePhase.UNRESPONSIVE)
        except AbortedByCommand as exc:
            aborted_reason = str(exc) or "aborted"
        except AllNodesUnresponsive as exc:
            # remaining layers are pointless; homing and the transfer queue
            # still run and the event records what actually happened
            self.trace.log(self.source, "cycle_error",
                           reason=f"all nodes unresponsive at {exc}",
                           event_seq=event_seq)
        except (PeripheralUnreachable, SafetyTripped) as exc:
            aborted_reason = f"peripheral: {exc}"
            self.trace.log(self.source, "cycle_error", reason=str(exc),
                           event_seq=event_seq)

        yield from self._home_best_effort()

        if aborted_reason is None:
            pending = [w for w in wells if acked[w]]
            for w in pending:
                self.node_states[w].pending_layers = len(acked[w])
                self._set_phase(w, NodePhase.TRANSFER_PENDING)
            schedule = QueueSchedule(order=pending,
                                     per_node_timeout_s=self.options.per_node_timeout_s)
            yield from self._run_transfer_queue(schedule, event_seq, abort,
                                                staged, staged_keys)
            if abort.triggered:
                aborted_reason = str(abort.value) or "aborted"

        outcome = self._finish_event(config, event_seq, ts, started_at, t0,
                                     wells, layers, is_video, staged,
                                     staged_keys, aborted_reason)
        return outcome

    def _finish_event(self, config, event_seq, ts, started_at, t0, wells,
                      layers, is_video, staged, staged_keys, aborted_reason):
        if is_video:
            expected = {(str(w), 0) for w in wells}
            got = {(img.well, 0) for img in staged}
        else:
            expected = {(str(w), l) for w in wells for l in range(layers)}
            got = staged_keys
        missing = sorted(expected - got)
        if aborted_reason is not None:
            outcome = "aborted"
        else:
            outcome = "complete" if not missing else "partial"

        event = CaptureEvent(
            event_seq=event_seq,
            experiment_id=config.experiment_id,
            started_at=started_at, layers=layers,
            per_node={w: self.node_states[w].snapshot() for w in wells},
            outcome=outcome)
        self.events.append(event)
        record = ManifestEvent(
            event_seq=event_seq, timestamp=ts, outcome=outcome,
            wells=tuple(str(w) for w in wells), layers=layers,
            mode="video" if is_video else "zstack",
            missing=tuple(missing))
        self.uploader.enqueue_event(record, staged)
        self.trace.log(self.source, "event_end", event_seq=event_seq,
                       outcome=outcome, duration=round(self.env.now - t0, 6),
                       staged=len(staged), missing=len(missing),
                       reason=aborted_reason or "")
        self.shadow.publish()
        return event

    def _home_best_effort(self):
        try:
            pos = yield from self.periph.home()
            self.trace.log(self.source, "stage_homed", pos_um=pos)
        except (PeripheralUnreachable, SafetyTripped) as exc:
            self.trace.log(self.source, "stage_home_failed", reason=str(exc))
        try:
            yield from self.periph.set_light(Light.OFF)
        except (PeripheralUnreachable, SafetyTripped):
            pass

    # -- capture fanout ---------------------------------------------------------

    def _capture_params(self, config: ExperimentConfig, layer: int) -> tuple:
        focal = config.initial_offset_um + layer * config.layer_step_um
        extra = [("_focal_um", f"{focal:g}"), ("_cfg", config.fingerprint())]
        if config.mode is CaptureMode.VIDEO_BURST:
            extra += [("_mode", "video"), ("_video_s", f"{config.video_duration_s:g}"),
                      ("_fps", f"{self.options.video_fps:g}")]
        return config.camera_params + tuple(extra)

    def _fanout(self, layer: int, event_seq: int, wells: list[WellId],
                config: ExperimentConfig, abort, extra_timeout: float = 0.0):
        """One Capture per well; returns {well: 'acked'|'timed_out'} after all
        acks arrive or the ack timeout fires. Duplicate acks are ignored."""
        params = self._capture_params(config, layer)
        report: dict[WellId, str] = {}
        all_done = self.env.event()
        self._fanout_wait = (event_seq, layer, set(wells), report, all_done)
        for well in wells:
            msg = NodeMessage(kind=NodeMessageKind.CAPTURE, well=well,
                              event_seq=event_seq, layer=layer, params=params)
            self.local_bus.publish(well_cmd_topic(well), encode_message(msg))
            self._set_phase(well, NodePhase.CAPTURE_SENT)
            self.trace.log(self.source, "capture_sent", well=str(well),
                           event_seq=event_seq, layer=layer)
        timeout = self.env.timeout(self.options.ack_timeout_s + extra_timeout)
        yield self.env.any_of([all_done, timeout, abort])
        self._fanout_wait = None
        for well in wells:
            if well not in report:
                report[well] = "timed_out"
                self.trace.log(self.source, "ack_timeout", well=str(well),
                               event_seq=event_seq, layer=layer)
        return report

    def _on_node_evt(self, topic: str, payload: bytes) -> None:
        try:
            msg = decode_message(payload)
        except (DecodeError, UnsupportedVersion):
            return
        if not isinstance(msg, NodeMessage):
            return
        state = self.node_states.get(msg.well)
        if state is not None:
            state.last_seen = self.clock.utc()
        if msg.kind is NodeMessageKind.CAPTURE_ACK:
            self._on_ack(msg)
        elif msg.kind is NodeMessageKind.TRANSFER_DONE:
            self.trace.log(self.source, "transfer_done_msg", well=str(msg.well),
                           event_seq=msg.event_seq, files=msg.detail)

    def _on_ack(self, msg: NodeMessage) -> None:
        self.trace.log(self.source, "ack_received", well=str(msg.well),
                       event_seq=msg.event_seq, layer=msg.layer,
                       status=msg.status.value)
        wait = self._fanout_wait
        if wait is None:
            return
        event_seq, layer, expected, report, all_done = wait
        if (msg.event_seq, msg.layer) != (event_seq, layer) or msg.well not in expected:
            return
        if msg.well in report:
            return   # duplicate ack: idempotent by (well, event_seq, layer)
        report[msg.well] = "acked" if msg.status is Status.OK else "ack_error"
        if msg.status is Status.OK:
            self._set_phase(msg.well, NodePhase.ACKED)
        if len(report) == len(expected):
            all_done.trigger()

    # -- transfer queue -----------------------------------------------------------

    def _run_transfer_queue(self, schedule: QueueSchedule, event_seq: int,
                            abort, staged: list, staged_keys: set):
        """Strictly sequential: one node in Transferring at any instant; a
        node exceeding the per-node timeout is skipped and the queue moves on."""
        results: dict[WellId, str] = {}
        q0 = self.env.now
        for well in schedule.order:
            schedule.cursor += 1
            if abort.triggered:
                results[well] = "skipped"
                self._set_phase(well, NodePhase.UNRESPONSIVE)
                continue
            self._set_phase(well, NodePhase.TRANSFERRING)
            self.trace.log(self.source, "transfer_begin", well=str(well),
                           event_seq=event_seq)
            self.local_bus.publish(well_cmd_topic(well), encode_message(
                NodeMessage(kind=NodeMessageKind.BEGIN_TRANSFER, well=well,
                            event_seq=event_seq)))
            t0 = self.env.now
            session = self.transfers.begin(well, event_seq)
            timeout = self.env.timeout(schedule.per_node_timeout_s)
            yield self.env.any_of([session.done, timeout, abort])
            self._stage_received(session, event_seq, staged, staged_keys)
            if session.done.triggered:
                results[well] = "done"
                self._set_phase(well, NodePhase.TRANSFER_DONE)
                self.node_states[well].pending_layers = 0
                self.trace.log(self.source, "transfer_done", well=str(well),
                               event_seq=event_seq, files=len(session.received),
                               duration=round(self.env.now - t0, 6))
            else:
                session.cancel()
                results[well] = "skipped"
                self._set_phase(well, NodePhase.UNRESPONSIVE)
                self.trace.log(self.source, "transfer_timeout", well=str(well),
                               event_seq=event_seq, received=len(session.received))
        self.trace.log(self.source, "queue_done", event_seq=event_seq,
                       done=sum(1 for v in results.values() if v == "done"),
                       skipped=sum(1 for v in results.values() if v == "skipped"),
                       duration=round(self.env.now - q0, 6))
        return results

    def _stage_received(self, session, event_seq: int, staged: list,
                        staged_keys: set) -> None:
        for image in session.received:
            if image.event_seq != event_seq:
                # late files from a previously skipped transfer: the manifest
                # already recorded them missing, so they must not be published
                self.trace.log(self.source, "stale_discarded", well=image.well,
                               event_seq=image.event_seq, layer=str(image.layer))
                continue
            key = (image.well, image.layer)
            if key in staged_keys:
                continue
            staged_keys.add(key)
            staged.append(image)

    # -- peripheral events -----------------------------------------------------------

    def _on_periph_event(self, tokens: list[str]) -> None:
        if not tokens:
            return
        if tokens[0] == "OVERTEMP":
            self.trace.log(self.source, "safety_alert", temp=tokens[1] if
                           len(tokens) > 1 else "")
            self.last_error = "safety shutoff tripped"
            exp = self.experiment
            if exp is not None:
                exp.halted = True
                exp.stop_requested = True
            if self._next_timer is not None:
                self._next_timer.cancel()
                self._next_timer = None
            if self._abort is not None:
                self._abort.trigger("safety_shutoff")
            elif exp is not None:
                self._finish_experiment("safety_shutoff")
            self.shadow.publish()
        elif tokens[0] == "SAFEHOME":
            self.trace.log(self.source, "safety_homed",
                           pos_um=tokens[1] if len(tokens) > 1 else "")

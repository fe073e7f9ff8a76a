"""Scenario scripts: timed commands + fault injections + assertions.

Structured text (JSON), schema in docs/scenario-schema.md:

    {"name": "kill-two",
     "topology": { ... TopologyConfig fields ... },
     "steps": [
        {"at": 0.0,   "command": {"kind": "StartExperiment", "config": {...}}},
        {"at": 120.0, "fault": {"well": "B2", "kind": "die"}}],
     "run_until": 3600.0,
     "assertions": [{"kind": "complete_events", "equals": 4},
                    {"kind": "queue_exclusive"}]}

Identical script + seeds => identical trace (modulo wall-clock fields):
everything runs on the simulated scheduler.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from . import audit as audits
from .topology import SimTopology, TopologyConfig


class ScenarioTimeout(Exception):
    pass


@dataclass
class Scenario:
    name: str
    topology: TopologyConfig
    steps: list[dict] = field(default_factory=list)
    run_until: float = 0.0
    assertions: list[dict] = field(default_factory=list)
    wall_limit_s: float = 300.0

    @classmethod
    def from_doc(cls, doc: dict) -> "Scenario":
        return cls(
            name=doc.get("name", "unnamed"),
            topology=TopologyConfig.from_doc(doc.get("topology", {})),
            steps=list(doc.get("steps", [])),
            run_until=float(doc.get("run_until", 0.0)),
            assertions=list(doc.get("assertions", [])),
            wall_limit_s=float(doc.get("wall_limit_s", 300.0)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "Scenario":
        return cls.from_doc(json.loads(Path(path).read_text()))


def _apply_fault(topo: SimTopology, fault: dict) -> None:
    from ..protocol import WellId
    node = topo.nodes[WellId.parse(fault["well"])]
    kind = fault["kind"]
    now = topo.env.now
    if kind == "die":
        node.faults.die_at = now
    elif kind == "silent":
        node.faults.silent_from = now
    elif kind == "storage_full":
        node.faults.storage_full_from = now
    elif kind == "drop_transfer":
        node.faults.drop_transfer_at = now
        node.faults.drop_transfer_after_files = int(fault.get("after_files", 0))
    else:
        raise ValueError(f"unknown fault kind {kind!r}")
    topo.trace.log("scenario", "fault_injected", well=fault["well"], fault=kind)


def _schedule_steps(topo: SimTopology, steps: list[dict]) -> None:
    for step in steps:
        at = float(step.get("at", 0.0))
        if "command" in step:
            cmd = dict(step["command"])
            kind = cmd.pop("kind")
            cmd_id = cmd.pop("command_id", None)
            topo.env.call_at(at, lambda k=kind, c=cmd, i=cmd_id:
                             topo.send_command(k, command_id=i, **c))
        elif "fault" in step:
            topo.env.call_at(at, lambda f=step["fault"]: _apply_fault(topo, f))
        else:
            raise ValueError(f"step needs 'command' or 'fault': {step}")


def _check(topo: SimTopology, assertion: dict) -> tuple[bool, str]:
    kind = assertion["kind"]
    manifest = topo.manifest()
    try:
        if kind == "complete_events":
            got = sum(1 for e in (manifest.events if manifest else ())
                      if e.outcome == "complete")
            want = assertion["equals"]
            if got != want:
                raise audits.AuditFailure(f"{got} complete events, wanted {want}")
            return True, f"{got} complete events"
        if kind == "events":
            got = len(manifest.events) if manifest else 0
            if got != assertion["equals"]:
                raise audits.AuditFailure(f"{got} events, wanted {assertion['equals']}")
            return True, f"{got} events"
        if kind == "event_outcome":
            ev = manifest.events[assertion["event_seq"]]
            if ev.outcome != assertion["equals"]:
                raise audits.AuditFailure(
                    f"event {ev.event_seq} outcome {ev.outcome}, "
                    f"wanted {assertion['equals']}")
            return True, f"event {ev.event_seq} {ev.outcome}"
        if kind == "queue_exclusive":
            peak = audits.audit_queue_exclusive(topo.trace)
            return True, f"peak concurrency {peak}"
        if kind == "queue_liveness":
            audits.audit_queue_liveness(topo.trace, topo.config.per_node_timeout_s)
            return True, "within bound"
        if kind == "stage_homed":
            audits.audit_stage_homed(topo.trace)
            return True, "home after every event"
        if kind == "manifest_complete":
            n = audits.audit_manifest_complete(manifest, topo.store.keys())
            return True, f"{n} urls == stored objects"
        if kind == "safety_latch":
            audits.audit_safety_latch(topo.trace)
            return True, "latch held"
        if kind == "config_atomicity":
            seen = audits.audit_config_atomicity(topo.trace, topo.store.objects)
            return True, f"{len(seen)} events single-config"
        if kind == "no_list_ops":
            audits.audit_no_list_ops(topo.store.ops)
            return True, "PUT/GET only"
        raise ValueError(f"unknown assertion kind {kind!r}")
    except audits.AuditFailure as exc:
        return False, str(exc)


def run_scenario(scenario: Scenario,
                 topo: Optional[SimTopology] = None) -> tuple[SimTopology, dict]:
    """Execute the script on a fresh (or provided) topology; returns the
    topology and a verdict with one entry per assertion."""
    topo = topo or SimTopology(scenario.topology)
    _schedule_steps(topo, scenario.steps)
    wall_start = time.monotonic()
    t, stride = 0.0, 60.0
    while t < scenario.run_until:
        t = min(t + stride, scenario.run_until)
        topo.run_until(t)
        if time.monotonic() - wall_start > scenario.wall_limit_s:
            raise ScenarioTimeout(
                f"{scenario.name}: exceeded {scenario.wall_limit_s} s wall clock")
    topo.settle_uploads()
    checks = []
    for assertion in scenario.assertions:
        ok, detail = _check(topo, assertion)
        checks.append({"kind": assertion["kind"], "ok": ok, "detail": detail})
    verdict = {"name": scenario.name, "passed": all(c["ok"] for c in checks),
               "checks": checks}
    return topo, verdict

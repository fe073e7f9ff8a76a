"""Trace and store audits: the checkable form of the system's guarantees.

Each audit consumes the merged event log (and where needed the store
contents via the test backdoor) and raises AuditFailure with a precise
explanation. Audits are read-only and independent of the code paths they
check.
"""

from __future__ import annotations

from typing import Iterable, Optional

from ..camera_node.render import png_metadata
from ..runtime.trace import TraceRecord
from ..storage import Manifest, derive_urls, manifest_key, parse_object_key


class AuditFailure(AssertionError):
    pass


def _records(trace) -> list[TraceRecord]:
    return trace.records if hasattr(trace, "records") else list(trace)


def audit_queue_exclusive(trace) -> int:
    """At most one node in Transferring at any instant, over the whole run."""
    active: set[str] = set()
    peak = 0
    for rec in _records(trace):
        if rec.kind == "transfer_begin":
            active.add(rec.data["well"])
            peak = max(peak, len(active))
            if len(active) > 1:
                raise AuditFailure(
                    f"t={rec.t}: concurrent transfers {sorted(active)}")
        elif rec.kind in ("transfer_done", "transfer_timeout"):
            active.discard(rec.data["well"])
    if active:
        raise AuditFailure(f"transfers never closed: {sorted(active)}")
    return peak


def audit_queue_liveness(trace, per_node_timeout_s: float,
                         overhead_frac: float = 0.05) -> None:
    """Queue completion <= sum of healthy transfer times
    + skipped * per-node timeout, plus bounded overhead."""
    by_event: dict[int, dict] = {}
    for rec in _records(trace):
        seq = rec.data.get("event_seq")
        if rec.kind == "transfer_done":
            by_event.setdefault(seq, {"healthy": 0.0, "skipped": 0})
            by_event[seq]["healthy"] += rec.data["duration"]
        elif rec.kind == "transfer_timeout":
            by_event.setdefault(seq, {"healthy": 0.0, "skipped": 0})
            by_event[seq]["skipped"] += 1
        elif rec.kind == "queue_done":
            info = by_event.get(seq, {"healthy": 0.0, "skipped": 0})
            bound = info["healthy"] + info["skipped"] * per_node_timeout_s
            allowed = bound * (1 + overhead_frac) + 0.5
            if rec.data["duration"] > allowed:
                raise AuditFailure(
                    f"event {seq}: queue took {rec.data['duration']:.3f} s, "
                    f"bound {allowed:.3f} s "
                    f"(healthy {info['healthy']:.3f}, skipped {info['skipped']})")


def audit_stage_homed(trace) -> None:
    """Motor position is home (0) at every event start and at trace end."""
    pos = 0
    for rec in _records(trace):
        if rec.kind == "event_start" and pos != 0:
            raise AuditFailure(
                f"event {rec.data['event_seq']} started with stage at {pos} um")
        if rec.kind == "periph_move":
            pos = rec.data["pos_um"]
    if pos != 0:
        raise AuditFailure(f"stage finished at {pos} um, not home")


def audit_safety_latch(trace) -> None:
    """After a trip: light only Off, no motion other than the autonomous
    homing retraction, until an explicit re-arm."""
    tripped = False
    for rec in _records(trace):
        if rec.kind == "periph_trip":
            tripped = True
        elif rec.kind == "periph_arm":
            tripped = False
        elif tripped and rec.kind == "periph_light":
            if rec.data["light"] != "Off":
                raise AuditFailure(f"t={rec.t}: light {rec.data['light']} while tripped")
        elif tripped and rec.kind == "periph_move":
            if rec.data["pos_um"] != 0:
                raise AuditFailure(
                    f"t={rec.t}: motion to {rec.data['pos_um']} um while tripped")


def audit_manifest_complete(manifest: Optional[Manifest], store_keys: Iterable[str],
                            base: str = "http://store") -> int:
    """Template-derived URLs == stored objects (minus the manifest), exactly."""
    if manifest is None:
        raise AuditFailure("no manifest was ever written")
    derived = set(derive_urls(manifest, base))
    stored = {f"{base}/{key}" for key in store_keys
              if key != manifest_key(manifest.experiment_id)}
    if derived != stored:
        missing = sorted(derived - stored)[:5]
        extra = sorted(stored - derived)[:5]
        raise AuditFailure(
            f"manifest/store mismatch: {len(derived - stored)} derived-not-stored "
            f"(e.g. {missing}), {len(stored - derived)} stored-not-derived (e.g. {extra})")
    return len(derived)


def audit_config_atomicity(trace, store_objects: dict[str, bytes]) -> dict[int, str]:
    """Every image in an event carries the event's single config fingerprint."""
    rev_by_seq = {rec.data["event_seq"]: rec.data["config_rev"]
                  for rec in _records(trace) if rec.kind == "event_start"}
    seen: dict[int, str] = {}
    for key, data in store_objects.items():
        parsed = parse_object_key(key)
        if parsed is None or parsed[3] == "video":
            continue
        meta = png_metadata(data)
        params = dict(tuple(kv) for kv in meta.get("params", []))
        rev = params.get("_cfg")
        seq = meta.get("event_seq")
        if rev is None or seq is None:
            raise AuditFailure(f"{key}: image carries no config fingerprint")
        if seq in seen and seen[seq] != rev:
            raise AuditFailure(
                f"event {seq}: mixed config fingerprints {seen[seq]} / {rev}")
        seen[seq] = rev
        expected = rev_by_seq.get(seq)
        if expected is not None and expected != rev:
            raise AuditFailure(
                f"event {seq}: image fingerprint {rev} != cycle snapshot {expected}")
    return seen


def audit_no_list_ops(store_ops) -> None:
    ops = {op.op for op in store_ops}
    if not ops <= {"PUT", "GET"}:
        raise AuditFailure(f"store client issued non-PUT/GET ops: {ops}")

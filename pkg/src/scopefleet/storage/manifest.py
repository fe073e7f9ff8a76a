"""The manifest: a text map from which every image URL is derivable.

Properties it guarantees:
  - events append in strictly increasing sequence with nondecreasing
    timestamps; earlier entries are never rewritten (append-only),
  - every URL expanded from the template resolves to a stored object and
    nothing else is stored (completeness; gaps are spelled out in each
    event's `missing` list rather than silently dropped),
  - URL derivation needs no store round-trip, ever.

Geometry can change between events (parameter updates, well enable/disable),
so each event records the wells and layer count it was captured under; the
top-level fields describe the experiment as started.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

from ..protocol import CaptureMode, ExperimentConfig

SCHEMA_VERSION = 1
URL_TEMPLATE = "{base}/{experiment_id}/{timestamp}/{well}/{layer}.png"
VIDEO_URL_TEMPLATE = "{base}/{experiment_id}/{timestamp}/{well}/video.bin"


class SequenceGap(Exception):
    pass


@dataclass(frozen=True)
class ManifestEvent:
    event_seq: int
    timestamp: str                  # RFC3339 UTC, second precision
    outcome: str                    # complete | partial | aborted
    wells: tuple[str, ...]          # enabled wells for this event, sorted
    layers: int
    mode: str                       # zstack | video
    missing: tuple[tuple[str, int], ...]   # (well, layer) pairs not stored

    def to_doc(self) -> dict:
        return {
            "event_seq": self.event_seq,
            "timestamp": self.timestamp,
            "outcome": self.outcome,
            "wells": list(self.wells),
            "layers": self.layers,
            "mode": self.mode,
            "missing": [list(pair) for pair in self.missing],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ManifestEvent":
        return cls(
            event_seq=doc["event_seq"], timestamp=doc["timestamp"],
            outcome=doc["outcome"], wells=tuple(doc["wells"]),
            layers=doc["layers"], mode=doc["mode"],
            missing=tuple((w, l) for w, l in doc["missing"]))


@dataclass(frozen=True)
class Manifest:
    experiment_id: str
    device_id: str
    enabled_wells: tuple[str, ...]
    layers: int
    mode: str
    events: tuple[ManifestEvent, ...] = ()
    schema_version: int = SCHEMA_VERSION
    layout: tuple[int, int] = (4, 6)   # rows, cols
    url_template: str = URL_TEMPLATE
    video_url_template: str = VIDEO_URL_TEMPLATE


def new_manifest(config: ExperimentConfig, device_id: str) -> Manifest:
    return Manifest(
        experiment_id=config.experiment_id,
        device_id=device_id,
        enabled_wells=tuple(str(w) for w in sorted(config.enabled_wells)),
        layers=config.layers,
        mode="video" if config.mode is CaptureMode.VIDEO_BURST else "zstack",
    )


def update_manifest(manifest: Manifest, event: ManifestEvent) -> Manifest:
    """Append the next event; prior entries are preserved verbatim."""
    expected = manifest.events[-1].event_seq + 1 if manifest.events else 0
    if event.event_seq != expected:
        raise SequenceGap(f"expected event_seq {expected}, got {event.event_seq}")
    if manifest.events and event.timestamp < manifest.events[-1].timestamp:
        raise SequenceGap(
            f"timestamp {event.timestamp} before {manifest.events[-1].timestamp}")
    return replace(manifest, events=manifest.events + (event,))


def event_urls(manifest: Manifest, event: ManifestEvent, base: str) -> list[str]:
    urls = []
    missing = set(map(tuple, event.missing))
    base = base.rstrip("/")
    if event.mode == "video":
        for well in event.wells:
            if (well, 0) not in missing:
                urls.append(manifest.video_url_template.format(
                    base=base, experiment_id=manifest.experiment_id,
                    timestamp=event.timestamp, well=well))
        return urls
    for well in event.wells:
        for layer in range(event.layers):
            if (well, layer) not in missing:
                urls.append(manifest.url_template.format(
                    base=base, experiment_id=manifest.experiment_id,
                    timestamp=event.timestamp, well=well, layer=layer))
    return urls


def derive_urls(manifest: Manifest, base: str) -> list[str]:
    """Every stored image URL, exhaustively, without touching the store."""
    urls = []
    for event in manifest.events:
        urls.extend(event_urls(manifest, event, base))
    return urls


def manifest_to_json(manifest: Manifest) -> bytes:
    doc = {
        "schema_version": manifest.schema_version,
        "experiment_id": manifest.experiment_id,
        "device_id": manifest.device_id,
        "layout": {"rows": manifest.layout[0], "cols": manifest.layout[1]},
        "enabled_wells": list(manifest.enabled_wells),
        "layers": manifest.layers,
        "mode": manifest.mode,
        "url_template": manifest.url_template,
        "video_url_template": manifest.video_url_template,
        "events": [e.to_doc() for e in manifest.events],
    }
    # canonical serialization: appending event N+1 leaves bytes of events
    # 0..N untouched
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode()


def manifest_from_json(data: bytes) -> Manifest:
    doc = json.loads(data)
    return Manifest(
        experiment_id=doc["experiment_id"],
        device_id=doc["device_id"],
        enabled_wells=tuple(doc["enabled_wells"]),
        layers=doc["layers"],
        mode=doc["mode"],
        events=tuple(ManifestEvent.from_doc(e) for e in doc["events"]),
        schema_version=doc["schema_version"],
        layout=(doc["layout"]["rows"], doc["layout"]["cols"]),
        url_template=doc["url_template"],
        video_url_template=doc["video_url_template"],
    )

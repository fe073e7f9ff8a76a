"""Object keys: one fixed layout, bijective with their coordinates.

    <experiment_id>/<timestamp>/<well>/<layer>.png      z-stack image
    <experiment_id>/<timestamp>/<well>/video.bin        burst recording
    <experiment_id>/manifest.json                       the manifest itself

Timestamps are RFC3339 UTC at second precision; the hub never starts two
events inside the same second, so (experiment, timestamp) identifies an
event without any store query.
"""

from __future__ import annotations

import re

_KEY_RE = re.compile(
    r"^(?P<exp>[A-Za-z0-9._~-]+)/(?P<ts>[0-9T:Z-]+)/(?P<well>[A-D][1-6])/"
    r"(?:(?P<layer>\d+)\.png|video\.bin)$")


def object_key(experiment_id: str, timestamp: str, well: str, layer: int) -> str:
    return f"{experiment_id}/{timestamp}/{well}/{layer}.png"


def video_object_key(experiment_id: str, timestamp: str, well: str) -> str:
    return f"{experiment_id}/{timestamp}/{well}/video.bin"


def manifest_key(experiment_id: str) -> str:
    return f"{experiment_id}/manifest.json"


def parse_object_key(key: str):
    """(experiment_id, timestamp, well, layer-or-'video'); None if not an image key."""
    m = _KEY_RE.match(key)
    if not m:
        return None
    layer = m.group("layer")
    return (m.group("exp"), m.group("ts"), m.group("well"),
            int(layer) if layer is not None else "video")

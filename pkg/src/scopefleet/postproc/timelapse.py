"""Timelapse assembly: one frame per capture event for a chosen well.

Fixed-layer mode fetches exactly the template-derived URL per event and
recomputes nothing; EDoF mode fetches the whole stack and composes it.
Events with the requested image missing produce a labeled placeholder frame
so the timeline never silently skips. Outputs are written atomically
(temp + rename) and are byte-identical across reruns of the same manifest.
"""

from __future__ import annotations

import io
import json
import os
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from PIL import Image, ImageDraw

from ..storage import Manifest
from ..storage.manifest import ManifestEvent
from .focus import FocusStack, edof_compose


class TimelapseError(Exception):
    pass


class NoSuchWell(TimelapseError):
    pass


class LayerOutOfRange(TimelapseError):
    pass


Fetch = Callable[[str], Optional[bytes]]


def _expand(manifest: Manifest, event: ManifestEvent, base: str,
            well: str, layer: int) -> str:
    return manifest.url_template.format(
        base=base.rstrip("/"), experiment_id=manifest.experiment_id,
        timestamp=event.timestamp, well=well, layer=layer)


def _placeholder(size: tuple[int, int], label: str) -> np.ndarray:
    img = Image.new("L", size, 96)
    draw = ImageDraw.Draw(img)
    draw.rectangle([4, 4, size[0] - 5, size[1] - 5], outline=0)
    draw.text((10, 10), label, fill=255)
    return np.asarray(img)


def _write_png_atomic(path: Path, pixels: np.ndarray) -> None:
    buf = io.BytesIO()
    Image.fromarray(pixels).save(buf, format="PNG")
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(buf.getvalue())
    os.replace(tmp, path)


def build_timelapse(manifest: Manifest, well: str, mode: str, out_dir: str | Path,
                    base: str, fetch: Fetch, layer: int = 0,
                    window_radius: int = 4) -> dict:
    """Write frame_<seq>.png per event plus index.json; returns the index."""
    if well not in manifest.enabled_wells and not any(
            well in e.wells for e in manifest.events):
        raise NoSuchWell(well)
    if mode == "layer" and not (0 <= layer < max(
            [manifest.layers] + [e.layers for e in manifest.events])):
        raise LayerOutOfRange(f"layer {layer} of {manifest.layers}")
    if mode not in ("layer", "edof"):
        raise TimelapseError(f"unknown mode {mode!r}")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frames = []
    size: Optional[tuple[int, int]] = None

    for event in sorted(manifest.events, key=lambda e: (e.timestamp, e.event_seq)):
        missing = set(map(tuple, event.missing))
        pixels = None
        if well in event.wells and event.mode == "zstack":
            if mode == "layer":
                if layer < event.layers and (well, layer) not in missing:
                    data = fetch(_expand(manifest, event, base, well, layer))
                    if data is not None:
                        pixels = np.asarray(Image.open(io.BytesIO(data)))
            else:
                layers = []
                for li in range(event.layers):
                    if (well, li) in missing:
                        continue
                    data = fetch(_expand(manifest, event, base, well, li))
                    if data is not None:
                        layers.append(np.asarray(Image.open(io.BytesIO(data))))
                if layers:
                    composite, _ = edof_compose(
                        FocusStack(well, event.event_seq, layers),
                        window_radius=window_radius)
                    pixels = composite

        if pixels is not None and size is None:
            size = (pixels.shape[1], pixels.shape[0])
        is_missing = pixels is None
        if is_missing:
            pixels = _placeholder(size or (640, 480),
                                  f"missing {well} event {event.event_seq}")
        name = f"frame_{event.event_seq:06d}.png"
        _write_png_atomic(out / name, pixels)
        frames.append({"file": name, "event_seq": event.event_seq,
                       "timestamp": event.timestamp, "missing": is_missing})

    index = {"well": well, "mode": mode, "layer": layer if mode == "layer" else None,
             "frames": frames}
    tmp = out / "index.json.tmp"
    tmp.write_text(json.dumps(index, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, out / "index.json")
    return index

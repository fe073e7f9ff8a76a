"""Experiment configuration: schema, defaults, validation, live patching.

`validate_config` is total: any parsed document either yields a fully
populated ExperimentConfig or a ConfigValidationError carrying every
violation found, never a stray exception. Camera parameters are an ordered
list of opaque string pairs handed through to the capture tool unread.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from .wells import WellId, ALL_WELLS


class LightMode(str, Enum):
    OVER_PLATE = "OverPlate"
    UNDER_PLATE = "UnderPlate"


class CaptureMode(str, Enum):
    ZSTACK = "ZStack"
    VIDEO_BURST = "VideoBurst"


CONFIG_DEFAULTS = {
    "light": LightMode.UNDER_PLATE.value,
    "capture_interval_s": 900.0,
    "camera_params": [],
    "mode": CaptureMode.ZSTACK.value,
}

_ID_RE = re.compile(r"^[A-Za-z0-9._~-]+$")

_KNOWN_FIELDS = {
    "experiment_id", "layers", "layer_step_um", "initial_offset_um",
    "light", "camera_params", "capture_interval_s", "mode",
    "video_duration_s", "enabled_wells",
}
_REQUIRED_FIELDS = (
    "experiment_id", "layers", "layer_step_um", "initial_offset_um",
    "enabled_wells",
)


@dataclass
class ConfigError:
    code: str      # MissingField | OutOfRange | UnknownWell | ModeMismatch | ImmutableField | UnknownField
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}({self.field}): {self.message}"


class ConfigValidationError(Exception):
    def __init__(self, errors: list[ConfigError]):
        self.errors = errors
        super().__init__("; ".join(str(e) for e in errors))

    def codes(self) -> set[str]:
        return {e.code for e in self.errors}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: str
    layers: int
    layer_step_um: float
    initial_offset_um: float
    enabled_wells: frozenset[WellId]
    light: LightMode = LightMode.UNDER_PLATE
    camera_params: tuple[tuple[str, str], ...] = ()
    capture_interval_s: float = 900.0
    mode: CaptureMode = CaptureMode.ZSTACK
    video_duration_s: Optional[float] = None

    def to_raw(self) -> dict[str, Any]:
        raw: dict[str, Any] = {
            "experiment_id": self.experiment_id,
            "layers": self.layers,
            "layer_step_um": self.layer_step_um,
            "initial_offset_um": self.initial_offset_um,
            "light": self.light.value,
            "camera_params": [list(kv) for kv in self.camera_params],
            "capture_interval_s": self.capture_interval_s,
            "mode": self.mode.value,
            "enabled_wells": [str(w) for w in sorted(self.enabled_wells)],
        }
        if self.video_duration_s is not None:
            raw["video_duration_s"] = self.video_duration_s
        return raw

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_raw(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _parse_camera_params(value: Any, errors: list[ConfigError]) -> tuple[tuple[str, str], ...]:
    if isinstance(value, dict):
        items = list(value.items())
    elif isinstance(value, (list, tuple)):
        items = []
        for entry in value:
            if (isinstance(entry, (list, tuple)) and len(entry) == 2):
                items.append((entry[0], entry[1]))
            else:
                errors.append(ConfigError(
                    "OutOfRange", "camera_params",
                    f"expected [key, value] pair, got {entry!r}"))
                return ()
    else:
        errors.append(ConfigError(
            "OutOfRange", "camera_params",
            f"expected list of pairs or mapping, got {type(value).__name__}"))
        return ()
    out = []
    for k, v in items:
        if not isinstance(k, str) or not isinstance(v, str):
            errors.append(ConfigError(
                "OutOfRange", "camera_params",
                f"keys and values must be strings, got ({k!r}, {v!r})"))
            return ()
        out.append((k, v))
    return tuple(out)


def _parse_wells(value: Any, errors: list[ConfigError]) -> frozenset[WellId]:
    if value == "all":
        return frozenset(ALL_WELLS)
    if not isinstance(value, (list, tuple, set, frozenset)):
        errors.append(ConfigError(
            "OutOfRange", "enabled_wells",
            f"expected a list of wells, got {type(value).__name__}"))
        return frozenset()
    wells = set()
    for item in value:
        try:
            wells.add(item if isinstance(item, WellId) else WellId.parse(str(item)))
        except ValueError:
            errors.append(ConfigError("UnknownWell", "enabled_wells",
                                      f"not a well on this plate: {item!r}"))
    if not errors and not wells:
        errors.append(ConfigError("OutOfRange", "enabled_wells",
                                  "at least one well must be enabled"))
    return frozenset(wells)


def validate_config(raw: Any) -> ExperimentConfig:
    """Apply defaults and return a config, or raise with every violation."""
    errors: list[ConfigError] = []
    if not isinstance(raw, dict):
        raise ConfigValidationError([ConfigError(
            "OutOfRange", "", f"expected a mapping, got {type(raw).__name__}")])

    for key in raw:
        if key not in _KNOWN_FIELDS:
            errors.append(ConfigError("UnknownField", str(key),
                                      "not a recognized parameter"))

    doc = {**CONFIG_DEFAULTS, **{k: v for k, v in raw.items() if k in _KNOWN_FIELDS}}

    for name in _REQUIRED_FIELDS:
        if name not in doc:
            errors.append(ConfigError("MissingField", name, "required"))

    exp_id = doc.get("experiment_id")
    if exp_id is not None and (not isinstance(exp_id, str) or not _ID_RE.match(exp_id)):
        errors.append(ConfigError(
            "OutOfRange", "experiment_id",
            "must be a nonempty URL-safe string (letters, digits, . _ ~ -)"))

    layers = doc.get("layers")
    if layers is not None and (not _is_int(layers) or layers < 1):
        errors.append(ConfigError("OutOfRange", "layers",
                                  f"must be an integer >= 1, got {layers!r}"))

    step = doc.get("layer_step_um")
    if step is not None and (not _is_number(step) or step <= 0):
        errors.append(ConfigError("OutOfRange", "layer_step_um",
                                  f"must be > 0, got {step!r}"))

    offset = doc.get("initial_offset_um")
    if offset is not None and (not _is_number(offset) or offset < 0):
        errors.append(ConfigError("OutOfRange", "initial_offset_um",
                                  f"must be >= 0, got {offset!r}"))

    interval = doc.get("capture_interval_s")
    if not _is_number(interval) or interval <= 0:
        errors.append(ConfigError("OutOfRange", "capture_interval_s",
                                  f"must be > 0, got {interval!r}"))

    try:
        light = LightMode(doc.get("light"))
    except ValueError:
        errors.append(ConfigError(
            "OutOfRange", "light",
            f"must be one of {[m.value for m in LightMode]}, got {doc.get('light')!r}"))
        light = LightMode.UNDER_PLATE

    mode_raw = doc.get("mode")
    mode: Optional[CaptureMode]
    try:
        mode = CaptureMode(mode_raw)
    except ValueError:
        errors.append(ConfigError(
            "OutOfRange", "mode",
            f"must be one of {[m.value for m in CaptureMode]}, got {mode_raw!r}"))
        mode = None

    duration = doc.get("video_duration_s")
    if mode is CaptureMode.VIDEO_BURST:
        if duration is None:
            errors.append(ConfigError("MissingField", "video_duration_s",
                                      "required for VideoBurst mode"))
        elif not _is_number(duration) or duration <= 0:
            errors.append(ConfigError("OutOfRange", "video_duration_s",
                                      f"must be > 0, got {duration!r}"))
    elif mode is CaptureMode.ZSTACK and duration is not None:
        errors.append(ConfigError("ModeMismatch", "video_duration_s",
                                  "only valid in VideoBurst mode"))

    params = _parse_camera_params(doc.get("camera_params"), errors)
    wells = (_parse_wells(doc["enabled_wells"], errors)
             if "enabled_wells" in doc else frozenset())

    if errors:
        raise ConfigValidationError(errors)

    return ExperimentConfig(
        experiment_id=exp_id,
        layers=layers,
        layer_step_um=float(step),
        initial_offset_um=float(offset),
        enabled_wells=wells,
        light=light,
        camera_params=params,
        capture_interval_s=float(interval),
        mode=mode,
        video_duration_s=float(duration) if duration is not None else None,
    )


def apply_update(current: ExperimentConfig, patch: Any) -> ExperimentConfig:
    """Overlay a partial document on a valid config and re-validate.

    The experiment id is fixed for the lifetime of an experiment; a patch
    naming it fails with ImmutableField even if the value is unchanged.
    """
    errors: list[ConfigError] = []
    if not isinstance(patch, dict):
        raise ConfigValidationError([ConfigError(
            "OutOfRange", "", f"patch must be a mapping, got {type(patch).__name__}")])
    if "experiment_id" in patch:
        errors.append(ConfigError("ImmutableField", "experiment_id",
                                  "cannot be changed after start"))
    for key in patch:
        if key not in _KNOWN_FIELDS:
            errors.append(ConfigError("UnknownField", str(key),
                                      "not a recognized parameter"))

    merged = current.to_raw()
    # switching back to ZStack drops a stale video duration unless re-patched
    if patch.get("mode") == CaptureMode.ZSTACK.value:
        merged.pop("video_duration_s", None)
    for key, value in patch.items():
        if key in _KNOWN_FIELDS and key != "experiment_id":
            merged[key] = value

    try:
        updated = validate_config(merged)
    except ConfigValidationError as exc:
        raise ConfigValidationError(errors + exc.errors) from None
    if errors:
        raise ConfigValidationError(errors)
    return updated

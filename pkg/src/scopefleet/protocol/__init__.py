from .wells import WellId, ALL_WELLS, LAYOUT_ROWS, LAYOUT_COLS
from .config import (
    ExperimentConfig, ConfigError, ConfigValidationError,
    validate_config, apply_update, CONFIG_DEFAULTS,
)
from .messages import (
    Command, CommandKind, NodeMessage, NodeMessageKind, DeviceShadow, Status,
    LightMode, CaptureMode,
)
from .codec import (
    encode_message, decode_message, DecodeError, UnsupportedVersion,
    SCHEMA_VERSION,
)
from .topics import (
    cloud_cmd_topic, cloud_shadow_topic, well_cmd_topic, well_evt_topic,
    PERIPH_CMD_TOPIC, PERIPH_EVT_TOPIC,
)

__all__ = [
    "WellId", "ALL_WELLS", "LAYOUT_ROWS", "LAYOUT_COLS",
    "ExperimentConfig", "ConfigError", "ConfigValidationError",
    "validate_config", "apply_update", "CONFIG_DEFAULTS",
    "Command", "CommandKind", "NodeMessage", "NodeMessageKind",
    "DeviceShadow", "Status", "LightMode", "CaptureMode",
    "encode_message", "decode_message", "DecodeError", "UnsupportedVersion",
    "SCHEMA_VERSION",
    "cloud_cmd_topic", "cloud_shadow_topic", "well_cmd_topic",
    "well_evt_topic", "PERIPH_CMD_TOPIC", "PERIPH_EVT_TOPIC",
]

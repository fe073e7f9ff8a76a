from .scene import SceneObject, SyntheticScene, make_random_scene
from .render import (
    render_layer, disk_kernel, encode_png, decode_png, png_metadata,
    DEFAULT_BLUR_PX_PER_UM, DEFAULT_IMAGE_SIZE,
)
from .node import CameraNode, NodeConfig, LocalImage, TransferSession
from .faults import FaultScript

__all__ = [
    "SceneObject", "SyntheticScene", "make_random_scene",
    "render_layer", "disk_kernel", "encode_png", "decode_png", "png_metadata",
    "DEFAULT_BLUR_PX_PER_UM", "DEFAULT_IMAGE_SIZE",
    "CameraNode", "NodeConfig", "LocalImage", "TransferSession",
    "FaultScript",
]

"""Rendering: textured disks through a disk-blur defocus model.

Defocus is a disk (pillbox) convolution whose radius grows linearly with
distance from the focal plane:

    blur_radius_px = blur_px_per_um * |object_depth - focal_depth|

so an object rendered at its own depth is pixel-sharp, and sharpness decays
monotonically as the focal plane walks away. Rendering is fully
deterministic: texture comes from each object's seeded generator and motion
quantizes to whole pixels.
"""

from __future__ import annotations

import io
import json

import numpy as np
from PIL import Image, PngImagePlugin
from scipy.signal import fftconvolve

from .scene import SyntheticScene

DEFAULT_IMAGE_SIZE = (640, 480)
DEFAULT_BLUR_PX_PER_UM = 0.02

_TEXTURE_CONTRAST = 110   # object brightness offset over background
_TEXTURE_AMPLITUDE = 70   # +- noise range inside an object


def disk_kernel(radius_px: float) -> np.ndarray:
    """Normalized pillbox with a 1 px antialiased rim; radius < 0.5 is identity."""
    if radius_px < 0.5:
        return np.ones((1, 1))
    r = int(np.ceil(radius_px))
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
    dist = np.sqrt(xx * xx + yy * yy)
    kernel = np.clip(radius_px + 0.5 - dist, 0.0, 1.0)
    return kernel / kernel.sum()


def _object_patch(obj, blur_radius_px: float, background: float) -> tuple[np.ndarray, int]:
    """Textured disk over background, blurred; returns (patch, patch_radius)."""
    pad = int(np.ceil(blur_radius_px)) + 1
    pr = obj.radius + pad
    side = 2 * pr + 1
    yy, xx = np.mgrid[-pr:pr + 1, -pr:pr + 1]
    inside = (xx * xx + yy * yy) <= obj.radius * obj.radius

    rng = np.random.default_rng(obj.texture_seed)
    texture = rng.uniform(-_TEXTURE_AMPLITUDE, _TEXTURE_AMPLITUDE, (side, side))
    patch = np.full((side, side), background, dtype=np.float64)
    patch[inside] = background + _TEXTURE_CONTRAST + texture[inside]

    if blur_radius_px >= 0.5:
        patch = fftconvolve(patch - background, disk_kernel(blur_radius_px),
                            mode="same") + background
    return patch, pr


def render_layer(scene: SyntheticScene, focal_depth_um: float,
                 at_time_s: float = 0.0,
                 size: tuple[int, int] = DEFAULT_IMAGE_SIZE,
                 blur_px_per_um: float = DEFAULT_BLUR_PX_PER_UM) -> np.ndarray:
    """8-bit grayscale view of the scene with the focal plane at focal_depth_um."""
    w, h = size
    img = np.full((h, w), float(scene.background_intensity))
    for obj in scene.objects:
        cx, cy = obj.center_at(at_time_s)
        blur_radius = blur_px_per_um * abs(obj.depth_um - focal_depth_um)
        patch, pr = _object_patch(obj, blur_radius, scene.background_intensity)
        # clip patch to the frame
        x0, x1 = cx - pr, cx + pr + 1
        y0, y1 = cy - pr, cy + pr + 1
        sx0, sy0 = max(0, -x0), max(0, -y0)
        x0, y0 = max(0, x0), max(0, y0)
        x1, y1 = min(w, x1), min(h, y1)
        if x1 <= x0 or y1 <= y0:
            continue
        img[y0:y1, x0:x1] = patch[sy0:sy0 + (y1 - y0), sx0:sx0 + (x1 - x0)]
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


# -- PNG with capture metadata -------------------------------------------------

def encode_png(pixels: np.ndarray, metadata: dict | None = None) -> bytes:
    info = PngImagePlugin.PngInfo()
    if metadata:
        info.add_text("capture", json.dumps(metadata, sort_keys=True))
    buf = io.BytesIO()
    Image.fromarray(pixels).save(buf, format="PNG", pnginfo=info)
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    return np.asarray(Image.open(io.BytesIO(data)))


def png_metadata(data: bytes) -> dict:
    text = Image.open(io.BytesIO(data)).text.get("capture")
    return json.loads(text) if text else {}

"""Synthetic specimens: textured disks at known depths.

Each object sits at a fixed depth in the z-travel range and carries a seeded
noise texture, so a stack rendered through the defocus model has an exact
per-pixel ground truth: the layer focused nearest an object's depth is the
sharpest view of it. Velocities let scenes drift between captures to
reproduce motion ghosting in stacked composites.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SceneObject:
    center: tuple[float, float]       # (x, y) pixels
    radius: int                       # pixels
    depth_um: float
    texture_seed: int
    velocity: tuple[float, float] = (0.0, 0.0)   # (px/s, px/s)

    def center_at(self, t_s: float) -> tuple[int, int]:
        # positions quantize to the pixel grid at render time
        return (int(round(self.center[0] + self.velocity[0] * t_s)),
                int(round(self.center[1] + self.velocity[1] * t_s)))


@dataclass(frozen=True)
class SyntheticScene:
    well: str
    objects: tuple[SceneObject, ...]
    background_intensity: int = 32
    depth_range_um: tuple[float, float] = (0.0, 1000.0)

    def __post_init__(self):
        for obj in self.objects:
            lo, hi = self.depth_range_um
            if not (lo <= obj.depth_um <= hi):
                raise ValueError(
                    f"object depth {obj.depth_um} outside travel range {self.depth_range_um}")


def make_random_scene(seed: int, well: str = "A1",
                      size: tuple[int, int] = (640, 480),
                      n_objects: int = 3,
                      depth_range_um: tuple[float, float] = (0.0, 900.0),
                      radius_range: tuple[int, int] = (18, 36),
                      margin_px: int = 48,
                      non_overlapping: bool = True,
                      moving: bool = False,
                      depth_grid: tuple[float, int, float] | None = None) -> SyntheticScene:
    """Deterministic scene from a seed; one camera's specimen.

    depth_grid=(step_um, n_layers, jitter_um) places objects near focal
    planes instead of uniformly: an object equidistant from two planes has
    no recoverable nearest layer, so ground-truth stacks keep a guard band
    away from the midpoints.
    """
    rng = np.random.default_rng(seed)
    w, h = size
    objects: list[SceneObject] = []
    attempts = 0
    while len(objects) < n_objects and attempts < 500:
        attempts += 1
        radius = int(rng.integers(radius_range[0], radius_range[1] + 1))
        margin = radius + margin_px
        if w - margin <= margin or h - margin <= margin:
            break
        cx = float(rng.uniform(margin, w - margin))
        cy = float(rng.uniform(margin, h - margin))
        if non_overlapping and any(
                (cx - o.center[0]) ** 2 + (cy - o.center[1]) ** 2
                < (radius + o.radius + margin_px) ** 2 for o in objects):
            continue
        if depth_grid is not None:
            step, n_layers, jitter = depth_grid
            plane = step * int(rng.integers(0, n_layers))
            depth = float(max(0.0, plane + rng.uniform(-jitter, jitter)))
        else:
            depth = float(rng.uniform(*depth_range_um))
        velocity = (float(rng.uniform(-8, 8)), float(rng.uniform(-8, 8))) if moving else (0.0, 0.0)
        objects.append(SceneObject(
            center=(cx, cy), radius=radius, depth_um=depth,
            texture_seed=int(rng.integers(0, 2**31)), velocity=velocity))
    return SyntheticScene(well=well, objects=tuple(objects),
                          depth_range_um=(min(depth_range_um[0], 0.0),
                                          max(depth_range_um[1], 1000.0)))

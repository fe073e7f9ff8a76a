"""Focus measurement and per-pixel focal-plane stacking.

The focus measure is the local variance of the discrete Laplacian over a
(2r+1)^2 window with reflect padding: high where fine structure is sharp,
zero on flat regions, and it falls off monotonically under defocus blur.

Composites pick, per pixel, the layer with the highest focus score (ties to
the lower index). The raw argmax map is cleaned with a radius-2 majority
filter before lookup to suppress single-pixel speckle; a single-layer stack
passes through unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve, uniform_filter

_LAPLACIAN = np.array([[0.0, 1.0, 0.0],
                       [1.0, -4.0, 1.0],
                       [0.0, 1.0, 0.0]])

_LUMA = np.array([0.299, 0.587, 0.114])


class WindowLargerThanImage(Exception):
    pass


class EmptyStack(Exception):
    pass


@dataclass
class FocusStack:
    """Co-registered layers for one well at one capture event.

    layers[0] is the closest focal plane; order matches capture order.
    """
    well: str
    event_seq: int
    layers: list[np.ndarray]
    step_um: float = 100.0

    def __post_init__(self):
        if not self.layers:
            raise EmptyStack(f"{self.well}/{self.event_seq}")
        shapes = {layer.shape[:2] for layer in self.layers}
        if len(shapes) != 1:
            raise ValueError(f"layer dimensions differ: {shapes}")


@dataclass
class FocusMap:
    index: np.ndarray   # per-pixel chosen layer, int
    score: np.ndarray   # focus score of the chosen layer


def _to_gray(image: np.ndarray) -> np.ndarray:
    if image.ndim == 3:
        return image[..., :3].astype(np.float64) @ _LUMA
    return image.astype(np.float64)


def focus_measure(image: np.ndarray, window_radius: int = 4) -> np.ndarray:
    """Per-pixel sharpness: local variance of the Laplacian, reflect borders."""
    gray = _to_gray(image)
    size = 2 * window_radius + 1
    if size > min(gray.shape):
        raise WindowLargerThanImage(f"window {size} exceeds image {gray.shape}")
    lap = convolve(gray, _LAPLACIAN, mode="reflect")
    mean = uniform_filter(lap, size=size, mode="reflect")
    mean_sq = uniform_filter(lap * lap, size=size, mode="reflect")
    return np.maximum(mean_sq - mean * mean, 0.0)


def _majority_filter(index: np.ndarray, n_layers: int, radius: int = 2) -> np.ndarray:
    """Modal smoothing by per-layer box votes; ties go to the lower index."""
    if n_layers == 1:
        return index
    size = 2 * radius + 1
    votes = np.empty((n_layers,) + index.shape)
    for layer in range(n_layers):
        votes[layer] = uniform_filter((index == layer).astype(np.float64),
                                      size=size, mode="reflect")
    return np.argmax(votes, axis=0)


def edof_compose(stack: FocusStack, window_radius: int = 4,
                 smooth_radius: int = 2) -> tuple[np.ndarray, FocusMap]:
    """Best-focus composite plus the per-pixel layer choice that built it."""
    layers = stack.layers
    if len(layers) == 1:
        only = layers[0]
        return only.copy(), FocusMap(
            index=np.zeros(only.shape[:2], dtype=np.intp),
            score=focus_measure(only, window_radius))

    scores = np.stack([focus_measure(layer, window_radius) for layer in layers])
    raw_index = np.argmax(scores, axis=0)   # first max wins: lower index
    index = _majority_filter(raw_index, len(layers), smooth_radius)

    rows, cols = np.indices(index.shape)
    pixels = np.stack([np.asarray(l, dtype=np.float64) for l in layers])
    composite = pixels[index, rows, cols]
    chosen_score = scores[index, rows, cols]
    return (composite.astype(layers[0].dtype),
            FocusMap(index=index.astype(np.intp), score=chosen_score))

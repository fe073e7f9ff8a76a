from .focus import (
    focus_measure, edof_compose, FocusMap, FocusStack,
    EmptyStack, WindowLargerThanImage,
)
from .timelapse import build_timelapse, TimelapseError

__all__ = [
    "focus_measure", "edof_compose", "FocusMap", "FocusStack",
    "EmptyStack", "WindowLargerThanImage",
    "build_timelapse", "TimelapseError",
]

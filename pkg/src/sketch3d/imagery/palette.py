"""
Fixed Class Palette
Class i of C maps to hue i*360/C at full saturation and value
"""

import colorsys

import numpy as np

from .types import SegMask


def class_color(index: int, num_classes: int) -> np.ndarray:
    """RGB color of one class, components in [0, 1]"""
    return np.array(colorsys.hsv_to_rgb(index / num_classes, 1.0, 1.0), dtype=np.float64)


def palette(num_classes: int) -> np.ndarray:
    """(num_classes, 3) lookup table"""
    return np.stack([class_color(i, num_classes) for i in range(num_classes)])


def colorize_mask(mask: SegMask) -> np.ndarray:
    """Render a label map as an (height, width, 3) RGB image for viewing"""
    return palette(mask.num_classes)[mask.labels]


__all__ = ["class_color", "palette", "colorize_mask"]

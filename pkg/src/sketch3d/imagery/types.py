"""
Raster and Tensor Value Types
Immutable containers shared by every Sketch3D module
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..errors import ConfigError


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Sketch:
    """Grayscale line drawing, values in [0, 1], stored as a (height, width) array"""

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.float64)
        if pixels.ndim != 2 or pixels.size == 0:
            raise ConfigError(f"Sketch needs a non-empty 2D array, got shape {pixels.shape}")
        if np.isnan(pixels).any():
            raise ValueError(f"Sketch contains NaN at pixel {int(np.flatnonzero(np.isnan(pixels))[0])}")
        if pixels.min() < 0.0 or pixels.max() > 1.0:
            raise ValueError("Sketch values must lie in [0, 1]")
        object.__setattr__(self, "pixels", _frozen(pixels))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def data(self) -> np.ndarray:
        """Row-major flat view"""
        return self.pixels.ravel()

    @classmethod
    def from_flat(cls, width: int, height: int, data) -> "Sketch":
        data = np.asarray(data, dtype=np.float64)
        if data.size != width * height:
            raise ConfigError(f"Expected {width * height} values, got {data.size}")
        return cls(data.reshape(height, width))

    def __eq__(self, other):
        return isinstance(other, Sketch) and np.array_equal(self.pixels, other.pixels)

    __hash__ = None


@dataclass(frozen=True)
class SegMask:
    """Integer label map with num_classes classes, stored as a (height, width) array"""

    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or labels.size == 0:
            raise ConfigError(f"SegMask needs a non-empty 2D array, got shape {labels.shape}")
        if self.num_classes < 2:
            raise ConfigError(f"SegMask needs at least 2 classes, got {self.num_classes}")
        labels = labels.astype(np.int64)
        bad = np.flatnonzero((labels < 0) | (labels >= self.num_classes))
        if bad.size:
            raise ValueError(
                f"Label {int(labels.ravel()[bad[0]])} out of range [0, {self.num_classes}) "
                f"at pixel {int(bad[0])}"
            )
        object.__setattr__(self, "labels", _frozen(labels))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.labels.shape

    def histogram(self) -> np.ndarray:
        """Pixel count per class"""
        return np.bincount(self.labels.ravel(), minlength=self.num_classes)

    def __eq__(self, other):
        return (
            isinstance(other, SegMask)
            and self.num_classes == other.num_classes
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None


@dataclass(frozen=True)
class OneHotMask:
    """One-hot lift of a SegMask, data indexed (pixel, class)"""

    data: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.uint8)
        if data.ndim != 2 or data.shape[0] != self.width * self.height:
            raise ConfigError(f"OneHotMask data shape {data.shape} does not match {self.width}x{self.height}")
        if not np.all(data.sum(axis=1) == 1) or data.max() > 1:
            raise ValueError("OneHotMask rows must be exactly one-hot")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def num_classes(self) -> int:
        return self.data.shape[1]

    def argmax(self) -> SegMask:
        return SegMask(self.data.argmax(axis=1).reshape(self.height, self.width), self.num_classes)


@dataclass(frozen=True)
class ProbMap:
    """Per-pixel class probabilities, data indexed (pixel, class)"""

    data: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] != self.width * self.height:
            raise ConfigError(f"ProbMap data shape {data.shape} does not match {self.width}x{self.height}")
        if np.isnan(data).any() or data.min() < 0.0 or data.max() > 1.0:
            raise ValueError("ProbMap values must lie in [0, 1]")
        sums = data.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > 1e-6)
        if bad.size:
            raise ValueError(f"ProbMap row {int(bad[0])} sums to {sums[bad[0]]}, expected 1")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def num_classes(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class Tensor:
    """Real-valued n-dimensional array; 64-bit in memory"""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 0 or min(values.shape) < 1:
            raise ConfigError(f"Tensor shape entries must be >= 1, got {values.shape}")
        object.__setattr__(self, "values", _frozen(values))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def data(self) -> np.ndarray:
        return self.values.ravel()

    @classmethod
    def from_flat(cls, shape, data) -> "Tensor":
        data = np.asarray(data, dtype=np.float64)
        if data.size != int(np.prod(shape)):
            raise ConfigError(f"Tensor data length {data.size} does not match shape {tuple(shape)}")
        return cls(data.reshape(tuple(shape)))

    def __eq__(self, other):
        return isinstance(other, Tensor) and self.shape == other.shape and np.array_equal(self.values, other.values)

    __hash__ = None


def one_hot(mask: SegMask) -> OneHotMask:
    """Lift a label map to its one-hot (pixel, class) form"""
    flat = mask.labels.ravel()
    data = np.zeros((flat.size, mask.num_classes), dtype=np.uint8)
    data[np.arange(flat.size), flat] = 1
    return OneHotMask(data, mask.width, mask.height)


__all__ = ["Sketch", "SegMask", "OneHotMask", "ProbMap", "Tensor", "one_hot"]

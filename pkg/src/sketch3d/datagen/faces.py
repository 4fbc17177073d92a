"""
Procedural Face Generator
Paired (sketch, mask) samples from randomly drawn face layouts, no external dataset needed
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..errors import ConfigError
from ..imagery.types import SegMask, Sketch
from .rng import SplitMix64

logger = logging.getLogger(__name__)

BACKGROUND, SKIN, HAIR, EYE, MOUTH, NECK = range(6)
NUM_CLASSES = 6

# Uniform parameter ranges, in normalized image units unless noted
FACE_RADIUS_RANGE = (0.25, 0.40)
EYE_RADIUS_RANGE = (0.03, 0.07)
MOUTH_RADIUS_RANGE = (0.04, 0.10)
HAIR_COVERAGE_RANGE = (60.0, 300.0)  # degrees
HAIR_THICKNESS_RANGE = (0.08, 0.20)  # fraction of face radius
FACE_ROTATION_RANGE = (-10.0, 10.0)  # degrees
HAIR_INNER_RADIUS = 0.85
NECK_HALF_WIDTH = 0.45  # fraction of face rx


@dataclass(frozen=True)
class Ellipse:
    """Rotated ellipse in normalized image coordinates (u right, v down)"""

    cx: float
    cy: float
    rx: float
    ry: float
    angle_deg: float = 0.0

    def local(self, u, v) -> Tuple[np.ndarray, np.ndarray]:
        """Coordinates in the ellipse frame, unrotated but not rescaled"""
        a = math.radians(self.angle_deg)
        du = np.asarray(u, dtype=np.float64) - self.cx
        dv = np.asarray(v, dtype=np.float64) - self.cy
        return du * math.cos(a) + dv * math.sin(a), -du * math.sin(a) + dv * math.cos(a)

    def radius(self, u, v) -> np.ndarray:
        """Normalized radius: < 1 inside, 1 on the boundary"""
        x, y = self.local(u, v)
        return np.sqrt((x / self.rx) ** 2 + (y / self.ry) ** 2)

    def contains(self, u, v) -> np.ndarray:
        return self.radius(u, v) <= 1.0

    def boundary(self, count: int = 64) -> Tuple[np.ndarray, np.ndarray]:
        t = np.linspace(0.0, 2.0 * math.pi, count, endpoint=False)
        x, y = self.rx * np.cos(t), self.ry * np.sin(t)
        a = math.radians(self.angle_deg)
        return (
            self.cx + x * math.cos(a) - y * math.sin(a),
            self.cy + x * math.sin(a) + y * math.cos(a),
        )


@dataclass(frozen=True)
class FaceSpec:
    """Layout of one synthetic face"""

    face: Ellipse
    left_eye: Ellipse
    right_eye: Ellipse
    mouth: Ellipse
    hair_thickness: float
    hair_coverage_deg: float
    seed: int

    def __post_init__(self):
        for name in ("face", "left_eye", "right_eye", "mouth"):
            part = getattr(self, name)
            if part.rx <= 0 or part.ry <= 0:
                raise ConfigError(f"{name} radii must be positive")
            if name != "face":
                u, v = part.boundary()
                if not np.all(self.face.contains(u, v)):
                    raise ConfigError(f"{name} ellipse is not inside the face ellipse")
        if not 0.0 <= self.hair_coverage_deg <= 360.0:
            raise ConfigError(f"hair coverage {self.hair_coverage_deg} outside [0, 360]")
        if self.hair_thickness < 0:
            raise ConfigError("hair thickness must be nonnegative")


def _feature(face: Ellipse, x: float, y: float, rx: float, ry: float) -> Ellipse:
    """Place a feature at face-local offset (x, y) sharing the face rotation"""
    a = math.radians(face.angle_deg)
    return Ellipse(
        cx=face.cx + x * math.cos(a) - y * math.sin(a),
        cy=face.cy + x * math.sin(a) + y * math.cos(a),
        rx=rx,
        ry=ry,
        angle_deg=face.angle_deg,
    )


def sample_spec(seed: int) -> FaceSpec:
    """
    Draw a face layout; a pure function of seed

    Args:
        seed: Unsigned 64-bit seed for the SplitMix64 stream

    Returns:
        FaceSpec satisfying all containment invariants
    """
    rng = SplitMix64(seed)
    face = Ellipse(
        cx=rng.uniform(0.47, 0.53),
        cy=rng.uniform(0.42, 0.48),
        rx=rng.uniform(*FACE_RADIUS_RANGE),
        ry=rng.uniform(*FACE_RADIUS_RANGE),
        angle_deg=rng.uniform(*FACE_ROTATION_RANGE),
    )

    eye_rx = rng.uniform(*EYE_RADIUS_RANGE)
    eye_ry = rng.uniform(EYE_RADIUS_RANGE[0], eye_rx)
    eye_x = rng.uniform(0.30, 0.45) * face.rx
    eye_y = -rng.uniform(0.10, 0.25) * face.ry

    mouth_rx = rng.uniform(*MOUTH_RADIUS_RANGE)
    mouth_ry = mouth_rx * rng.uniform(0.3, 0.6)
    mouth_y = rng.uniform(0.40, 0.55) * face.ry

    return FaceSpec(
        face=face,
        left_eye=_feature(face, -eye_x, eye_y, eye_rx, eye_ry),
        right_eye=_feature(face, eye_x, eye_y, eye_rx, eye_ry),
        mouth=_feature(face, 0.0, mouth_y, mouth_rx, mouth_ry),
        hair_thickness=rng.uniform(*HAIR_THICKNESS_RANGE),
        hair_coverage_deg=rng.uniform(*HAIR_COVERAGE_RANGE),
        seed=seed,
    )


def rasterize_mask(spec: FaceSpec, width: int, height: int) -> SegMask:
    """
    Rasterize a face layout at pixel centers

    Draw order (later overwrites earlier): background, neck, face, hair, eyes, mouth.
    """
    if width < 16 or height < 16:
        raise ConfigError(f"Mask size must be at least 16x16, got {width}x{height}")

    v, u = np.meshgrid(
        (np.arange(height) + 0.5) / height,
        (np.arange(width) + 0.5) / width,
        indexing="ij",
    )
    labels = np.full((height, width), BACKGROUND, dtype=np.int64)
    face = spec.face

    x, y = face.local(u, v)
    labels[(np.abs(x) <= NECK_HALF_WIDTH * face.rx) & (y >= 0.0)] = NECK
    labels[face.contains(u, v)] = SKIN

    r = face.radius(u, v)
    angle = np.degrees(np.arctan2(x, -y))
    hair = (
        (r >= HAIR_INNER_RADIUS)
        & (r <= 1.0 + spec.hair_thickness)
        & (np.abs(angle) < spec.hair_coverage_deg / 2.0)
    )
    labels[hair] = HAIR

    labels[spec.left_eye.contains(u, v) | spec.right_eye.contains(u, v)] = EYE
    labels[spec.mouth.contains(u, v)] = MOUTH
    return SegMask(labels, NUM_CLASSES)


def boundary_pixels(mask: SegMask) -> np.ndarray:
    """Pixels with at least one 4-neighbor of a different label"""
    labels = mask.labels
    edge = np.zeros(labels.shape, dtype=bool)
    horizontal = labels[:, 1:] != labels[:, :-1]
    vertical = labels[1:, :] != labels[:-1, :]
    edge[:, 1:] |= horizontal
    edge[:, :-1] |= horizontal
    edge[1:, :] |= vertical
    edge[:-1, :] |= vertical
    return edge


_JITTER_STEPS = ((0, 1), (0, -1), (1, 0), (-1, 0))


def mask_to_sketch(
    mask: SegMask,
    seed: int,
    dropout: float = 0.05,
    jitter: float = 0.1,
) -> Sketch:
    """
    Draw class boundaries as strokes with seeded perturbation

    Every boundary pixel, in row-major order, consumes four draws: dropout,
    jitter, jitter direction, intensity. Surviving pixels are drawn at
    intensity in [0.8, 1.0], moved one pixel when jittered (clamped to the
    image).
    """
    edge = boundary_pixels(mask)
    out = np.zeros(mask.shape, dtype=np.float64)
    rng = SplitMix64(seed)
    height, width = mask.shape

    for row, col in zip(*np.nonzero(edge)):
        drop_draw = rng.next_float()
        jitter_draw = rng.next_float()
        direction = rng.below(4)
        intensity = 0.8 + 0.2 * rng.next_float()
        if drop_draw < dropout:
            continue
        if jitter_draw < jitter:
            dr, dc = _JITTER_STEPS[direction]
            row = min(max(row + dr, 0), height - 1)
            col = min(max(col + dc, 0), width - 1)
        out[row, col] = max(out[row, col], intensity)

    return Sketch(out)


__all__ = [
    "BACKGROUND",
    "SKIN",
    "HAIR",
    "EYE",
    "MOUTH",
    "NECK",
    "NUM_CLASSES",
    "Ellipse",
    "FaceSpec",
    "sample_spec",
    "rasterize_mask",
    "boundary_pixels",
    "mask_to_sketch",
]

"""
Pinhole Camera and Ray Generation
Right-handed look-at frame, rays through pixel centers, orbit helpers
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..config.schema import RenderConfig
from ..errors import ConfigError

Vec3 = Tuple[float, float, float]


@dataclass(frozen=True)
class Camera:
    """Pinhole camera; fov_deg is the vertical field of view"""

    position: Vec3
    look_at: Vec3
    up: Vec3
    fov_deg: float
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigError(f"Camera image size must be positive, got {self.width}x{self.height}")
        if not 0.0 < self.fov_deg < 180.0:
            raise ConfigError(f"Field of view must lie in (0, 180), got {self.fov_deg}")
        if np.allclose(self.position, self.look_at):
            raise ConfigError("Camera position must differ from look_at")

    def frame(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(forward, right, true_up) unit vectors"""
        forward = np.subtract(self.look_at, self.position).astype(np.float64)
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, np.asarray(self.up, dtype=np.float64))
        norm = np.linalg.norm(right)
        if norm < 1e-9:
            raise ConfigError("Camera up vector is parallel to the view direction")
        right /= norm
        true_up = np.cross(right, forward)
        return forward, right, true_up


def make_rays(camera: Camera) -> Tuple[np.ndarray, np.ndarray]:
    """
    One ray per pixel center, row-major from the top-left pixel

    Returns:
        (origins, directions), each (height * width, 3); directions are unit length
    """
    forward, right, true_up = camera.frame()
    tan_half = math.tan(math.radians(camera.fov_deg) / 2.0)
    aspect = camera.width / camera.height

    cols = (np.arange(camera.width) + 0.5) / camera.width * 2.0 - 1.0
    rows = 1.0 - (np.arange(camera.height) + 0.5) / camera.height * 2.0
    y, x = np.meshgrid(rows, cols, indexing="ij")

    directions = (
        forward[None, None, :]
        + (x * tan_half * aspect)[..., None] * right[None, None, :]
        + (y * tan_half)[..., None] * true_up[None, None, :]
    ).reshape(-1, 3)
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    origins = np.broadcast_to(np.asarray(camera.position, dtype=np.float64), directions.shape).copy()
    return origins, directions


def orbit_camera(rcfg: RenderConfig, azimuth_deg: float, elevation_deg: float, size: int = None) -> Camera:
    """Camera on a sphere of radius camera_distance looking at the origin"""
    az = math.radians(azimuth_deg)
    el = math.radians(elevation_deg)
    d = rcfg.camera_distance
    size = size or rcfg.image_size
    return Camera(
        position=(d * math.cos(el) * math.sin(az), d * math.sin(el), d * math.cos(el) * math.cos(az)),
        look_at=(0.0, 0.0, 0.0),
        up=(0.0, 1.0, 0.0),
        fov_deg=rcfg.fov_deg,
        width=size,
        height=size,
    )


def frontal_camera(rcfg: RenderConfig, size: int = None) -> Camera:
    """Canonical frontal view along -z"""
    return orbit_camera(rcfg, 0.0, 0.0, size)


def orbit_cameras(rcfg: RenderConfig) -> List[Camera]:
    """orbit_frames views spread evenly over +-orbit_span_deg azimuth at fixed elevation"""
    if rcfg.orbit_frames == 1:
        azimuths = [0.0]
    else:
        azimuths = np.linspace(-rcfg.orbit_span_deg, rcfg.orbit_span_deg, rcfg.orbit_frames).tolist()
    return [orbit_camera(rcfg, az, rcfg.orbit_elevation_deg) for az in azimuths]


__all__ = ["Camera", "make_rays", "orbit_camera", "frontal_camera", "orbit_cameras"]

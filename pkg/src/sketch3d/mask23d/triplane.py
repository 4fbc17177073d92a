"""
Tri-Plane Representation
Style-modulated XY / XZ / YZ feature planes and bilinear lookup
"""

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

PLANE_AXES = ((0, 1), (0, 2), (1, 2))  # XY, XZ, YZ
PLANE_NAMES = ("xy", "xz", "yz")


@dataclass(frozen=True)
class TriPlane:
    """Three planes stacked as a (3, F, R, R) tensor; plane row index follows the second axis"""

    planes: torch.Tensor

    @property
    def resolution(self) -> int:
        return self.planes.shape[-1]

    @property
    def channels(self) -> int:
        return self.planes.shape[1]

    def numpy(self) -> np.ndarray:
        return self.planes.detach().numpy()


def sample_planes(planes: torch.Tensor, points: torch.Tensor) -> torch.Tensor:
    """
    Bilinear lookup of (P, 3) points in (3, F, R, R) planes, summed over planes

    Points are clamped to [-1, 1]^3. Coordinate -1 hits texel 0 and +1 hits
    texel R-1 (align_corners convention). Plane (a, b) reads axis a along
    columns and axis b along rows.
    """
    points = points.clamp(-1.0, 1.0)
    grids = torch.stack([points[:, [a, b]] for a, b in PLANE_AXES])[:, None]  # (3, 1, P, 2)
    sampled = F.grid_sample(planes, grids, mode="bilinear", padding_mode="border", align_corners=True)
    return sampled.sum(dim=0)[:, 0].transpose(0, 1)  # (P, F)


def sample_triplane(triplane: TriPlane, point) -> np.ndarray:
    """Feature vector (F,) at one 3D point: sum of the three bilinear plane samples"""
    p = torch.as_tensor(np.asarray(point, dtype=np.float64).reshape(1, 3))
    with torch.no_grad():
        return sample_planes(triplane.planes, p)[0].numpy()


class TriPlaneSynthesizer(nn.Module):
    """
    Learned base grids modulated channelwise by the style rows

    Row r of w drives plane r mod 3 through an affine map to (gamma, beta);
    plane = base * (1 + sum gamma) + sum beta over the rows assigned to it.
    """

    def __init__(self, style_rows: int, style_dim: int, channels: int, resolution: int):
        super().__init__()
        self.style_rows = style_rows
        self.channels = channels
        self.base = nn.Parameter(torch.zeros(3, channels, resolution, resolution))
        self.mod_weight = nn.Parameter(torch.zeros(style_rows, style_dim, 2 * channels))
        self.mod_bias = nn.Parameter(torch.zeros(style_rows, 2 * channels))

    def forward(self, w: torch.Tensor) -> torch.Tensor:
        """(L, D) style -> (3, F, R, R) planes"""
        modulation = torch.einsum("ld,ldk->lk", w, self.mod_weight) + self.mod_bias  # (L, 2F)
        gamma, beta = modulation[:, : self.channels], modulation[:, self.channels:]
        planes = []
        for p in range(3):
            rows = list(range(p, self.style_rows, 3))
            g = gamma[rows].sum(dim=0) if rows else torch.zeros_like(gamma[0])
            b = beta[rows].sum(dim=0) if rows else torch.zeros_like(beta[0])
            planes.append(self.base[p] * (1.0 + g)[:, None, None] + b[:, None, None])
        return torch.stack(planes)


__all__ = [
    "PLANE_AXES",
    "PLANE_NAMES",
    "TriPlane",
    "sample_planes",
    "sample_triplane",
    "TriPlaneSynthesizer",
]

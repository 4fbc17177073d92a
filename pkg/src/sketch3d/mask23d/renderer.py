"""
Volumetric Renderer
Emission-absorption quadrature over midpoint ray samples
"""

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple

import numpy as np
import torch

from ..config.schema import RenderConfig
from .field import FieldMLP
from .triplane import sample_planes


class Composite(NamedTuple):
    """Per-ray accumulations"""

    color: torch.Tensor       # (R, 3), composited over background
    semantic: torch.Tensor    # (R, C)
    feature: torch.Tensor     # (R, l)
    weight_sum: torch.Tensor  # (R,)
    weights: torch.Tensor     # (R, N)


@dataclass(frozen=True)
class RenderOutput:
    color: np.ndarray       # (H, W, 3)
    semantic: np.ndarray    # (H, W, C)
    feature: np.ndarray     # (H, W, l)
    weight_sum: np.ndarray  # (H, W)

    @property
    def height(self) -> int:
        return self.color.shape[0]

    @property
    def width(self) -> int:
        return self.color.shape[1]

    def semantic_with_background(self) -> np.ndarray:
        """Semantic image with the residual transmittance assigned to class 0"""
        out = self.semantic.copy()
        out[..., 0] += 1.0 - self.weight_sum
        return out


def sample_depths(rcfg: RenderConfig) -> Tuple[torch.Tensor, torch.Tensor]:
    """Midpoint depths t_i and spacings delta_i; every delta equals (far - near) / N"""
    n = rcfg.samples_per_ray
    step = (rcfg.far - rcfg.near) / n
    depths = rcfg.near + (torch.arange(n, dtype=torch.float64) + 0.5) * step
    return depths, torch.full((n,), step, dtype=torch.float64)


def transmittance_weights(density: torch.Tensor, deltas: torch.Tensor) -> torch.Tensor:
    """
    tau_i = T_i * (1 - exp(-sigma_i delta_i)) with T_i = exp(-sum_{j<i} sigma_j delta_j)

    density is (R, N); deltas broadcasts against it.
    """
    optical = density * deltas
    cumulative = torch.cumsum(optical, dim=-1)
    before = torch.cat([torch.zeros_like(cumulative[..., :1]), cumulative[..., :-1]], dim=-1)
    return torch.exp(-before) * -torch.expm1(-optical)


def composite(
    density: torch.Tensor,
    deltas: torch.Tensor,
    color: torch.Tensor,
    semantic: torch.Tensor,
    feature: torch.Tensor,
    background: Sequence[float],
) -> Composite:
    """Accumulate (R, N, k) sample attributes along each ray"""
    weights = transmittance_weights(density, deltas)
    weight_sum = weights.sum(dim=-1)
    bg = torch.as_tensor(background, dtype=color.dtype)
    accumulated = torch.einsum("rn,rnk->rk", weights, color) + (1.0 - weight_sum)[:, None] * bg
    return Composite(
        color=accumulated,
        semantic=torch.einsum("rn,rnk->rk", weights, semantic),
        feature=torch.einsum("rn,rnk->rk", weights, feature),
        weight_sum=weight_sum,
        weights=weights,
    )


def render_rays(
    planes: torch.Tensor,
    field: FieldMLP,
    origins: torch.Tensor,
    directions: torch.Tensor,
    rcfg: RenderConfig,
) -> Composite:
    """Sample, evaluate and composite a batch of (R, 3) rays; differentiable"""
    depths, deltas = sample_depths(rcfg)
    n_rays, n = origins.shape[0], depths.shape[0]
    points = origins[:, None, :] + depths[None, :, None] * directions[:, None, :]
    out = field(sample_planes(planes, points.reshape(-1, 3)))
    return composite(
        out.density.view(n_rays, n),
        deltas,
        out.color.view(n_rays, n, -1),
        out.semantic.view(n_rays, n, -1),
        out.feature.view(n_rays, n, -1),
        rcfg.background,
    )


__all__ = [
    "Composite",
    "RenderOutput",
    "sample_depths",
    "transmittance_weights",
    "composite",
    "render_rays",
]

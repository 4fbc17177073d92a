"""
Conditional Style Encoder
One-hot mask and latent code to an (L, D) style vector
"""

from dataclasses import dataclass
from typing import List

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..datagen.rng import SplitMix64
from ..errors import ConfigError

LEAKY_SLOPE = 0.2


@dataclass(frozen=True)
class LatentCode:
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(values)):
            raise ValueError("LatentCode must be finite")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.size

    @classmethod
    def zeros(cls, dim: int) -> "LatentCode":
        return cls(np.zeros(dim))

    @classmethod
    def sample(cls, dim: int, seed: int) -> "LatentCode":
        """Standard normal code drawn from the SplitMix64 stream of seed"""
        rng = SplitMix64(seed)
        return cls(np.array([rng.normal() for _ in range(dim)]))


@dataclass(frozen=True)
class StyleVector:
    """Style vector w+, shape (rows, dim)"""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ConfigError(f"StyleVector must be 2D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("StyleVector must be finite")
        object.__setattr__(self, "values", values)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape


class StyleEncoder(nn.Module):
    """
    Stride-2 3x3 convs over the one-hot mask, flattened and joined with z,
    then a linear map to rows * dim
    """

    def __init__(
        self,
        mask_size: int,
        num_classes: int,
        channels: List[int],
        latent_dim: int,
        style_rows: int,
        style_dim: int,
    ):
        super().__init__()
        self.style_rows = style_rows
        self.style_dim = style_dim
        self.convs = nn.ModuleList()
        in_channels = num_classes
        for width in channels:
            self.convs.append(nn.Conv2d(in_channels, width, 3, stride=2, padding=1))
            in_channels = width
        reduced = mask_size // 2 ** len(channels)
        self.head = nn.Linear(in_channels * reduced * reduced + latent_dim, style_rows * style_dim)

    def forward(self, onehot: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        """(B, C, S, S) one-hot and (B, latent) codes -> (B, L, D)"""
        h = onehot
        for conv in self.convs:
            h = F.leaky_relu(conv(h), LEAKY_SLOPE)
        w = self.head(torch.cat([h.flatten(1), z], dim=1))
        return w.view(-1, self.style_rows, self.style_dim)


__all__ = ["LatentCode", "StyleVector", "StyleEncoder"]

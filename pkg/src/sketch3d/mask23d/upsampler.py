"""Toy 2x upsampler for rendered color and feature images"""

import torch
import torch.nn as nn
import torch.nn.functional as F


class ToyUpsampler(nn.Module):
    """2x nearest enlargement, then one 3x3 conv from color+feature channels to RGB"""

    def __init__(self, feature_dim: int):
        super().__init__()
        self.conv = nn.Conv2d(3 + feature_dim, 3, 3, padding=1)

    def identity_init(self) -> None:
        """Center tap 1 on each color channel, zero elsewhere"""
        with torch.no_grad():
            self.conv.weight.zero_()
            self.conv.bias.zero_()
            for c in range(3):
                self.conv.weight[c, c, 1, 1] = 1.0

    def forward(self, color: torch.Tensor, feature: torch.Tensor) -> torch.Tensor:
        """(B, 3, H, W) and (B, l, H, W) -> (B, 3, 2H, 2W)"""
        x = F.interpolate(torch.cat([color, feature], dim=1), scale_factor=2, mode="nearest")
        return self.conv(x)


def enlarge_nearest(image: torch.Tensor) -> torch.Tensor:
    """(B, k, H, W) -> (B, k, 2H, 2W) by pixel replication"""
    return F.interpolate(image, scale_factor=2, mode="nearest")


__all__ = ["ToyUpsampler", "enlarge_nearest"]

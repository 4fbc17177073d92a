"""
Neural Field
Two-layer MLP turning tri-plane features into color, density, feature and semantics
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F


@dataclass(frozen=True)
class FieldSample:
    """Field output at one point"""

    color: np.ndarray     # (3,) in (0, 1)
    density: float        # >= 0, per unit length
    feature: np.ndarray   # (l,)
    semantic: np.ndarray  # (C,) probabilities


class FieldBatch(NamedTuple):
    """Field outputs for P points as tensors"""

    color: torch.Tensor     # (P, 3)
    density: torch.Tensor   # (P,)
    feature: torch.Tensor   # (P, l)
    semantic: torch.Tensor  # (P, C)


class FieldMLP(nn.Module):
    def __init__(self, in_features: int, hidden_dim: int, feature_dim: int, num_classes: int):
        super().__init__()
        self.feature_dim = feature_dim
        self.num_classes = num_classes
        self.hidden = nn.Linear(in_features, hidden_dim)
        self.out = nn.Linear(hidden_dim, 3 + 1 + feature_dim + num_classes)

    def forward(self, features: torch.Tensor) -> FieldBatch:
        raw = self.out(F.softplus(self.hidden(features)))
        l = self.feature_dim
        return FieldBatch(
            color=torch.sigmoid(raw[:, :3]),
            density=F.softplus(raw[:, 3]),
            feature=raw[:, 4:4 + l],
            semantic=torch.softmax(raw[:, 4 + l:], dim=-1),
        )


__all__ = ["FieldSample", "FieldBatch", "FieldMLP"]

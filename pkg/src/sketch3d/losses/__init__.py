"""
Training Losses
Style-vector, cross-entropy and Dice terms with analytic gradients
"""

from ..config.schema import LossConfig
from .autograd import CE_CLAMP, CrossEntropyFn, DiceFn, StyleVectorLossFn
from .objectives import (
    DEFAULT_LOSS_CONFIG,
    LossReport,
    cross_entropy_loss,
    cross_entropy_t,
    dice_loss,
    dice_t,
    style_vector_loss,
    style_vector_loss_t,
    total_loss,
)

__all__ = [
    "LossConfig",
    "CE_CLAMP",
    "CrossEntropyFn",
    "DiceFn",
    "StyleVectorLossFn",
    "DEFAULT_LOSS_CONFIG",
    "LossReport",
    "cross_entropy_loss",
    "cross_entropy_t",
    "dice_loss",
    "dice_t",
    "style_vector_loss",
    "style_vector_loss_t",
    "total_loss",
]

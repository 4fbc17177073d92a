"""
Training Objectives
Style-vector alignment, cross-entropy, soft Dice and their weighted sum
"""

from dataclasses import asdict, dataclass
from typing import Dict, Union

import numpy as np
import torch

from ..config.schema import LossConfig
from ..errors import ConfigError
from ..imagery.types import OneHotMask, ProbMap
from .autograd import CrossEntropyFn, DiceFn, StyleVectorLossFn

DEFAULT_LOSS_CONFIG = LossConfig()


@dataclass(frozen=True)
class LossReport:
    l_sv: float
    l_ce: float
    l_dice: float
    l_total: float

    def to_row(self, step: int) -> Dict[str, float]:
        """One training-log row"""
        return {"step": step, **asdict(self)}


def _values(x) -> np.ndarray:
    """Raw array behind StyleVector / BottleneckEmbedding or a plain array"""
    return np.asarray(getattr(x, "values", x), dtype=np.float64)


def _check_tables(y: OneHotMask, yhat: ProbMap) -> None:
    if (y.width, y.height, y.num_classes) != (yhat.width, yhat.height, yhat.num_classes):
        raise ConfigError(
            f"Mask {y.width}x{y.height}x{y.num_classes} does not match "
            f"probabilities {yhat.width}x{yhat.height}x{yhat.num_classes}"
        )


# Tensor-level losses on (n, C) tables, used by training

def style_vector_loss_t(w_plus: torch.Tensor, w_e: torch.Tensor) -> torch.Tensor:
    if w_plus.shape != w_e.shape:
        raise ConfigError(f"Style shapes differ: {tuple(w_plus.shape)} vs {tuple(w_e.shape)}")
    return StyleVectorLossFn.apply(w_plus, w_e)


def cross_entropy_t(y: torch.Tensor, yhat: torch.Tensor) -> torch.Tensor:
    if y.shape != yhat.shape:
        raise ConfigError(f"Table shapes differ: {tuple(y.shape)} vs {tuple(yhat.shape)}")
    return CrossEntropyFn.apply(y, yhat)


def dice_t(y: torch.Tensor, yhat: torch.Tensor, epsilon: float) -> torch.Tensor:
    if y.shape != yhat.shape:
        raise ConfigError(f"Table shapes differ: {tuple(y.shape)} vs {tuple(yhat.shape)}")
    return DiceFn.apply(y, yhat, epsilon)


# Value-level losses on the shared raster types

def style_vector_loss(w_plus, w_e) -> float:
    """Squared L2 distance between a style vector and a bottleneck embedding (no averaging)"""
    a, b = _values(w_plus), _values(w_e)
    if a.shape != b.shape:
        raise ConfigError(f"Style shapes differ: {a.shape} vs {b.shape}")
    return float(((a - b) ** 2).sum())


def cross_entropy_loss(y: OneHotMask, yhat: ProbMap) -> float:
    _check_tables(y, yhat)
    with torch.no_grad():
        return float(cross_entropy_t(torch.from_numpy(y.data.astype(np.float64)), torch.from_numpy(yhat.data.copy())))


def dice_loss(y: OneHotMask, yhat: ProbMap, epsilon: float = DEFAULT_LOSS_CONFIG.epsilon) -> float:
    if epsilon <= 0:
        raise ConfigError(f"Dice epsilon must be positive, got {epsilon}")
    _check_tables(y, yhat)
    with torch.no_grad():
        return float(dice_t(torch.from_numpy(y.data.astype(np.float64)), torch.from_numpy(yhat.data.copy()), epsilon))


def total_loss(
    l_sv: Union[float, torch.Tensor],
    l_ce: Union[float, torch.Tensor],
    l_dice: Union[float, torch.Tensor],
    cfg: LossConfig = DEFAULT_LOSS_CONFIG,
):
    """
    lambda_sv * l_sv + lambda_ce * l_ce + lambda_dice * l_dice

    Returns a LossReport for plain numbers; tensor inputs give a tensor so the
    sum stays differentiable.
    """
    total = cfg.lambda_sv * l_sv + cfg.lambda_ce * l_ce + cfg.lambda_dice * l_dice
    if any(isinstance(v, torch.Tensor) for v in (l_sv, l_ce, l_dice)):
        return total
    return LossReport(l_sv=float(l_sv), l_ce=float(l_ce), l_dice=float(l_dice), l_total=float(total))


__all__ = [
    "DEFAULT_LOSS_CONFIG",
    "LossReport",
    "style_vector_loss_t",
    "cross_entropy_t",
    "dice_t",
    "style_vector_loss",
    "cross_entropy_loss",
    "dice_loss",
    "total_loss",
]

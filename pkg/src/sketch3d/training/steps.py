"""
Loss Evaluation and Optimizer Steps
Forward pass against the frozen teacher, exact gradients, Adam updates
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
import torch

from ..config.schema import LossConfig, TrainConfig
from ..errors import ConfigError, NumericalError, StateError
from ..imagery.types import SegMask, Sketch
from ..losses.objectives import LossReport, cross_entropy_t, dice_t, style_vector_loss_t, total_loss
from ..mask23d.teacher import MaskTo3DTeacher, masks_to_onehot, style_targets
from ..sketch2mask.unet import DTYPE, SketchUNet, sketches_to_batch

logger = logging.getLogger(__name__)

# Named gradients, same keys as the U-Net parameters
Gradients = Dict[str, np.ndarray]
# Adam moments and step counter live inside the torch optimizer
OptimizerState = torch.optim.Adam

CrossEntropy = Callable[[torch.Tensor, torch.Tensor], torch.Tensor]


@dataclass(frozen=True)
class Batch:
    sketches: Tuple[Sketch, ...]
    masks: Tuple[SegMask, ...]

    def __post_init__(self):
        if len(self.sketches) != len(self.masks) or not self.sketches:
            raise ConfigError("A batch needs the same positive number of sketches and masks")

    def __len__(self) -> int:
        return len(self.sketches)

    @classmethod
    def of(cls, pairs: Sequence[Tuple[Sketch, SegMask]]) -> "Batch":
        return cls(tuple(s for s, _ in pairs), tuple(m for _, m in pairs))


def loss_terms(
    model: SketchUNet,
    targets: torch.Tensor,
    batch: Batch,
    loss_cfg: LossConfig,
    ce_fn: CrossEntropy = cross_entropy_t,
) -> Tuple[torch.Tensor, Dict[str, torch.Tensor]]:
    """
    Differentiable L_total and its terms, each averaged over batch members in order

    targets are the (B, L, D) style vectors of the batch masks.
    """
    num_classes = model.config.num_classes
    logits, embedding = model(sketches_to_batch(batch.sketches))
    probs = torch.softmax(logits, dim=1).permute(0, 2, 3, 1).reshape(len(batch), -1, num_classes)
    onehot = masks_to_onehot(batch.masks, num_classes).permute(0, 2, 3, 1).reshape(len(batch), -1, num_classes)

    zero = torch.zeros((), dtype=DTYPE)
    terms = {"l_sv": zero, "l_ce": zero, "l_dice": zero}
    for b in range(len(batch)):
        terms["l_sv"] = terms["l_sv"] + style_vector_loss_t(targets[b], embedding[b])
        terms["l_ce"] = terms["l_ce"] + ce_fn(onehot[b], probs[b])
        terms["l_dice"] = terms["l_dice"] + dice_t(onehot[b], probs[b], loss_cfg.epsilon)
    terms = {name: value / len(batch) for name, value in terms.items()}

    for name, value in terms.items():
        if not torch.isfinite(value):
            raise NumericalError(f"Loss term is not finite: {value.detach().item()}", where=name)
    return total_loss(terms["l_sv"], terms["l_ce"], terms["l_dice"], loss_cfg), terms


def _report(total: torch.Tensor, terms: Dict[str, torch.Tensor]) -> LossReport:
    return LossReport(
        l_sv=terms["l_sv"].detach().item(),
        l_ce=terms["l_ce"].detach().item(),
        l_dice=terms["l_dice"].detach().item(),
        l_total=total.detach().item(),
    )


def _require_frozen(teacher: MaskTo3DTeacher) -> None:
    if not teacher.frozen:
        raise StateError("The mask-to-3D teacher must be frozen before sketch-to-mask training")


def grad_total_loss(
    model: SketchUNet,
    teacher: MaskTo3DTeacher,
    batch: Batch,
    loss_cfg: LossConfig,
    ce_fn: CrossEntropy = cross_entropy_t,
) -> Tuple[LossReport, Gradients]:
    """
    L_total for a batch and its exact gradient for every U-Net parameter

    Style targets come from the frozen teacher with z = 0, so the teacher
    takes no part in the backward pass.
    """
    _require_frozen(teacher)
    targets = style_targets(teacher, batch.masks)
    model.zero_grad(set_to_none=False)
    total, terms = loss_terms(model, targets, batch, loss_cfg, ce_fn)
    total.backward()
    grads = {name: p.grad.detach().numpy().copy() for name, p in model.named_parameters()}
    return _report(total, terms), grads


def make_optimizer(model: SketchUNet, train_cfg: TrainConfig) -> OptimizerState:
    return torch.optim.Adam(
        model.parameters(),
        lr=train_cfg.learning_rate,
        betas=(train_cfg.beta1, train_cfg.beta2),
        eps=train_cfg.stabilizer,
    )


def train_step(
    model: SketchUNet,
    optimizer: OptimizerState,
    teacher: MaskTo3DTeacher,
    batch: Batch,
    loss_cfg: LossConfig,
) -> LossReport:
    """One bias-corrected adaptive-moment update in place; returns the pre-update losses"""
    _require_frozen(teacher)
    targets = style_targets(teacher, batch.masks)
    optimizer.zero_grad(set_to_none=False)
    total, terms = loss_terms(model, targets, batch, loss_cfg)
    total.backward()
    optimizer.step()
    return _report(total, terms)


def evaluate_loss(model: SketchUNet, teacher: MaskTo3DTeacher, batch: Batch, loss_cfg: LossConfig) -> LossReport:
    with torch.no_grad():
        total, terms = loss_terms(model, style_targets(teacher, batch.masks), batch, loss_cfg)
    return _report(total, terms)


def evaluate_style_loss(
    model: SketchUNet, teacher: MaskTo3DTeacher, pairs: Sequence[Tuple[Sketch, SegMask]], chunk: int = 16
) -> float:
    """Mean L_SV of the U-Net embeddings against the teacher's style targets"""
    if not pairs:
        raise ConfigError("evaluate_style_loss needs at least one sample")
    total = 0.0
    with torch.no_grad():
        for start in range(0, len(pairs), chunk):
            batch = Batch.of(pairs[start:start + chunk])
            _, embedding = model(sketches_to_batch(batch.sketches))
            diff = embedding - style_targets(teacher, batch.masks)
            total += float((diff * diff).sum())
    mean = total / len(pairs)
    if not math.isfinite(mean):
        raise NumericalError("Style loss is not finite", where="l_sv")
    return mean


def parameter_snapshot(module: torch.nn.Module) -> List[np.ndarray]:
    """Copies of every parameter, for frozenness checks"""
    return [p.detach().numpy().copy() for p in module.parameters()]


__all__ = [
    "Gradients",
    "OptimizerState",
    "Batch",
    "loss_terms",
    "grad_total_loss",
    "make_optimizer",
    "train_step",
    "evaluate_loss",
    "evaluate_style_loss",
    "parameter_snapshot",
]

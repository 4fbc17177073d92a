"""
Sketch-to-Mask Training
Loss evaluation against the frozen teacher, Adam steps, the training loop,
the finite-difference gradient check and ablation runs
"""

from .ablation import ARMS, AblationResult, arm_config, run_ablation, summarize
from .gradcheck import GradCheckReport, finite_diff_check, relative_error
from .loop import (
    LOG_COLUMNS,
    BatchStream,
    TrainResult,
    checkpoint_steps,
    epoch_permutation,
    resolve_teacher_dir,
    train_loop,
)
from .steps import (
    Batch,
    Gradients,
    OptimizerState,
    evaluate_loss,
    evaluate_style_loss,
    grad_total_loss,
    loss_terms,
    make_optimizer,
    parameter_snapshot,
    train_step,
)

__all__ = [
    "ARMS",
    "AblationResult",
    "arm_config",
    "run_ablation",
    "summarize",
    "GradCheckReport",
    "finite_diff_check",
    "relative_error",
    "LOG_COLUMNS",
    "BatchStream",
    "TrainResult",
    "checkpoint_steps",
    "epoch_permutation",
    "resolve_teacher_dir",
    "train_loop",
    "Batch",
    "Gradients",
    "OptimizerState",
    "evaluate_loss",
    "evaluate_style_loss",
    "grad_total_loss",
    "loss_terms",
    "make_optimizer",
    "parameter_snapshot",
    "train_step",
]

"""
Finite-Difference Gradient Check
Analytic U-Net gradients of L_total against central differences
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
import torch
import torch.nn.functional as F

from ..config.schema import UNET_PRESETS, LossConfig, UNetConfig
from ..imagery.types import SegMask, Sketch
from ..losses.objectives import cross_entropy_t
from ..sketch2mask.unet import DTYPE, SketchUNet, init_params
from .steps import Batch, CrossEntropy, loss_terms

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
TOLERANCE = 1e-4
ENTRIES_PER_TENSOR = 16
REL_FLOOR = 1e-6
BIAS_SCALE = 0.1


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), REL_FLOOR)


class KinkTracker:
    """
    Records the piecewise-linear regime of a U-Net forward pass

    The regime is the sign of every leaky-rectified pre-activation plus the
    max-pool winners of every encoder level. A difference quotient is only
    meaningful when both probes stay in the regime of the base point.
    """

    def __init__(self, model: SketchUNet):
        self._parts: List[bytes] = []
        self._handles = []
        for name, module in model.named_modules():
            if name.endswith(".conv1") or name.endswith(".conv2") or name == "unproject":
                self._handles.append(module.register_forward_hook(self._record_signs))
            elif name.startswith("down.") and name.count(".") == 1:
                self._handles.append(module.register_forward_hook(self._record_pooling))

    def _record_signs(self, module, inputs, output):
        self._parts.append((output > 0).numpy().tobytes())

    def _record_pooling(self, module, inputs, output):
        _, winners = F.max_pool2d(output, 2, return_indices=True)
        self._parts.append(winners.numpy().tobytes())

    def reset(self) -> None:
        self._parts = []

    def pattern(self) -> Tuple[bytes, ...]:
        return tuple(self._parts)

    def close(self) -> None:
        for handle in self._handles:
            handle.remove()


@dataclass
class GradCheckReport:
    """Max relative error per parameter tensor"""

    rows: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=["tensor", "entries", "max_rel_error"]))
    tolerance: float = TOLERANCE

    def _failing(self) -> pd.Series:
        # a tensor whose sampled entries all straddled a kink was never checked
        return (self.rows.max_rel_error >= self.tolerance) | (self.rows.entries == 0)

    @property
    def passed(self) -> bool:
        return not bool(self._failing().any())

    @property
    def failed(self) -> List[str]:
        return self.rows.loc[self._failing(), "tensor"].tolist()

    @property
    def max_error(self) -> float:
        return float(self.rows.max_rel_error.max())

    def summary(self) -> str:
        status = "PASS" if self.passed else f"FAIL ({', '.join(self.failed)})"
        return f"gradient check {status}: {len(self.rows)} tensors, max relative error {self.max_error:.3e}"


def finite_diff_check(
    unet_cfg: UNetConfig = UNET_PRESETS["gradcheck"],
    seed: int = 0,
    loss_cfg: Optional[LossConfig] = None,
    batch_size: int = 2,
    ce_fn: CrossEntropy = cross_entropy_t,
) -> GradCheckReport:
    """
    Build a tiny random instance and compare gradients for every parameter tensor

    The sketch is uniform noise, masks are random labels, the style target is
    a random (L, D) matrix and biases get small random values so that every
    tensor has a nonzero gradient. Up to ENTRIES_PER_TENSOR seeded entries
    per tensor are differenced with step FD_STEP.
    """
    loss_cfg = loss_cfg or LossConfig()
    model = init_params(unet_cfg, seed)
    rng = np.random.default_rng(seed)
    size = unet_cfg.input_size
    with torch.no_grad():
        for name, param in model.named_parameters():
            if name.endswith("bias"):
                param.copy_(torch.from_numpy(rng.uniform(-BIAS_SCALE, BIAS_SCALE, param.shape)))

    batch = Batch(
        tuple(Sketch(rng.uniform(0.0, 1.0, (size, size))) for _ in range(batch_size)),
        tuple(SegMask(rng.integers(0, unet_cfg.num_classes, (size, size)), unet_cfg.num_classes) for _ in range(batch_size)),
    )
    targets = torch.from_numpy(rng.normal(0.0, 0.5, (batch_size,) + unet_cfg.style_shape)).to(DTYPE)

    model.zero_grad(set_to_none=False)
    total, _ = loss_terms(model, targets, batch, loss_cfg, ce_fn)
    total.backward()

    tracker = KinkTracker(model)

    def objective() -> Tuple[float, Tuple[bytes, ...]]:
        tracker.reset()
        with torch.no_grad():
            value, _ = loss_terms(model, targets, batch, loss_cfg)
        return float(value), tracker.pattern()

    _, base_pattern = objective()
    rows = []
    for name, param in model.named_parameters():
        analytic = param.grad.detach().numpy().ravel().copy()
        flat = param.data.view(-1)
        count = min(ENTRIES_PER_TENSOR, flat.numel())
        checked, skipped, worst = 0, 0, 0.0
        for k in rng.permutation(flat.numel()):
            if checked == count:
                break
            original = float(flat[k])
            flat[k] = original + FD_STEP
            plus, plus_pattern = objective()
            flat[k] = original - FD_STEP
            minus, minus_pattern = objective()
            flat[k] = original
            if plus_pattern != base_pattern or minus_pattern != base_pattern:
                skipped += 1
                continue
            numeric = (plus - minus) / (2.0 * FD_STEP)
            worst = max(worst, relative_error(float(analytic[k]), numeric))
            checked += 1
        rows.append({"tensor": name, "entries": checked, "max_rel_error": worst})
        logger.debug(f"gradcheck {name}: {checked} entries ({skipped} straddled a kink), max relative error {worst:.3e}")

    tracker.close()
    report = GradCheckReport(rows=pd.DataFrame(rows, columns=["tensor", "entries", "max_rel_error"]))
    logger.info(report.summary())
    return report


__all__ = ["FD_STEP", "TOLERANCE", "relative_error", "GradCheckReport", "finite_diff_check"]

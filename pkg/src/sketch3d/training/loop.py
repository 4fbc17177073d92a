"""
Sketch-to-Mask Training Loop
Seeded shuffling, sketch augmentation, CSV loss log and periodic checkpoints
"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import pandas as pd

from ..augment.morphology import random_augment
from ..config.schema import RunConfig
from ..datagen.dataset import Sample
from ..datagen.rng import SplitMix64, derive_seed
from ..errors import ConfigError, S3DError
from ..losses.objectives import LossReport
from ..mask23d.teacher import MaskTo3DTeacher, save_teacher
from ..sketch2mask.unet import SketchUNet, init_params, save_unet
from .steps import Batch, make_optimizer, train_step

logger = logging.getLogger(__name__)

LOG_COLUMNS = ["step", "l_sv", "l_ce", "l_dice", "l_total"]
LOG_FILE = "train_log.csv"
TEACHER_DIR = "teacher"
CHECKPOINT_DIR = "checkpoints"

# Stream tags for derive_seed
SHUFFLE_STREAM = 1
AUGMENT_STREAM = 2


@dataclass
class TrainResult:
    model: SketchUNet
    history: pd.DataFrame
    checkpoints: List[Path] = field(default_factory=list)

    @property
    def final_report(self) -> LossReport:
        row = self.history.iloc[-1]
        return LossReport(float(row.l_sv), float(row.l_ce), float(row.l_dice), float(row.l_total))

    @property
    def initial_report(self) -> LossReport:
        row = self.history.iloc[0]
        return LossReport(float(row.l_sv), float(row.l_ce), float(row.l_dice), float(row.l_total))


def epoch_permutation(seed: int, epoch: int, n: int) -> List[int]:
    """Fisher-Yates shuffle of range(n) drawn from the epoch's SplitMix64 stream"""
    rng = SplitMix64(derive_seed(seed, SHUFFLE_STREAM, epoch))
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        order[i], order[j] = order[j], order[i]
    return order


class BatchStream:
    """Consecutive batches over per-epoch permutations; batches may straddle epochs"""

    def __init__(self, n: int, batch_size: int, seed: int):
        self.n = n
        self.batch_size = batch_size
        self.seed = seed
        self._epoch = -1
        self._order: List[int] = []

    def indices(self, step: int) -> List[int]:
        """Sample indices of 0-based step"""
        out = []
        for pos in range(step * self.batch_size, (step + 1) * self.batch_size):
            epoch = pos // self.n
            if epoch != self._epoch:
                self._epoch = epoch
                self._order = epoch_permutation(self.seed, epoch, self.n)
            out.append(self._order[pos % self.n])
        return out


def checkpoint_steps(steps: int, interval: int) -> List[int]:
    """Every multiple of interval up to steps, plus the final step"""
    marks = list(range(interval, steps + 1, interval))
    if not marks or marks[-1] != steps:
        marks.append(steps)
    return marks


def _append_log(path: Path, rows: List[dict]) -> None:
    if rows:
        pd.DataFrame(rows, columns=LOG_COLUMNS).to_csv(path, mode="a", header=not path.exists(), index=False)


def train_loop(
    samples: Sequence[Sample],
    config: RunConfig,
    teacher: MaskTo3DTeacher,
    out_dir: Optional[Union[str, Path]] = None,
    model: Optional[SketchUNet] = None,
) -> TrainResult:
    """
    Train a fresh (or given) U-Net on samples against the frozen teacher

    With out_dir set, the teacher is saved once under out_dir/teacher, loss
    rows are appended to out_dir/train_log.csv every log_interval steps and checkpoints are written
    to out_dir/checkpoints/step_NNNNNN at every checkpoint_interval steps and
    at the final step.
    """
    if not samples:
        raise ConfigError("Training needs at least one sample")
    tcfg = config.train
    model = model if model is not None else init_params(config.unet, tcfg.seed)
    optimizer = make_optimizer(model, tcfg)
    stream = BatchStream(len(samples), tcfg.batch_size, tcfg.seed)
    marks = set(checkpoint_steps(tcfg.steps, tcfg.checkpoint_interval))

    out_path = Path(out_dir) if out_dir is not None else None
    teacher_dir = None
    log_path = None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        teacher_dir = out_path / TEACHER_DIR
        save_teacher(teacher, teacher_dir)
        log_path = out_path / LOG_FILE
        if log_path.exists():
            log_path.unlink()

    rows: List[dict] = []
    pending: List[dict] = []
    checkpoints: List[Path] = []
    logger.info(f"Training {tcfg.steps} steps, batch {tcfg.batch_size}, {len(samples)} samples")

    for step in range(tcfg.steps):
        picked = stream.indices(step)
        pairs = []
        for j, idx in enumerate(picked):
            sketch = samples[idx].sketch
            if tcfg.augment:
                sketch = random_augment(sketch, config.augment, derive_seed(tcfg.seed, AUGMENT_STREAM, step, j))
            pairs.append((sketch, samples[idx].mask))

        try:
            report = train_step(model, optimizer, teacher, Batch.of(pairs), config.loss)
        except S3DError as e:
            wrapped = type(e)(f"step {step + 1}: {e}")
            wrapped.where = getattr(e, "where", None)
            raise wrapped from e

        row = report.to_row(step + 1)
        rows.append(row)
        pending.append(row)
        logger.debug(f"step {step + 1}: {row}")
        at_log = (step + 1) % tcfg.log_interval == 0
        if at_log or step == 0:
            logger.info(
                f"step {step + 1}/{tcfg.steps} l_total={report.l_total:.6f} "
                f"(sv={report.l_sv:.6f} ce={report.l_ce:.6f} dice={report.l_dice:.6f})"
            )

        if out_path is not None and (at_log or (step + 1) in marks):
            _append_log(log_path, pending)
            pending = []

        if out_path is not None and (step + 1) in marks:
            ckpt = out_path / CHECKPOINT_DIR / f"step_{step + 1:06d}"
            save_unet(
                model,
                ckpt,
                {
                    "step": step + 1,
                    "train_seed": tcfg.seed,
                    "teacher": os.path.relpath(teacher_dir, ckpt),
                },
            )
            checkpoints.append(ckpt)

    history = pd.DataFrame(rows, columns=LOG_COLUMNS)
    logger.info(f"Training finished: l_total {history.l_total.iloc[0]:.6f} -> {history.l_total.iloc[-1]:.6f}")
    return TrainResult(model=model, history=history, checkpoints=checkpoints)


def resolve_teacher_dir(checkpoint_dir: Union[str, Path], manifest: dict) -> Path:
    """Teacher directory referenced by a U-Net checkpoint manifest"""
    ref = manifest.get("teacher")
    if not ref:
        raise ConfigError(f"Checkpoint {checkpoint_dir} has no teacher reference")
    return (Path(checkpoint_dir) / ref).resolve()


__all__ = [
    "LOG_COLUMNS",
    "LOG_FILE",
    "TrainResult",
    "epoch_permutation",
    "BatchStream",
    "checkpoint_steps",
    "train_loop",
    "resolve_teacher_dir",
]

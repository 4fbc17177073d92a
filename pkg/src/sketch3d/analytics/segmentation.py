"""
Segmentation Quality Metrics
Confusion matrix, mean IoU and pixel-ranking mean average precision
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from sklearn.metrics import confusion_matrix

from ..errors import ConfigError, UndefinedMetricError
from ..imagery.types import OneHotMask, ProbMap, SegMask
from ..sketch2mask.unet import SketchUNet, predict_mask

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[a, b] = pixels with truth a predicted b"""

    counts: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.num_classes != other.num_classes:
            raise ConfigError("Cannot add confusion matrices with different class counts")
        return ConfusionMatrix(self.counts + other.counts)


def confusion(y: SegMask, yhat: SegMask) -> ConfusionMatrix:
    """Exact pixel tally of truth against prediction"""
    if y.shape != yhat.shape or y.num_classes != yhat.num_classes:
        raise ConfigError(
            f"Masks differ: {y.shape}/{y.num_classes} classes vs {yhat.shape}/{yhat.num_classes} classes"
        )
    counts = confusion_matrix(y.labels.ravel(), yhat.labels.ravel(), labels=np.arange(y.num_classes))
    return ConfusionMatrix(counts.astype(np.int64))


def per_class_iou(cm: ConfusionMatrix) -> List[Optional[float]]:
    """TP / (TP + FP + FN) per class; None where the class never occurs in truth or prediction"""
    tp = np.diag(cm.counts).astype(np.float64)
    fp = cm.counts.sum(axis=0) - tp
    fn = cm.counts.sum(axis=1) - tp
    union = tp + fp + fn
    return [float(tp[c] / union[c]) if union[c] > 0 else None for c in range(cm.num_classes)]


def miou(cm: ConfusionMatrix) -> float:
    """
    Mean IoU over classes that appear in truth or prediction

    Raises:
        UndefinedMetricError: if no class appears at all
    """
    ious = [v for v in per_class_iou(cm) if v is not None]
    if not ious:
        raise UndefinedMetricError("mIoU undefined: every class is empty")
    return float(np.mean(ious))


def average_precision(y_binary, scores) -> float:
    """
    Area under the step-wise precision-recall curve of a pixel ranking

    Pixels are ranked by descending score; pixels with equal scores form a
    single threshold, so each tie group contributes its recall gain times the
    precision reached after the whole group.

    Args:
        y_binary: Per-pixel 0/1 truth
        scores: Per-pixel real scores

    Returns:
        AP in [0, 1]
    """
    y = np.asarray(y_binary).ravel().astype(bool)
    s = np.asarray(scores, dtype=np.float64).ravel()
    if y.shape != s.shape:
        raise ConfigError(f"Truth has {y.size} pixels, scores have {s.size}")
    positives = int(y.sum())
    if positives == 0:
        raise UndefinedMetricError("Average precision undefined without positive pixels")

    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    tps = np.cumsum(y)
    # last index of every tie group
    ends = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    tp_at = tps[ends]
    gains = np.diff(np.r_[0, tp_at])
    precision = tp_at / (ends + 1.0)
    return float(np.sum(gains * precision) / positives)


def per_class_ap(y: OneHotMask, yhat: ProbMap) -> List[Optional[float]]:
    """AP of each class from its probability column; None for classes without positives"""
    if (y.width, y.height, y.num_classes) != (yhat.width, yhat.height, yhat.num_classes):
        raise ConfigError("One-hot mask and probability map dimensions differ")
    return _column_ap(y.data, yhat.data)


def _column_ap(truth: np.ndarray, scores: np.ndarray) -> List[Optional[float]]:
    out: List[Optional[float]] = []
    for c in range(truth.shape[1]):
        if truth[:, c].any():
            out.append(average_precision(truth[:, c], scores[:, c]))
        else:
            logger.debug(f"class {c} has no positive pixels; skipped in mAP")
            out.append(None)
    return out


def mean_ap(aps: Sequence[Optional[float]]) -> float:
    kept = [v for v in aps if v is not None]
    if not kept:
        raise UndefinedMetricError("mAP undefined: no class has positive pixels")
    return float(np.mean(kept))


def map_score(y: OneHotMask, yhat: ProbMap) -> float:
    """Mean AP over classes with at least one positive pixel"""
    return mean_ap(per_class_ap(y, yhat))


class SegmentationEvaluator:
    """
    Pools confusion counts and pixel rankings over many images

    mIoU comes from the summed confusion matrix and mAP from the per-class
    rankings of all pixels of all images together.
    """

    def __init__(self, num_classes: int):
        self.num_classes = num_classes
        self.cm = ConfusionMatrix(np.zeros((num_classes, num_classes), dtype=np.int64))
        self._truth: List[np.ndarray] = []
        self._scores: List[np.ndarray] = []
        self.n_images = 0

    def add(self, truth: SegMask, predicted: SegMask, probabilities: ProbMap) -> None:
        if probabilities.num_classes != self.num_classes or truth.num_classes != self.num_classes:
            raise ConfigError(f"Evaluator expects {self.num_classes} classes")
        self.cm = self.cm + confusion(truth, predicted)
        onehot = np.zeros((truth.labels.size, self.num_classes), dtype=np.uint8)
        onehot[np.arange(truth.labels.size), truth.labels.ravel()] = 1
        self._truth.append(onehot)
        self._scores.append(probabilities.data)
        self.n_images += 1

    def results(self) -> Dict[str, object]:
        """JSON-ready summary: miou, map, per_class_iou, per_class_ap, n_images"""
        if self.n_images == 0:
            raise UndefinedMetricError("No images were evaluated")
        aps = _column_ap(np.concatenate(self._truth), np.concatenate(self._scores))
        return {
            "miou": miou(self.cm),
            "map": mean_ap(aps),
            "per_class_iou": per_class_iou(self.cm),
            "per_class_ap": aps,
            "n_images": self.n_images,
        }


def evaluate_split(model: SketchUNet, samples) -> Dict[str, object]:
    """Run the U-Net over (sketch, mask) samples and pool mIoU and mAP"""
    evaluator = SegmentationEvaluator(model.config.num_classes)
    for sample in samples:
        predicted, probabilities = predict_mask(model, sample.sketch)
        evaluator.add(sample.mask, predicted, probabilities)
    results = evaluator.results()
    logger.info(f"Evaluated {results['n_images']} images: mIoU={results['miou']:.4f} mAP={results['map']:.4f}")
    return results


__all__ = [
    "ConfusionMatrix",
    "confusion",
    "per_class_iou",
    "miou",
    "average_precision",
    "per_class_ap",
    "mean_ap",
    "map_score",
    "SegmentationEvaluator",
    "evaluate_split",
]

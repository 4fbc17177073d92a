"""
Tests for segmentation metrics
"""

import numpy as np
import pytest
from sklearn.metrics import average_precision_score

from sketch3d.analytics.segmentation import (
    ConfusionMatrix,
    SegmentationEvaluator,
    average_precision,
    confusion,
    evaluate_split,
    map_score,
    mean_ap,
    miou,
    per_class_iou,
)
from sketch3d.errors import ConfigError, UndefinedMetricError
from sketch3d.imagery.types import OneHotMask, ProbMap, SegMask, one_hot
from sketch3d.sketch2mask.unet import init_params


def test_confusion_counts():
    truth = SegMask(np.array([[0, 0, 1, 1]]), 3)
    pred = SegMask(np.array([[0, 1, 1, 2]]), 3)
    cm = confusion(truth, pred)
    assert cm.counts.tolist() == [[1, 1, 0], [0, 1, 1], [0, 0, 0]]
    assert cm.total == 4


def test_confusion_rejects_shape_mismatch():
    with pytest.raises(ConfigError):
        confusion(SegMask(np.zeros((2, 2), dtype=int), 2), SegMask(np.zeros((2, 3), dtype=int), 2))


def test_miou_example():
    truth = SegMask(np.array([[0, 0, 1, 1]]), 2)
    pred = SegMask(np.array([[0, 1, 1, 1]]), 2)
    assert miou(confusion(truth, pred)) == pytest.approx(7 / 12, abs=1e-12)


def test_miou_skips_absent_classes():
    truth = SegMask(np.array([[0, 0, 1, 1]]), 4)
    assert per_class_iou(confusion(truth, truth)) == [1.0, 1.0, None, None]
    assert miou(confusion(truth, truth)) == 1.0


def test_miou_undefined_without_pixels():
    with pytest.raises(UndefinedMetricError):
        miou(ConfusionMatrix(np.zeros((3, 3), dtype=np.int64)))


def test_confusion_addition():
    a = confusion(SegMask(np.array([[0, 1]]), 2), SegMask(np.array([[0, 0]]), 2))
    assert (a + a).counts.tolist() == [[2, 0], [2, 0]]


def test_average_precision_examples():
    assert average_precision([1, 0, 1, 0], [0.9, 0.8, 0.7, 0.6]) == pytest.approx(5 / 6, abs=1e-12)
    assert average_precision([1, 1, 0, 0], [0.9, 0.8, 0.2, 0.1]) == 1.0


def test_constant_scores_give_prevalence():
    y = np.array([1, 0, 0, 1, 0, 0, 0, 0])
    assert average_precision(y, np.full(8, 0.3)) == pytest.approx(0.25)


def test_average_precision_without_positives():
    with pytest.raises(UndefinedMetricError):
        average_precision([0, 0, 0], [0.1, 0.2, 0.3])


@pytest.mark.parametrize("seed", range(5))
def test_average_precision_agrees_with_sklearn_under_ties(seed):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, 200)
    y[0] = 1
    scores = np.round(rng.uniform(size=200), 1)
    assert average_precision(y, scores) == pytest.approx(average_precision_score(y, scores), abs=1e-12)


def test_map_score_skips_classes_without_positives():
    y = one_hot(SegMask(np.array([[0, 0, 1, 1]]), 3))
    probs = ProbMap(np.array([[0.8, 0.1, 0.1], [0.6, 0.3, 0.1], [0.3, 0.6, 0.1], [0.1, 0.8, 0.1]]), 4, 1)
    assert map_score(y, probs) == 1.0


def test_map_score_dimension_check():
    y = OneHotMask(np.eye(2, dtype=np.uint8), 2, 1)
    with pytest.raises(ConfigError):
        map_score(y, ProbMap(np.full((4, 2), 0.5), 4, 1))


def test_mean_ap_undefined():
    with pytest.raises(UndefinedMetricError):
        mean_ap([None, None])


def test_evaluator_pools_images():
    evaluator = SegmentationEvaluator(2)
    truth = SegMask(np.array([[0, 1]]), 2)
    evaluator.add(truth, truth, ProbMap(np.array([[0.9, 0.1], [0.2, 0.8]]), 2, 1))
    evaluator.add(truth, SegMask(np.array([[1, 1]]), 2), ProbMap(np.array([[0.4, 0.6], [0.3, 0.7]]), 2, 1))
    results = evaluator.results()
    assert results["n_images"] == 2
    # pooled counts [[1, 1], [0, 2]]
    assert results["miou"] == pytest.approx((1 / 2 + 2 / 3) / 2)
    assert results["per_class_ap"][0] == pytest.approx(average_precision([1, 0, 1, 0], [0.9, 0.2, 0.4, 0.3]))


def test_evaluator_without_images():
    with pytest.raises(UndefinedMetricError):
        SegmentationEvaluator(3).results()


def test_evaluate_split_reports_bounded_metrics(samples, run_config):
    results = evaluate_split(init_params(run_config.unet, 0), samples)
    assert 0.0 <= results["miou"] <= 1.0
    assert 0.0 <= results["map"] <= 1.0
    assert len(results["per_class_iou"]) == run_config.unet.num_classes

"""
Tests for the training losses and their analytic gradients
"""

import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from sketch3d.config.schema import LossConfig
from sketch3d.errors import ConfigError
from sketch3d.imagery.types import OneHotMask, ProbMap, SegMask, one_hot
from sketch3d.losses.objectives import (
    cross_entropy_loss,
    cross_entropy_t,
    dice_loss,
    dice_t,
    style_vector_loss,
    style_vector_loss_t,
    total_loss,
)


def random_tables(seed, n=12, c=3):
    rng = np.random.default_rng(seed)
    y = np.eye(c)[rng.integers(0, c, n)]
    logits = rng.normal(size=(n, c))
    yhat = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
    return torch.from_numpy(y), torch.from_numpy(yhat)


def test_style_vector_loss_examples():
    w = np.random.default_rng(0).normal(size=(2, 3))
    assert style_vector_loss(w, w) == 0.0
    assert style_vector_loss(np.array([[1.0, 2.0]]), np.array([[0.0, 0.0]])) == 5.0


@given(st.lists(st.floats(-100, 100), min_size=4, max_size=4), st.lists(st.floats(-100, 100), min_size=4, max_size=4))
def test_style_vector_loss_symmetric(a, b):
    a, b = np.array(a).reshape(2, 2), np.array(b).reshape(2, 2)
    assert style_vector_loss(a, b) == style_vector_loss(b, a)


def test_style_vector_shape_mismatch():
    with pytest.raises(ConfigError):
        style_vector_loss(np.zeros((2, 3)), np.zeros((3, 2)))


def test_cross_entropy_examples():
    y = OneHotMask(np.eye(4, dtype=np.uint8), 2, 2)
    assert cross_entropy_loss(y, ProbMap(np.eye(4), 2, 2)) == 0.0
    assert cross_entropy_loss(y, ProbMap(np.full((4, 4), 0.25), 2, 2)) == pytest.approx(math.log(4), abs=1e-9)
    two = OneHotMask(np.array([[1, 0], [0, 1]], dtype=np.uint8), 2, 1)
    probs = ProbMap(np.array([[0.5, 0.5], [0.75, 0.25]]), 2, 1)
    assert cross_entropy_loss(two, probs) == pytest.approx((math.log(2) + math.log(4)) / 2, abs=1e-9)


def test_cross_entropy_clamps_zero_probability():
    y = OneHotMask(np.array([[0, 1]], dtype=np.uint8), 1, 1)
    assert cross_entropy_loss(y, ProbMap(np.array([[1.0, 0.0]]), 1, 1)) == pytest.approx(-math.log(1e-12))


def test_dice_examples():
    y = OneHotMask(np.array([[1, 0], [1, 0], [0, 1], [0, 1]], dtype=np.uint8), 2, 2)
    assert dice_loss(y, ProbMap(np.array([[1.0, 0.0]] * 4), 2, 2), 1e-6) == pytest.approx(2 / 3, abs=1e-6)
    assert dice_loss(y, ProbMap(y.data.astype(float), 2, 2), 1e-6) <= 1e-6
    swapped = ProbMap(y.data[:, ::-1].astype(float), 2, 2)
    assert dice_loss(y, swapped, 1e-6) == pytest.approx(1.0)


def test_dice_rejects_nonpositive_epsilon():
    y = one_hot(SegMask(np.array([[0, 1]]), 2))
    with pytest.raises(ConfigError):
        dice_loss(y, ProbMap(np.eye(2), 2, 1), 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 0.5))
def test_dice_bounds_and_monotone(seed, shrink):
    y, yhat = random_tables(seed)
    value = float(dice_t(y, yhat, 1e-6))
    assert 0.0 <= value <= 1.0
    lowered = yhat.clone()
    true_class = y.argmax(dim=1)
    lowered[0, true_class[0]] *= 1.0 - shrink
    assert float(dice_t(y, lowered, 1e-6)) >= value - 1e-12


def test_table_dimensions_checked():
    y = one_hot(SegMask(np.array([[0, 1]]), 2))
    with pytest.raises(ConfigError):
        cross_entropy_loss(y, ProbMap(np.full((2, 3), 1 / 3), 2, 1))


def test_total_loss_arithmetic():
    assert total_loss(1.0, 2.0, 0.5).l_total == 3.5
    assert total_loss(1.0, 2.0, 0.5, LossConfig(lambda_sv=0, lambda_ce=0, lambda_dice=0)).l_total == 0.0
    assert total_loss(1.0, 2.0, 0.5, LossConfig(lambda_sv=2.0)).l_total == 4.5


def test_total_loss_keeps_tensors_differentiable():
    x = torch.tensor(2.0, dtype=torch.float64, requires_grad=True)
    out = total_loss(x, x * 2, x * 3, LossConfig(lambda_sv=1.0, lambda_ce=2.0, lambda_dice=0.5))
    out.backward()
    assert float(x.grad) == pytest.approx(1.0 + 4.0 + 1.5)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_analytic_gradients_match_autograd_check(seed):
    y, yhat = random_tables(seed)
    yhat.requires_grad_(True)
    assert torch.autograd.gradcheck(lambda p: cross_entropy_t(y, p), (yhat,), eps=1e-6, atol=1e-7)
    assert torch.autograd.gradcheck(lambda p: dice_t(y, p, 1e-6), (yhat,), eps=1e-6, atol=1e-7)
    rng = np.random.default_rng(seed)
    a = torch.from_numpy(rng.normal(size=(2, 4))).requires_grad_(True)
    b = torch.from_numpy(rng.normal(size=(2, 4))).requires_grad_(True)
    assert torch.autograd.gradcheck(style_vector_loss_t, (a, b), eps=1e-6, atol=1e-7)


def test_cross_entropy_gradient_zero_below_clamp():
    y = torch.tensor([[0.0, 1.0]], dtype=torch.float64)
    yhat = torch.tensor([[1.0, 0.0]], dtype=torch.float64, requires_grad=True)
    cross_entropy_t(y, yhat).backward()
    assert not yhat.grad.any()

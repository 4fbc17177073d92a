"""
Tests for the sketch-to-mask U-Net
"""

import numpy as np
import pytest
import torch

from sketch3d.config.schema import UNET_PRESETS, UNetConfig
from sketch3d.errors import ConfigError
from sketch3d.imagery.tensor_io import save_tensor_directory
from sketch3d.imagery.types import Sketch
from sketch3d.sketch2mask.unet import (
    forward,
    glorot_bound,
    init_params,
    load_unet,
    predict_mask,
    save_unet,
    softmax_probabilities,
)

CONFIG = UNET_PRESETS["gradcheck"]


def random_sketch(seed=0, size=16):
    return Sketch(np.random.default_rng(seed).uniform(size=(size, size)))


def test_init_deterministic():
    a, b = init_params(CONFIG, 3), init_params(CONFIG, 3)
    for (name, pa), (_, pb) in zip(a.named_parameters(), b.named_parameters()):
        assert torch.equal(pa, pb), name


def test_init_biases_zero_and_weights_bounded():
    model = init_params(CONFIG, 1)
    for name, param in model.named_parameters():
        if name.endswith("bias"):
            assert not param.any(), name
        else:
            bound = glorot_bound(param.shape)
            assert param.abs().max() < bound, name


def test_glorot_bound_conv():
    # 3x3 conv from 1 to 4 channels: fan_in 9, fan_out 36
    assert glorot_bound((4, 1, 3, 3)) == pytest.approx(np.sqrt(6 / 45))


def test_forward_shapes():
    logits, embedding = forward(init_params(CONFIG, 0), random_sketch())
    assert logits.shape == (16, 16, CONFIG.num_classes)
    assert embedding.shape == (CONFIG.style_rows, CONFIG.style_dim)


@pytest.mark.parametrize("depth, size", [(1, 8), (3, 32), (4, 16)])
def test_embedding_shape_for_any_config(depth, size):
    cfg = UNetConfig(input_size=size, depth=depth, base_channels=2, style_rows=3, style_dim=5)
    _, embedding = forward(init_params(cfg, 0), random_sketch(size=size))
    assert embedding.shape == (3, 5)


def test_paper_pairing_shape():
    paper = UNET_PRESETS["paper"]
    assert paper.style_shape == (7, 512)
    assert paper.bottleneck_size == 4


def test_forward_deterministic():
    model = init_params(CONFIG, 0)
    sketch = random_sketch(2)
    (la, ea), (lb, eb) = forward(model, sketch), forward(model, sketch)
    assert la == lb
    assert np.array_equal(ea.values, eb.values)


def test_wrong_input_size():
    with pytest.raises(ConfigError, match="input_size"):
        forward(init_params(CONFIG, 0), random_sketch(size=8))


def test_input_size_must_be_power_of_two():
    with pytest.raises(ValueError):
        UNetConfig(input_size=48)


def test_predict_rows_sum_to_one():
    mask, probs = predict_mask(init_params(CONFIG, 0), random_sketch(4))
    assert np.allclose(probs.data.sum(axis=1), 1.0, atol=1e-6)
    assert mask.shape == (16, 16)
    assert np.array_equal(mask.labels.ravel(), probs.data.argmax(axis=1))


@pytest.mark.filterwarnings("error::UserWarning")
def test_softmax_accepts_read_only_logits():
    logits = np.random.default_rng(1).normal(size=(4, 4, 6))
    logits.setflags(write=False)
    probs = softmax_probabilities(logits)
    assert np.allclose(probs.sum(axis=-1), 1.0)
    predict_mask(init_params(CONFIG, 0), random_sketch(5))


def test_uniform_logits_pick_class_zero():
    model = init_params(CONFIG, 0)
    with torch.no_grad():
        model.head.weight.zero_()
        model.head.bias.zero_()
    mask, probs = predict_mask(model, random_sketch())
    assert not mask.labels.any()
    assert np.allclose(probs.data, 1.0 / CONFIG.num_classes)


def test_softmax_shift_invariance():
    logits = np.random.default_rng(0).normal(size=(4, 4, 6))
    shifted = logits + np.random.default_rng(1).normal(size=(4, 4, 1)) * 50
    assert np.abs(softmax_probabilities(logits) - softmax_probabilities(shifted)).max() < 1e-9


def test_checkpoint_round_trip(tmp_path):
    model = init_params(CONFIG, 5)
    save_unet(model, tmp_path / "ckpt", {"step": 7})
    restored, manifest = load_unet(tmp_path / "ckpt")
    assert manifest["step"] == 7
    assert restored.config == CONFIG
    for (name, a), (_, b) in zip(model.named_parameters(), restored.named_parameters()):
        assert torch.allclose(a, b, rtol=1e-6, atol=1e-7), name


def test_checkpoint_rejects_other_kind(tmp_path):
    save_tensor_directory({"x": np.zeros(1)}, tmp_path / "other", {"kind": "mask23d"})
    with pytest.raises(ConfigError):
        load_unet(tmp_path / "other")

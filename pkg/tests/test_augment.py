"""
Tests for sketch morphology and the augmentation policy
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sketch3d.augment.morphology import (
    DEFAULT_POLICY,
    Branch,
    binarize,
    choose_branch,
    dilate,
    erode,
    random_augment,
    random_augment_with_branch,
)
from sketch3d.config.schema import AugmentPolicy
from sketch3d.errors import ConfigError
from sketch3d.imagery.types import Sketch

binary_images = arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)), elements=st.sampled_from([0.0, 1.0]))


def test_dilate_all_zero():
    assert not dilate(Sketch(np.zeros((5, 5))), 3).pixels.any()


def test_dilate_single_pixel_gives_block():
    x = np.zeros((7, 7))
    x[3, 3] = 1.0
    out = dilate(Sketch(x), 3).pixels
    expected = np.zeros((7, 7))
    expected[2:5, 2:5] = 1.0
    assert np.array_equal(out, expected)


def test_erode_all_one():
    assert erode(Sketch(np.ones((6, 6))), 7).pixels.all()


def test_erode_block_gives_center():
    x = np.zeros((7, 7))
    x[2:5, 2:5] = 1.0
    out = erode(Sketch(x), 3).pixels
    assert out.sum() == 1.0 and out[3, 3] == 1.0


def test_even_kernel_rejected():
    with pytest.raises(ConfigError):
        dilate(Sketch(np.zeros((4, 4))), 4)


@settings(max_examples=100, deadline=None)
@given(binary_images, st.sampled_from([1, 3, 5, 7]))
def test_morphology_invariants(pixels, kernel):
    x = Sketch(pixels)
    assert np.all(dilate(x, kernel).pixels >= x.pixels)
    assert np.all(erode(x, kernel).pixels <= x.pixels)
    complement = Sketch(1.0 - pixels)
    assert np.array_equal(erode(x, kernel).pixels, 1.0 - dilate(complement, kernel).pixels)


@settings(max_examples=50, deadline=None)
@given(binary_images, st.data())
def test_dilation_is_monotone(pixels, data):
    extra = data.draw(arrays(np.float64, pixels.shape, elements=st.sampled_from([0.0, 1.0])))
    larger = np.maximum(pixels, extra)
    assert np.all(dilate(Sketch(larger), 3).pixels >= dilate(Sketch(pixels), 3).pixels)


def test_identity_only_policy_binarizes():
    policy = AugmentPolicy(p_identity=1.0, p_dilate=0.0, p_erode=0.0)
    sketch = Sketch(np.linspace(0, 1, 16).reshape(4, 4))
    for seed in range(20):
        assert random_augment(sketch, policy, seed) == binarize(sketch)


def test_branch_frequencies():
    counts = {b: 0 for b in Branch}
    for seed in range(10000):
        counts[choose_branch(DEFAULT_POLICY, seed)] += 1
    assert counts[Branch.IDENTITY] / 10000 == pytest.approx(0.50, abs=0.02)
    assert counts[Branch.DILATE] / 10000 == pytest.approx(0.25, abs=0.02)
    assert counts[Branch.ERODE] / 10000 == pytest.approx(0.25, abs=0.02)


def test_augment_deterministic():
    sketch = Sketch(np.random.default_rng(0).uniform(size=(16, 16)))
    for seed in (0, 5, 99):
        assert random_augment(sketch, DEFAULT_POLICY, seed) == random_augment(sketch, DEFAULT_POLICY, seed)


def test_branch_output_matches_direct_call():
    sketch = Sketch(np.random.default_rng(1).uniform(size=(16, 16)))
    for seed in range(12):
        out, branch = random_augment_with_branch(sketch, DEFAULT_POLICY, seed)
        if branch is Branch.DILATE:
            assert out == dilate(sketch, DEFAULT_POLICY.dilate_kernel)
        elif branch is Branch.ERODE:
            assert out == erode(sketch, DEFAULT_POLICY.erode_kernel)
        else:
            assert out == binarize(sketch)


def test_policy_probabilities_must_sum_to_one():
    with pytest.raises(ValueError):
        AugmentPolicy(p_identity=0.5, p_dilate=0.5, p_erode=0.5)

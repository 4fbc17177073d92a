"""
Sketch Augmentation
Binary dilation / erosion and the random identity-dilate-erode policy
"""

import logging
from enum import Enum
from typing import Tuple

import numpy as np
from scipy import ndimage

from ..config.schema import AugmentPolicy
from ..datagen.rng import SplitMix64
from ..errors import ConfigError
from ..imagery.types import Sketch

logger = logging.getLogger(__name__)

DEFAULT_POLICY = AugmentPolicy()


class Branch(str, Enum):
    IDENTITY = "identity"
    DILATE = "dilate"
    ERODE = "erode"


def _check_kernel(kernel: int) -> None:
    if kernel < 1 or kernel % 2 == 0:
        raise ConfigError(f"Morphology kernel must be odd and >= 1, got {kernel}")


def binarize(sketch: Sketch, threshold: float = 0.5) -> Sketch:
    """Strokes are values >= threshold"""
    return Sketch((sketch.pixels >= threshold).astype(np.float64))


def dilate(sketch: Sketch, kernel: int, threshold: float = 0.5) -> Sketch:
    """Max filter over a kernel x kernel square, clamp-to-edge borders, binary output"""
    _check_kernel(kernel)
    binary = sketch.pixels >= threshold
    return Sketch(ndimage.grey_dilation(binary.astype(np.float64), size=(kernel, kernel), mode="nearest"))


def erode(sketch: Sketch, kernel: int, threshold: float = 0.5) -> Sketch:
    """Min filter over a kernel x kernel square, clamp-to-edge borders, binary output"""
    _check_kernel(kernel)
    binary = sketch.pixels >= threshold
    return Sketch(ndimage.grey_erosion(binary.astype(np.float64), size=(kernel, kernel), mode="nearest"))


def choose_branch(policy: AugmentPolicy, seed: int) -> Branch:
    """First SplitMix64 draw u of the seed: identity if u < p_identity, then dilate, else erode"""
    u = SplitMix64(seed).next_float()
    if u < policy.p_identity:
        return Branch.IDENTITY
    if u < policy.p_identity + policy.p_dilate:
        return Branch.DILATE
    return Branch.ERODE


def apply_branch(sketch: Sketch, branch: Branch, policy: AugmentPolicy) -> Sketch:
    threshold = policy.binarize_threshold
    if branch is Branch.DILATE:
        return dilate(sketch, policy.dilate_kernel, threshold)
    if branch is Branch.ERODE:
        return erode(sketch, policy.erode_kernel, threshold)
    return binarize(sketch, threshold)


def random_augment_with_branch(sketch: Sketch, policy: AugmentPolicy, seed: int) -> Tuple[Sketch, Branch]:
    branch = choose_branch(policy, seed)
    return apply_branch(sketch, branch, policy), branch


def random_augment(sketch: Sketch, policy: AugmentPolicy = DEFAULT_POLICY, seed: int = 0) -> Sketch:
    """Apply one randomly drawn branch; deterministic in (sketch, policy, seed)"""
    augmented, branch = random_augment_with_branch(sketch, policy, seed)
    logger.debug(f"augment seed={seed} branch={branch.value}")
    return augmented


__all__ = [
    "DEFAULT_POLICY",
    "Branch",
    "binarize",
    "dilate",
    "erode",
    "choose_branch",
    "apply_branch",
    "random_augment",
    "random_augment_with_branch",
]

"""Morphological sketch augmentation"""

from ..config.schema import AugmentPolicy
from .morphology import (
    DEFAULT_POLICY,
    Branch,
    apply_branch,
    binarize,
    choose_branch,
    dilate,
    erode,
    random_augment,
    random_augment_with_branch,
)

"""Procedural (sketch, mask) face dataset"""

from .dataset import (
    SPLITS,
    DatasetManifest,
    Sample,
    allocate_splits,
    generate_dataset,
    generate_sample,
    load_split,
    synthesize_samples,
)
from .faces import FaceSpec, mask_to_sketch, rasterize_mask, sample_spec
from .rng import SplitMix64, derive_seed, value_at

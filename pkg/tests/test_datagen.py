"""
Tests for the SplitMix64 generator, procedural faces and the dataset writer
"""

import dataclasses
import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from sketch3d.config.schema import DataConfig
from sketch3d.datagen.dataset import (
    DatasetManifest,
    allocate_splits,
    generate_dataset,
    hair_group,
    load_split,
    synthesize_samples,
)
from sketch3d.datagen.faces import HAIR, NUM_CLASSES, boundary_pixels, mask_to_sketch, rasterize_mask, sample_spec
from sketch3d.datagen.rng import MASK64, SplitMix64, derive_seed, value_at
from sketch3d.errors import ConfigError
from sketch3d.imagery.types import SegMask

GOLDEN_DIR = Path(__file__).parent / "golden"


def test_splitmix64_reference_values():
    # First outputs of the published SplitMix64 reference seeded with 0
    rng = SplitMix64(0)
    assert rng.next_u64() == 0xE220A8397B1DCDAF
    assert rng.next_u64() == 0x6E789E6AA1B965F4


def test_value_at_matches_stream():
    rng = SplitMix64(1234)
    stream = [rng.next_u64() for _ in range(5)]
    assert stream == [value_at(1234, k) for k in range(5)]


def test_derive_seed_is_chained_value_at():
    assert derive_seed(7, 3, 4) == value_at(value_at(7, 3), 4)
    assert derive_seed(7) == 7
    assert 0 <= derive_seed(MASK64, 1) <= MASK64


def test_next_float_range():
    rng = SplitMix64(99)
    draws = [rng.next_float() for _ in range(1000)]
    assert min(draws) >= 0.0 and max(draws) < 1.0


def test_same_seed_same_spec():
    assert sample_spec(17) == sample_spec(17)
    assert sample_spec(0) != sample_spec(1)


def test_spec_containment_sweep():
    for seed in range(1000):
        sample_spec(seed)  # FaceSpec validates containment on construction


def test_zero_hair_coverage_has_no_hair():
    spec = dataclasses.replace(sample_spec(5), hair_coverage_deg=0.0)
    mask = rasterize_mask(spec, 64, 64)
    assert not np.any(mask.labels == HAIR)


def test_labels_in_range():
    mask = rasterize_mask(sample_spec(8), 32, 48)
    assert mask.shape == (48, 32)
    assert mask.labels.max() < NUM_CLASSES


def test_rasterize_rejects_small_sizes():
    with pytest.raises(ConfigError):
        rasterize_mask(sample_spec(0), 8, 8)


def test_golden_histogram_seed_42():
    mask = rasterize_mask(sample_spec(42), 64, 64)
    histogram = mask.histogram().tolist()
    golden = json.loads((GOLDEN_DIR / "faces_seed42_64.json").read_text())
    assert histogram == golden["histogram"]
    assert sum(histogram) == 64 * 64


def test_constant_mask_gives_blank_sketch():
    sketch = mask_to_sketch(SegMask(np.ones((16, 16), dtype=int), 6), seed=3)
    assert not sketch.pixels.any()


def test_vertical_boundary_without_perturbation():
    mask = SegMask(np.array([[0, 1], [0, 1]]), 2)
    assert boundary_pixels(mask).all()
    sketch = mask_to_sketch(mask, seed=11, dropout=0.0, jitter=0.0)
    assert np.all(sketch.pixels >= 0.8)


def test_sketch_deterministic():
    mask = rasterize_mask(sample_spec(4), 32, 32)
    assert mask_to_sketch(mask, 21) == mask_to_sketch(mask, 21)


def test_sketch_strokes_lie_near_boundaries():
    mask = rasterize_mask(sample_spec(12), 32, 32)
    sketch = mask_to_sketch(mask, 2)
    edge = boundary_pixels(mask)
    near = edge.copy()
    near[1:] |= edge[:-1]
    near[:-1] |= edge[1:]
    near[:, 1:] |= edge[:, :-1]
    near[:, :-1] |= edge[:, 1:]
    assert not np.any(sketch.pixels[~near] > 0)


@pytest.mark.parametrize(
    "count, splits, expected",
    [
        (10, {"train": 0.8, "val": 0.1, "test": 0.1}, {"train": 8, "val": 1, "test": 1}),
        (3, {"train": 0.8, "val": 0.1, "test": 0.1}, {"train": 3, "val": 0, "test": 0}),
        (288, {"train": 256 / 288, "val": 0.0, "test": 32 / 288}, {"train": 256, "val": 0, "test": 32}),
    ],
)
def test_largest_remainder_allocation(count, splits, expected):
    assert allocate_splits(count, splits) == expected


def test_empty_split_rejected_unless_allowed(tmp_path):
    manifest = DatasetManifest(root=str(tmp_path / "d"), count=3, seed=0, splits={"train": 0.8, "val": 0.1, "test": 0.1}, resolution=16)
    with pytest.raises(ConfigError, match="empty split"):
        generate_dataset(manifest)
    assert generate_dataset(manifest, allow_empty=True) == {"train": 3, "val": 0, "test": 0}


def test_generate_dataset_layout(tmp_path):
    manifest = DatasetManifest(root=str(tmp_path / "d"), count=10, seed=1, splits={"train": 0.8, "val": 0.1, "test": 0.1}, resolution=16)
    generate_dataset(manifest)
    root = tmp_path / "d"
    assert len(list((root / "train" / "sketch").glob("*.pgm"))) == 8
    assert len(list((root / "val" / "mask").glob("*.pgm"))) == 1
    metadata = pd.read_csv(root / "test" / "metadata.csv")
    assert list(metadata.columns) == ["index", "sample_seed", "hair_coverage_deg", "group"]
    assert DatasetManifest.load(root).count == 10


def test_regeneration_is_byte_identical(tmp_path):
    splits = {"train": 0.5, "val": 0.25, "test": 0.25}
    first = DatasetManifest(root=str(tmp_path / "a"), count=8, seed=9, splits=splits, resolution=16)
    second = DatasetManifest(root=str(tmp_path / "b"), count=8, seed=9, splits=splits, resolution=16)
    generate_dataset(first, workers=1)
    generate_dataset(second, workers=4)
    files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes(), rel


def test_load_split_matches_synthesis(dataset_root, run_config):
    loaded = load_split(dataset_root, "train")
    fresh = synthesize_samples(run_config.data.seed, len(loaded), run_config.data.resolution)
    assert len(loaded) == 6
    for a, b in zip(loaded, fresh):
        assert a.mask == b.mask
        assert a.sample_seed == b.sample_seed
        assert np.abs(a.sketch.pixels - b.sketch.pixels).max() <= 0.5 / 255 + 1e-12


def test_load_split_limit_and_unknown_split(dataset_root):
    assert len(load_split(dataset_root, "test", limit=2)) == 2
    with pytest.raises(ConfigError):
        load_split(dataset_root, "holdout")


def test_hair_group_terciles():
    assert [hair_group(v) for v in (60.0, 139.9, 140.0, 219.9, 220.0, 300.0)] == [0, 0, 1, 1, 2, 2]


def test_manifest_from_config_rejects_bad_splits():
    with pytest.raises(ValueError):
        DataConfig(splits={"train": 0.5, "test": 0.5})

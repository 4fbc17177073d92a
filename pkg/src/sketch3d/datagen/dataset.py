"""
Synthetic Dataset Writer and Reader
Handles split allocation, PGM pair output, manifest JSON and per-split metadata

Directory layout:
    root/manifest.json
    root/{train,val,test}/{sketch,mask}/NNNNN.pgm
    root/{train,val,test}/metadata.csv
"""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..config.schema import CLASS_NAMES, DataConfig
from ..errors import ConfigError
from ..imagery.netpbm import load_mask_pgm, load_pgm, save_mask_pgm, save_pgm
from ..imagery.types import SegMask, Sketch
from .faces import FaceSpec, mask_to_sketch, rasterize_mask, sample_spec
from .rng import derive_seed, value_at

logger = logging.getLogger(__name__)

SPLITS: Tuple[str, ...] = ("train", "val", "test")
MANIFEST_NAME = "manifest.json"
METADATA_NAME = "metadata.csv"

PathLike = Union[str, Path]


class DatasetManifest(BaseModel):
    """Everything needed to regenerate a dataset byte for byte"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    root: str
    count: int = Field(ge=1)
    seed: int = Field(ge=0, lt=2**64)
    splits: Dict[str, float]
    classes: List[str] = Field(default_factory=lambda: list(CLASS_NAMES))
    resolution: int = Field(default=64, ge=16)

    @field_validator("splits")
    @classmethod
    def validate_splits(cls, v):
        if set(v) != set(SPLITS):
            raise ValueError(f"splits must define exactly {SPLITS}")
        if abs(sum(v.values()) - 1.0) > 1e-9 or any(r < 0 for r in v.values()):
            raise ValueError("split ratios must be nonnegative and sum to 1")
        return v

    @classmethod
    def from_config(cls, config: DataConfig) -> "DatasetManifest":
        return cls(
            root=config.root,
            count=config.count,
            seed=config.seed,
            splits=dict(config.splits),
            resolution=config.resolution,
        )

    def to_json(self) -> str:
        payload = {
            "count": self.count,
            "seed": self.seed,
            "splits": {name: self.splits[name] for name in SPLITS},
            "classes": self.classes,
            "resolution": self.resolution,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def load(cls, root: PathLike) -> "DatasetManifest":
        path = Path(root) / MANIFEST_NAME
        if not path.is_file():
            raise ConfigError(f"Dataset manifest not found: {path}")
        with open(path, "r") as f:
            return cls(root=str(root), **json.load(f))


@dataclass(frozen=True)
class Sample:
    """One (sketch, mask) pair with its metadata"""

    index: int
    sketch: Sketch
    mask: SegMask
    sample_seed: int
    group: int


def allocate_splits(count: int, splits: Dict[str, float]) -> Dict[str, int]:
    """
    Largest-remainder allocation of count samples over the splits

    Floors are assigned first; leftover samples go to the largest fractional
    parts, ties broken in train, val, test order.
    """
    quotas = {name: count * splits[name] for name in SPLITS}
    sizes = {name: int(math.floor(q)) for name, q in quotas.items()}
    leftover = count - sum(sizes.values())
    order = sorted(SPLITS, key=lambda name: (-(quotas[name] - sizes[name]), SPLITS.index(name)))
    for name in order[:leftover]:
        sizes[name] += 1
    return sizes


def hair_group(coverage_deg: float) -> int:
    """Tercile of hair coverage used as the embedding group label"""
    if coverage_deg < 140.0:
        return 0
    if coverage_deg < 220.0:
        return 1
    return 2


def generate_sample(seed: int, index: int, resolution: int) -> Tuple[FaceSpec, SegMask, Sketch]:
    """Sample `index` of a dataset; depends only on (seed, index, resolution)"""
    sample_seed = value_at(seed, index)
    spec = sample_spec(sample_seed)
    mask = rasterize_mask(spec, resolution, resolution)
    sketch = mask_to_sketch(mask, derive_seed(sample_seed, 1))
    return spec, mask, sketch


def _sample_name(index: int) -> str:
    return f"{index:05d}.pgm"


def generate_dataset(manifest: DatasetManifest, allow_empty: bool = False, workers: int = 1) -> Dict[str, int]:
    """
    Write the dataset described by a manifest

    Args:
        manifest: Dataset description
        allow_empty: Permit splits that receive zero samples
        workers: Thread count; output does not depend on it

    Returns:
        Number of samples per split
    """
    sizes = allocate_splits(manifest.count, manifest.splits)
    empty = [name for name, size in sizes.items() if size == 0]
    if empty and not allow_empty:
        raise ConfigError(f"empty split: {', '.join(empty)} (allocation {sizes})")

    root = Path(manifest.root)
    assignments: List[Tuple[str, int, int]] = []
    start = 0
    for name in SPLITS:
        for local in range(sizes[name]):
            assignments.append((name, local, start + local))
        start += sizes[name]

    def write_one(job: Tuple[str, int, int]) -> Dict[str, object]:
        split, local, global_index = job
        spec, mask, sketch = generate_sample(manifest.seed, global_index, manifest.resolution)
        split_dir = root / split
        try:
            save_pgm(sketch, split_dir / "sketch" / _sample_name(local))
            save_mask_pgm(mask, split_dir / "mask" / _sample_name(local))
        except OSError as e:
            raise OSError(f"Failed to write sample {global_index} under {split_dir}: {e}") from e
        return {
            "split": split,
            "index": local,
            "sample_seed": str(spec.seed),
            "hair_coverage_deg": spec.hair_coverage_deg,
            "group": hair_group(spec.hair_coverage_deg),
        }

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        rows = list(executor.map(write_one, assignments))

    metadata = pd.DataFrame(rows, columns=["split", "index", "sample_seed", "hair_coverage_deg", "group"])
    for name in SPLITS:
        split_dir = root / name
        split_dir.mkdir(parents=True, exist_ok=True)
        split_rows = metadata[metadata["split"] == name].drop(columns=["split"])
        split_rows.to_csv(split_dir / METADATA_NAME, index=False, float_format="%.17g")

    manifest_path = root / MANIFEST_NAME
    try:
        manifest_path.write_text(manifest.to_json())
    except OSError as e:
        raise OSError(f"Failed to write manifest {manifest_path}: {e}") from e

    logger.info(f"Generated {manifest.count} samples under {root}: {sizes}")
    return sizes


def load_split(root: PathLike, split: str, limit: Optional[int] = None) -> List[Sample]:
    """Load the (sketch, mask) pairs of one split in index order"""
    if split not in SPLITS:
        raise ConfigError(f"Unknown split {split!r}")
    manifest = DatasetManifest.load(root)
    split_dir = Path(root) / split
    metadata_path = split_dir / METADATA_NAME
    if not metadata_path.is_file():
        raise ConfigError(f"Split metadata not found: {metadata_path}")

    metadata = pd.read_csv(metadata_path, dtype={"sample_seed": str})
    if limit is not None:
        metadata = metadata.head(limit)

    samples = []
    for row in metadata.to_dict("records"):
        name = _sample_name(int(row["index"]))
        samples.append(
            Sample(
                index=int(row["index"]),
                sketch=load_pgm(split_dir / "sketch" / name),
                mask=load_mask_pgm(split_dir / "mask" / name, len(manifest.classes)),
                sample_seed=int(row["sample_seed"]),
                group=int(row["group"]),
            )
        )
    logger.info(f"Loaded {len(samples)} samples from {split_dir}")
    return samples


def synthesize_samples(seed: int, count: int, resolution: int) -> List[Sample]:
    """In-memory samples without touching the filesystem (tests, pretraining)"""
    samples = []
    for index in range(count):
        spec, mask, sketch = generate_sample(seed, index, resolution)
        samples.append(Sample(index, sketch, mask, spec.seed, hair_group(spec.hair_coverage_deg)))
    return samples


__all__ = [
    "SPLITS",
    "DatasetManifest",
    "Sample",
    "allocate_splits",
    "hair_group",
    "generate_sample",
    "generate_dataset",
    "load_split",
    "synthesize_samples",
]

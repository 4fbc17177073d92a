"""
Shared fixtures for the Sketch3D test suite
"""

import os
import sys

import pytest

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))
os.environ.setdefault("ENVIRONMENT", "testing")

from sketch3d.config.schema import (  # noqa: E402
    DataConfig,
    LossConfig,
    RenderConfig,
    RunConfig,
    TeacherConfig,
    TrainConfig,
    UNET_PRESETS,
)
from sketch3d.datagen.dataset import DatasetManifest, generate_dataset, synthesize_samples  # noqa: E402
from sketch3d.mask23d.teacher import init_frozen  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance run (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def tiny_config(**train_overrides) -> RunConfig:
    """16x16 run configuration small enough for unit tests"""
    train = {"steps": 4, "batch_size": 2, "checkpoint_interval": 2, "log_interval": 1, "seed": 0}
    train.update(train_overrides)
    return RunConfig(
        data=DataConfig(count=12, resolution=16, splits={"train": 0.5, "val": 0.25, "test": 0.25}),
        unet=UNET_PRESETS["gradcheck"],
        teacher=TeacherConfig(
            mask_size=16,
            latent_dim=4,
            style_rows=2,
            style_dim=8,
            encoder_channels=[4, 8],
            triplane_resolution=4,
            triplane_channels=3,
            feature_dim=2,
            hidden_dim=8,
        ),
        loss=LossConfig(),
        train=TrainConfig(**train),
        render=RenderConfig(samples_per_ray=6, image_size=4, orbit_frames=2),
    )


@pytest.fixture
def run_config() -> RunConfig:
    return tiny_config()


@pytest.fixture
def teacher(run_config):
    return init_frozen(run_config.teacher)


@pytest.fixture
def samples(run_config):
    return synthesize_samples(seed=3, count=6, resolution=run_config.data.resolution)


@pytest.fixture
def dataset_root(tmp_path, run_config):
    root = tmp_path / "data"
    manifest = DatasetManifest.from_config(run_config.data.model_copy(update={"root": str(root)}))
    generate_dataset(manifest, allow_empty=False)
    return root

"""
Run Configuration Schema for Sketch3D
Pydantic models for every configurable section, with module invariants as validators
"""

from typing import Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

CLASS_NAMES: List[str] = ["background", "skin", "hair", "eye", "mouth", "neck"]


class _Section(BaseModel):
    """Base for config sections: unknown keys are rejected, instances are immutable"""

    model_config = ConfigDict(extra="forbid", frozen=True)


class DataConfig(_Section):
    """Synthetic dataset settings (also written as the dataset manifest)"""

    root: str = "data"
    count: int = Field(default=288, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    splits: Dict[str, float] = Field(
        default_factory=lambda: {"train": 256 / 288, "val": 0.0, "test": 32 / 288}
    )
    resolution: int = Field(default=64, ge=16)
    allow_empty: bool = True

    @field_validator("splits")
    @classmethod
    def validate_splits(cls, v):
        if set(v) != {"train", "val", "test"}:
            raise ValueError("splits must define exactly train, val and test")
        if any(r < 0 for r in v.values()):
            raise ValueError("split ratios must be nonnegative")
        if abs(sum(v.values()) - 1.0) > 1e-9:
            raise ValueError(f"split ratios must sum to 1, got {sum(v.values())}")
        return v


class UNetConfig(_Section):
    """Shape of the sketch-to-mask U-Net"""

    input_size: int = 64
    depth: int = Field(default=4, ge=1)
    base_channels: int = Field(default=8, ge=1)
    num_classes: int = Field(default=6, ge=2)
    style_rows: int = Field(default=7, ge=1)
    style_dim: int = Field(default=64, ge=1)

    @field_validator("input_size")
    @classmethod
    def validate_input_size(cls, v):
        if v < 1 or v & (v - 1):
            raise ValueError(f"input_size must be a power of two, got {v}")
        return v

    @model_validator(mode="after")
    def validate_bottleneck(self):
        if self.input_size < 2 ** self.depth:
            raise ValueError(
                f"input_size {self.input_size} too small for depth {self.depth}"
            )
        return self

    @property
    def bottleneck_size(self) -> int:
        return self.input_size // 2 ** self.depth

    @property
    def bottleneck_channels(self) -> int:
        return self.base_channels * 2 ** (self.depth - 1)

    @property
    def bottleneck_features(self) -> int:
        return self.bottleneck_channels * self.bottleneck_size ** 2

    @property
    def style_shape(self) -> Tuple[int, int]:
        return (self.style_rows, self.style_dim)


UNET_PRESETS: Dict[str, UNetConfig] = {
    "desk": UNetConfig(),
    "paper": UNetConfig(input_size=512, depth=7, base_channels=8, style_rows=7, style_dim=512),
    "gradcheck": UNetConfig(input_size=16, depth=2, base_channels=4, style_rows=2, style_dim=8),
}


class TeacherConfig(_Section):
    """Shape and pretraining settings of the frozen mask-to-3D teacher"""

    mask_size: int = Field(default=64, ge=8)
    num_classes: int = Field(default=6, ge=2)
    latent_dim: int = Field(default=16, ge=1)
    style_rows: int = Field(default=7, ge=1)
    style_dim: int = Field(default=64, ge=1)
    encoder_channels: List[int] = Field(default_factory=lambda: [8, 16, 32])
    triplane_resolution: int = Field(default=16, ge=2)
    triplane_channels: int = Field(default=8, ge=1)
    feature_dim: int = Field(default=4, ge=1)
    hidden_dim: int = Field(default=32, ge=1)
    seed: int = Field(default=1234, ge=0)
    pretrain_steps: int = Field(default=0, ge=0)
    pretrain_samples: int = Field(default=32, ge=1)
    pretrain_resolution: int = Field(default=16, ge=2)
    pretrain_lr: float = Field(default=1e-2, gt=0)

    @model_validator(mode="after")
    def validate_encoder(self):
        if not self.encoder_channels:
            raise ValueError("encoder_channels must not be empty")
        if self.mask_size % 2 ** len(self.encoder_channels):
            raise ValueError(
                f"mask_size {self.mask_size} not divisible by 2^{len(self.encoder_channels)}"
            )
        return self

    @property
    def style_shape(self) -> Tuple[int, int]:
        return (self.style_rows, self.style_dim)


class LossConfig(_Section):
    """Loss weights and Dice stabilizer"""

    epsilon: float = Field(default=1e-6, gt=0)
    lambda_sv: float = Field(default=1.0, ge=0)
    lambda_ce: float = Field(default=1.0, ge=0)
    lambda_dice: float = Field(default=1.0, ge=0)


class TrainConfig(_Section):
    """Optimizer and loop settings for sketch-to-mask training"""

    steps: int = Field(default=2000, ge=1)
    batch_size: int = Field(default=8, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0, lt=1)
    beta1: float = Field(default=0.9, gt=0, lt=1)
    beta2: float = Field(default=0.999, gt=0, lt=1)
    stabilizer: float = Field(default=1e-8, gt=0)
    seed: int = Field(default=0, ge=0)
    checkpoint_interval: int = Field(default=500, ge=1)
    log_interval: int = Field(default=50, ge=1)
    augment: bool = True


class AugmentPolicy(_Section):
    """Random identity / dilation / erosion policy"""

    p_identity: float = Field(default=0.5, ge=0)
    p_dilate: float = Field(default=0.25, ge=0)
    p_erode: float = Field(default=0.25, ge=0)
    dilate_kernel: int = 3
    erode_kernel: int = 7
    binarize_threshold: float = Field(default=0.5, ge=0, le=1)

    @field_validator("dilate_kernel", "erode_kernel")
    @classmethod
    def validate_kernel(cls, v):
        if v < 1 or v % 2 == 0:
            raise ValueError(f"kernel must be odd and >= 1, got {v}")
        return v

    @model_validator(mode="after")
    def validate_probabilities(self):
        total = self.p_identity + self.p_dilate + self.p_erode
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"augmentation probabilities must sum to 1, got {total}")
        return self


class RenderConfig(_Section):
    """Ray sampling and camera orbit settings"""

    samples_per_ray: int = Field(default=24, ge=2)
    near: float = Field(default=1.5, gt=0)
    far: float = 3.5
    background: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    image_size: int = Field(default=32, ge=1)
    fov_deg: float = Field(default=45.0, gt=0, lt=180)
    camera_distance: float = Field(default=2.5, gt=0)
    orbit_frames: int = Field(default=8, ge=1)
    orbit_span_deg: float = Field(default=45.0, ge=0)
    orbit_elevation_deg: float = 10.0

    @model_validator(mode="after")
    def validate_range(self):
        if not self.near < self.far:
            raise ValueError(f"need 0 < near < far, got near={self.near} far={self.far}")
        if any(not 0.0 <= c <= 1.0 for c in self.background):
            raise ValueError("background color components must lie in [0, 1]")
        return self


class TsneConfig(_Section):
    """Exact t-SNE optimisation settings"""

    perplexity: float = Field(default=15.0, gt=0)
    iterations: int = Field(default=500, ge=1)
    learning_rate: float = Field(default=100.0, gt=0)
    momentum_early: float = Field(default=0.5, ge=0, lt=1)
    momentum_late: float = Field(default=0.8, ge=0, lt=1)
    momentum_switch: int = Field(default=250, ge=0)
    exaggeration: float = Field(default=4.0, ge=1)
    exaggeration_iterations: int = Field(default=100, ge=0)
    seed: int = Field(default=0, ge=0)


class RunConfig(_Section):
    """Complete configuration of one command invocation"""

    seed: int = Field(default=0, ge=0)
    data: DataConfig = Field(default_factory=DataConfig)
    unet: UNetConfig = Field(default_factory=UNetConfig)
    teacher: TeacherConfig = Field(default_factory=TeacherConfig)
    loss: LossConfig = Field(default_factory=LossConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    augment: AugmentPolicy = Field(default_factory=AugmentPolicy)
    render: RenderConfig = Field(default_factory=RenderConfig)
    tsne: TsneConfig = Field(default_factory=TsneConfig)

    @model_validator(mode="after")
    def validate_pairing(self):
        if self.unet.style_shape != self.teacher.style_shape:
            raise ValueError(
                f"U-Net embedding shape {self.unet.style_shape} must equal "
                f"teacher style shape {self.teacher.style_shape}"
            )
        if self.unet.num_classes != self.teacher.num_classes:
            raise ValueError("unet.num_classes must equal teacher.num_classes")
        if self.unet.input_size != self.data.resolution:
            raise ValueError("unet.input_size must equal data.resolution")
        if self.teacher.mask_size != self.data.resolution:
            raise ValueError("teacher.mask_size must equal data.resolution")
        return self


__all__ = [
    "CLASS_NAMES",
    "DataConfig",
    "UNetConfig",
    "UNET_PRESETS",
    "TeacherConfig",
    "LossConfig",
    "TrainConfig",
    "AugmentPolicy",
    "RenderConfig",
    "TsneConfig",
    "RunConfig",
]

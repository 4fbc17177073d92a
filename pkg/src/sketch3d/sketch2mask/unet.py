"""
Sketch-to-Mask U-Net
Encoder-decoder with skip connections whose bottleneck is projected to the style-vector shape
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..config.schema import UNetConfig
from ..errors import ConfigError
from ..imagery.tensor_io import load_tensor_directory, save_tensor_directory
from ..imagery.types import ProbMap, SegMask, Sketch, Tensor

logger = logging.getLogger(__name__)

LEAKY_SLOPE = 0.2
DTYPE = torch.float64

# Named parameters of SketchUNet, e.g. "down.0.conv1.weight"
UNetParams = Dict[str, torch.Tensor]


@dataclass(frozen=True)
class BottleneckEmbedding:
    """U-Net bottleneck projected to (rows, dim)"""

    values: np.ndarray

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape


class DoubleConv(nn.Module):
    """3x3 conv, leaky rectifier, 3x3 conv, leaky rectifier"""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, padding=1)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = F.leaky_relu(self.conv1(x), LEAKY_SLOPE)
        return F.leaky_relu(self.conv2(x), LEAKY_SLOPE)


class SketchUNet(nn.Module):
    """
    U-Net mapping (B, 1, S, S) sketches to (B, C, S, S) logits

    Encoder level k has base_channels * 2^k channels and ends in a 2x max-pool.
    The pooled bottleneck is flattened and linearly projected to the
    (style_rows, style_dim) embedding; a second linear map brings the
    embedding back to bottleneck features, so the decoder only sees the
    bottleneck through the embedding. The decoder mirrors the encoder with
    2x nearest-neighbor upsampling and skip concatenation, followed by a 1x1
    conv to class logits.
    """

    def __init__(self, config: UNetConfig):
        super().__init__()
        self.config = config
        widths = [config.base_channels * 2 ** k for k in range(config.depth)]

        self.down = nn.ModuleList()
        in_channels = 1
        for width in widths:
            self.down.append(DoubleConv(in_channels, width))
            in_channels = width

        style_size = config.style_rows * config.style_dim
        self.project = nn.Linear(config.bottleneck_features, style_size)
        self.unproject = nn.Linear(style_size, config.bottleneck_features)

        self.up = nn.ModuleList()
        for k, width in enumerate(widths):
            below = widths[k + 1] if k + 1 < len(widths) else config.bottleneck_channels
            self.up.append(DoubleConv(below + width, width))

        self.head = nn.Conv2d(widths[0], config.num_classes, 1)

    def forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        config = self.config
        if x.shape[-2:] != (config.input_size, config.input_size):
            raise ConfigError(
                f"Sketch size {tuple(x.shape[-2:])} does not match input_size {config.input_size}"
            )

        skips = []
        h = x
        for block in self.down:
            h = block(h)
            skips.append(h)
            h = F.max_pool2d(h, 2)

        batch = h.shape[0]
        embedding = self.project(h.flatten(1))
        h = F.leaky_relu(self.unproject(embedding), LEAKY_SLOPE)
        h = h.view(batch, config.bottleneck_channels, config.bottleneck_size, config.bottleneck_size)

        for k in reversed(range(config.depth)):
            h = F.interpolate(h, scale_factor=2, mode="nearest")
            h = self.up[k](torch.cat([h, skips[k]], dim=1))

        logits = self.head(h)
        return logits, embedding.view(batch, config.style_rows, config.style_dim)


def glorot_bound(shape: Sequence[int]) -> float:
    """b = sqrt(6 / (fan_in + fan_out)) for linear (out, in) or conv (out, in, k, k) weights"""
    receptive = int(np.prod(shape[2:])) if len(shape) > 2 else 1
    fan_in = shape[1] * receptive
    fan_out = shape[0] * receptive
    return math.sqrt(6.0 / (fan_in + fan_out))


def init_params(config: UNetConfig, seed: int) -> SketchUNet:
    """
    Build a 64-bit U-Net with deterministic Glorot-uniform weights and zero biases

    Args:
        config: Network shape
        seed: Generator seed; same (config, seed) gives identical parameters

    Returns:
        SketchUNet whose named parameters are the UNetParams
    """
    model = SketchUNet(config).to(DTYPE)
    generator = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for name, param in model.named_parameters():
            if name.endswith("bias"):
                param.zero_()
            else:
                bound = glorot_bound(param.shape)
                param.uniform_(-bound, bound, generator=generator)
    return model


def sketches_to_batch(sketches: Sequence[Sketch]) -> torch.Tensor:
    """Stack sketches into a (B, 1, H, W) float64 tensor"""
    return torch.from_numpy(np.stack([s.pixels for s in sketches])[:, None].astype(np.float64))


def forward(model: SketchUNet, sketch: Sketch) -> Tuple[Tensor, BottleneckEmbedding]:
    """
    Run one sketch through the U-Net

    Returns:
        (logits as an (H, W, C) Tensor, bottleneck embedding (L, D))
    """
    with torch.no_grad():
        logits, embedding = model(sketches_to_batch([sketch]))
    return (
        Tensor(logits[0].permute(1, 2, 0).numpy()),
        BottleneckEmbedding(embedding[0].numpy().copy()),
    )


def softmax_probabilities(logits_hwc: np.ndarray) -> np.ndarray:
    """Per-pixel softmax over the last axis"""
    return torch.softmax(torch.from_numpy(np.array(logits_hwc, dtype=np.float64, copy=True)), dim=-1).numpy()


def predict_mask(model: SketchUNet, sketch: Sketch) -> Tuple[SegMask, ProbMap]:
    """Per-pixel softmax and argmax; ties go to the lower class index"""
    logits, _ = forward(model, sketch)
    values = logits.values
    height, width, num_classes = values.shape
    probs = softmax_probabilities(values)
    labels = np.argmax(values, axis=-1)
    return (
        SegMask(labels, num_classes),
        ProbMap(probs.reshape(height * width, num_classes), width, height),
    )


def save_unet(model: SketchUNet, directory: Union[str, Path], extra: Dict = None) -> None:
    """Checkpoint parameters as S3DT tensors plus a JSON shape manifest"""
    tensors = {name: p.detach().numpy() for name, p in model.state_dict().items()}
    manifest = {"kind": "sketch2mask", "config": model.config.model_dump()}
    if extra:
        manifest.update(extra)
    save_tensor_directory(tensors, directory, manifest)
    logger.info(f"Saved U-Net checkpoint to {directory}")


def load_unet(directory: Union[str, Path]) -> Tuple[SketchUNet, Dict]:
    """Restore a U-Net checkpoint; tensor shapes must match the stored config"""
    tensors, manifest = load_tensor_directory(directory)
    if manifest.get("kind") != "sketch2mask":
        raise ConfigError(f"{directory} is not a sketch2mask checkpoint")
    config = UNetConfig(**manifest["config"])
    model = SketchUNet(config).to(DTYPE)
    expected = model.state_dict()
    missing: List[str] = sorted(set(expected) - set(tensors))
    if missing:
        raise ConfigError(f"Checkpoint {directory} lacks tensors: {missing}")
    for name, ref in expected.items():
        if tuple(ref.shape) != tensors[name].shape:
            raise ConfigError(f"Tensor {name} shape {tensors[name].shape} does not match config {tuple(ref.shape)}")
    model.load_state_dict({name: torch.from_numpy(tensors[name]) for name in expected})
    return model, manifest


__all__ = [
    "LEAKY_SLOPE",
    "UNetParams",
    "BottleneckEmbedding",
    "SketchUNet",
    "glorot_bound",
    "init_params",
    "sketches_to_batch",
    "forward",
    "softmax_probabilities",
    "predict_mask",
    "save_unet",
    "load_unet",
]

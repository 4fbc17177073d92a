"""Trainable sketch-to-mask U-Net"""

from ..config.schema import UNET_PRESETS, UNetConfig
from .unet import (
    BottleneckEmbedding,
    SketchUNet,
    UNetParams,
    forward,
    init_params,
    load_unet,
    predict_mask,
    save_unet,
    sketches_to_batch,
)

"""Raster and tensor types, netpbm and S3DT codecs, class palette"""

from .netpbm import (
    load_mask_pgm,
    load_pgm,
    load_ppm,
    round_half_up,
    save_mask_pgm,
    save_pgm,
    save_ppm,
)
from .palette import class_color, colorize_mask, palette
from .tensor_io import (
    decode_tensor,
    encode_tensor,
    load_tensor,
    load_tensor_directory,
    save_tensor,
    save_tensor_directory,
)
from .types import OneHotMask, ProbMap, SegMask, Sketch, Tensor, one_hot

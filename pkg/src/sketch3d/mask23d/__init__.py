"""
Mask-to-3D Teacher Module
Conditional style encoder, tri-plane synthesis, neural field and volume rendering
"""

from .camera import Camera, frontal_camera, make_rays, orbit_camera, orbit_cameras
from .encoder import LatentCode, StyleEncoder, StyleVector
from .field import FieldBatch, FieldMLP, FieldSample
from .renderer import Composite, RenderOutput, composite, render_rays, sample_depths, transmittance_weights
from .teacher import (
    Mask23DParams,
    MaskTo3DTeacher,
    PretrainReport,
    build_teacher,
    encode,
    field_eval,
    field_points,
    init_frozen,
    load_teacher,
    masks_to_onehot,
    pretrain_semantic,
    render_image,
    render_orbit,
    render_ray,
    save_teacher,
    style_target,
    style_targets,
    synth_triplane,
    upsample,
)
from .triplane import TriPlane, TriPlaneSynthesizer, sample_planes, sample_triplane
from .upsampler import ToyUpsampler, enlarge_nearest

__all__ = [
    "Camera",
    "frontal_camera",
    "make_rays",
    "orbit_camera",
    "orbit_cameras",
    "LatentCode",
    "StyleEncoder",
    "StyleVector",
    "FieldBatch",
    "FieldMLP",
    "FieldSample",
    "Composite",
    "RenderOutput",
    "composite",
    "render_rays",
    "sample_depths",
    "transmittance_weights",
    "Mask23DParams",
    "MaskTo3DTeacher",
    "PretrainReport",
    "build_teacher",
    "encode",
    "field_eval",
    "field_points",
    "init_frozen",
    "load_teacher",
    "masks_to_onehot",
    "pretrain_semantic",
    "render_image",
    "render_orbit",
    "render_ray",
    "save_teacher",
    "style_target",
    "style_targets",
    "synth_triplane",
    "upsample",
    "TriPlane",
    "TriPlaneSynthesizer",
    "sample_planes",
    "sample_triplane",
    "ToyUpsampler",
    "enlarge_nearest",
]

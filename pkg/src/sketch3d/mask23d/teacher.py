"""
Frozen Mask-to-3D Teacher
Style encoder, tri-plane synthesizer, neural field and toy upsampler behind one
parameter set, plus the module-level operations that drive them
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn as nn

from ..config.schema import RenderConfig, TeacherConfig
from ..errors import ConfigError, StateError
from ..imagery.tensor_io import load_tensor_directory, save_tensor_directory
from ..imagery.types import SegMask
from ..sketch2mask.unet import glorot_bound
from .camera import Camera, frontal_camera, make_rays, orbit_cameras
from .encoder import LatentCode, StyleEncoder, StyleVector
from .field import FieldBatch, FieldMLP, FieldSample
from .renderer import RenderOutput, render_rays
from .triplane import TriPlane, TriPlaneSynthesizer, sample_planes
from .upsampler import ToyUpsampler, enlarge_nearest

logger = logging.getLogger(__name__)

DTYPE = torch.float64
CE_CLAMP = 1e-12
PRETRAIN_BATCH = 4


class MaskTo3DTeacher(nn.Module):
    """All mask-to-3D weights plus the frozen flag"""

    def __init__(self, config: TeacherConfig):
        super().__init__()
        self.config = config
        self.frozen = False
        self.encoder = StyleEncoder(
            config.mask_size,
            config.num_classes,
            config.encoder_channels,
            config.latent_dim,
            config.style_rows,
            config.style_dim,
        )
        self.synthesizer = TriPlaneSynthesizer(
            config.style_rows, config.style_dim, config.triplane_channels, config.triplane_resolution
        )
        self.field = FieldMLP(config.triplane_channels, config.hidden_dim, config.feature_dim, config.num_classes)
        self.upsampler = ToyUpsampler(config.feature_dim)

    def freeze(self) -> None:
        self.requires_grad_(False)
        self.frozen = True

    def trainable_parameters(self) -> List[nn.Parameter]:
        """Parameters for an optimizer; refused once frozen"""
        if self.frozen:
            raise StateError("Mask-to-3D parameters are frozen")
        return list(self.parameters())

    def encode_batch(self, onehot: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        return self.encoder(onehot, z)

    def summary(self) -> Dict[str, int]:
        c = self.config
        return {
            "L": c.style_rows,
            "D": c.style_dim,
            "R": c.triplane_resolution,
            "F": c.triplane_channels,
            "l": c.feature_dim,
            "C": c.num_classes,
            "latent_dim": c.latent_dim,
        }


# Parameter set of the mask-to-3D module
Mask23DParams = MaskTo3DTeacher


def _check_mask(teacher: MaskTo3DTeacher, mask: SegMask) -> None:
    size = teacher.config.mask_size
    if mask.shape != (size, size):
        raise ConfigError(f"Mask shape {mask.shape} does not match teacher mask_size {size}")
    if mask.num_classes != teacher.config.num_classes:
        raise ConfigError(
            f"Mask has {mask.num_classes} classes, teacher expects {teacher.config.num_classes}"
        )


def masks_to_onehot(masks: Sequence[SegMask], num_classes: int) -> torch.Tensor:
    """(B, C, S, S) float64 one-hot batch"""
    labels = torch.from_numpy(np.stack([m.labels for m in masks]))
    return torch.nn.functional.one_hot(labels, num_classes).permute(0, 3, 1, 2).to(DTYPE)


def encode(teacher: MaskTo3DTeacher, mask: SegMask, z: LatentCode) -> StyleVector:
    """w+ = E(mask, z)"""
    _check_mask(teacher, mask)
    if z.dim != teacher.config.latent_dim:
        raise ConfigError(f"Latent code has dim {z.dim}, teacher expects {teacher.config.latent_dim}")
    with torch.no_grad():
        w = teacher.encode_batch(
            masks_to_onehot([mask], teacher.config.num_classes),
            torch.from_numpy(z.values)[None],
        )
    return StyleVector(w[0].numpy().copy())


def style_target(teacher: MaskTo3DTeacher, mask: SegMask) -> StyleVector:
    """Style vector of a ground-truth mask with the zero latent code"""
    return encode(teacher, mask, LatentCode.zeros(teacher.config.latent_dim))


def style_targets(teacher: MaskTo3DTeacher, masks: Sequence[SegMask]) -> torch.Tensor:
    """Batched style_target as a (B, L, D) tensor"""
    for mask in masks:
        _check_mask(teacher, mask)
    z = torch.zeros(len(masks), teacher.config.latent_dim, dtype=DTYPE)
    with torch.no_grad():
        return teacher.encode_batch(masks_to_onehot(masks, teacher.config.num_classes), z)


def synth_triplane(teacher: MaskTo3DTeacher, w: StyleVector) -> TriPlane:
    if w.shape != teacher.config.style_shape:
        raise ConfigError(f"Style vector shape {w.shape} does not match {teacher.config.style_shape}")
    with torch.no_grad():
        return TriPlane(teacher.synthesizer(torch.from_numpy(w.values)))


def field_points(teacher: MaskTo3DTeacher, planes: TriPlane, points) -> FieldBatch:
    """Vectorized field evaluation at (P, 3) points"""
    p = torch.as_tensor(np.asarray(points, dtype=np.float64).reshape(-1, 3))
    with torch.no_grad():
        return teacher.field(sample_planes(planes.planes, p))


def field_eval(teacher: MaskTo3DTeacher, planes: TriPlane, point) -> FieldSample:
    out = field_points(teacher, planes, point)
    return FieldSample(
        color=out.color[0].numpy(),
        density=float(out.density[0]),
        feature=out.feature[0].numpy(),
        semantic=out.semantic[0].numpy(),
    )


def render_ray(
    teacher: MaskTo3DTeacher, planes: TriPlane, origin, direction, rcfg: RenderConfig
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """(color, semantic, feature, weight_sum) for one ray"""
    o = torch.as_tensor(np.asarray(origin, dtype=np.float64).reshape(1, 3))
    d = torch.as_tensor(np.asarray(direction, dtype=np.float64).reshape(1, 3))
    with torch.no_grad():
        out = render_rays(planes.planes, teacher.field, o, d, rcfg)
    return out.color[0].numpy(), out.semantic[0].numpy(), out.feature[0].numpy(), float(out.weight_sum[0])


def render_image(teacher: MaskTo3DTeacher, w: StyleVector, camera: Camera, rcfg: RenderConfig) -> RenderOutput:
    """Synthesize the tri-plane for w and volume-render every pixel of the camera"""
    planes = synth_triplane(teacher, w)
    origins, directions = make_rays(camera)
    with torch.no_grad():
        out = render_rays(planes.planes, teacher.field, torch.from_numpy(origins), torch.from_numpy(directions), rcfg)
    h, wd = camera.height, camera.width
    return RenderOutput(
        color=out.color.numpy().reshape(h, wd, 3),
        semantic=out.semantic.numpy().reshape(h, wd, -1),
        feature=out.feature.numpy().reshape(h, wd, -1),
        weight_sum=out.weight_sum.numpy().reshape(h, wd),
    )


def render_orbit(teacher: MaskTo3DTeacher, w: StyleVector, rcfg: RenderConfig) -> List[RenderOutput]:
    return [render_image(teacher, w, camera, rcfg) for camera in orbit_cameras(rcfg)]


def upsample(teacher: MaskTo3DTeacher, output: RenderOutput) -> Tuple[np.ndarray, np.ndarray]:
    """(2H, 2W, 3) color through the toy upsampler and (2H, 2W, C) nearest-enlarged semantics"""
    color = torch.from_numpy(output.color).permute(2, 0, 1)[None]
    feature = torch.from_numpy(output.feature).permute(2, 0, 1)[None]
    semantic = torch.from_numpy(output.semantic).permute(2, 0, 1)[None]
    with torch.no_grad():
        color_hr = teacher.upsampler(color, feature)[0].permute(1, 2, 0).numpy()
        semantic_hr = enlarge_nearest(semantic)[0].permute(1, 2, 0).numpy()
    return color_hr, semantic_hr


def init_frozen(config: TeacherConfig, seed: Optional[int] = None, frozen: bool = True) -> MaskTo3DTeacher:
    """
    Deterministic random teacher

    Weights are Glorot-uniform, biases zero, base grids uniform in [-1, 1] and
    the upsampler starts as the identity on color. With frozen=False the
    teacher can be pretrained before freeze() is called.
    """
    seed = config.seed if seed is None else seed
    teacher = MaskTo3DTeacher(config).to(DTYPE)
    generator = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for name, param in teacher.named_parameters():
            if name.startswith("upsampler."):
                continue
            if name == "synthesizer.base":
                param.uniform_(-1.0, 1.0, generator=generator)
            elif name == "synthesizer.mod_weight":
                bound = glorot_bound((param.shape[2], param.shape[1]))
                param.uniform_(-bound, bound, generator=generator)
            elif name.endswith("bias"):
                param.zero_()
            else:
                bound = glorot_bound(param.shape)
                param.uniform_(-bound, bound, generator=generator)
    teacher.upsampler.identity_init()
    if frozen:
        teacher.freeze()
    return teacher


@dataclass
class PretrainReport:
    initial_ce: float
    final_ce: float
    history: List[float] = field(default_factory=list)


def _downsample_labels(mask: SegMask, size: int) -> torch.Tensor:
    """Nearest-neighbor label lookup at the centers of a size x size grid"""
    idx = np.floor((np.arange(size) + 0.5) * mask.height / size).astype(np.int64)
    return torch.from_numpy(mask.labels[np.ix_(idx, idx)].ravel())


def _semantic_ce(
    teacher: MaskTo3DTeacher,
    masks: Sequence[SegMask],
    targets: Sequence[torch.Tensor],
    origins: torch.Tensor,
    directions: torch.Tensor,
    rcfg: RenderConfig,
) -> torch.Tensor:
    """Mean cross-entropy of frontal semantic renders, residual mass counted as background"""
    onehot = masks_to_onehot(masks, teacher.config.num_classes)
    z = torch.zeros(len(masks), teacher.config.latent_dim, dtype=DTYPE)
    styles = teacher.encode_batch(onehot, z)
    total = torch.zeros((), dtype=DTYPE)
    for w, target in zip(styles, targets):
        out = render_rays(teacher.synthesizer(w), teacher.field, origins, directions, rcfg)
        probs = out.semantic.clone()
        probs[:, 0] = probs[:, 0] + (1.0 - out.weight_sum)
        picked = probs.gather(1, target[:, None])[:, 0].clamp_min(CE_CLAMP)
        total = total - torch.log(picked).mean()
    return total / len(masks)


def pretrain_semantic(
    teacher: MaskTo3DTeacher,
    masks: Sequence[SegMask],
    steps: int,
    rcfg: RenderConfig,
    resolution: Optional[int] = None,
    learning_rate: Optional[float] = None,
) -> PretrainReport:
    """
    Fit frontal semantic renders to the input masks, then freeze

    Each step takes the next PRETRAIN_BATCH masks in cyclic order. The CE over
    the whole mask set is measured before the first and after the last step.
    """
    params = teacher.trainable_parameters()
    if not masks:
        raise ConfigError("pretrain_semantic needs at least one mask")
    for mask in masks:
        _check_mask(teacher, mask)

    resolution = resolution or teacher.config.pretrain_resolution
    learning_rate = learning_rate or teacher.config.pretrain_lr
    origins, directions = (torch.from_numpy(a) for a in make_rays(frontal_camera(rcfg, size=resolution)))
    targets = [_downsample_labels(m, resolution) for m in masks]

    with torch.no_grad():
        initial = float(_semantic_ce(teacher, masks, targets, origins, directions, rcfg))

    optimizer = torch.optim.Adam(params, lr=learning_rate)
    history = []
    n = len(masks)
    for step in range(steps):
        batch = [(step * PRETRAIN_BATCH + j) % n for j in range(min(PRETRAIN_BATCH, n))]
        optimizer.zero_grad()
        loss = _semantic_ce(
            teacher, [masks[i] for i in batch], [targets[i] for i in batch], origins, directions, rcfg
        )
        loss.backward()
        optimizer.step()
        history.append(float(loss))
        if step % 50 == 0:
            logger.info(f"teacher pretrain step {step}: ce={history[-1]:.6f}")

    with torch.no_grad():
        final = float(_semantic_ce(teacher, masks, targets, origins, directions, rcfg))
    teacher.freeze()
    logger.info(f"teacher pretrain finished: ce {initial:.6f} -> {final:.6f} over {steps} steps")
    return PretrainReport(initial_ce=initial, final_ce=final, history=history)


def build_teacher(
    config: TeacherConfig, rcfg: RenderConfig, masks: Sequence[SegMask] = ()
) -> Tuple[MaskTo3DTeacher, Optional[PretrainReport]]:
    """Random teacher, pretrained on up to pretrain_samples masks when pretrain_steps > 0; always frozen"""
    if config.pretrain_steps == 0 or not masks:
        return init_frozen(config), None
    teacher = init_frozen(config, frozen=False)
    report = pretrain_semantic(teacher, list(masks)[: config.pretrain_samples], config.pretrain_steps, rcfg)
    return teacher, report


def save_teacher(teacher: MaskTo3DTeacher, directory: Union[str, Path]) -> None:
    tensors = {name: p.detach().numpy() for name, p in teacher.state_dict().items()}
    manifest = {
        "kind": "mask23d",
        "config": teacher.config.model_dump(),
        "shapes": teacher.summary(),
        "frozen": teacher.frozen,
    }
    save_tensor_directory(tensors, directory, manifest)
    logger.info(f"Saved teacher checkpoint to {directory}")


def load_teacher(directory: Union[str, Path]) -> MaskTo3DTeacher:
    """Restore a teacher checkpoint; the result is always frozen"""
    tensors, manifest = load_tensor_directory(directory)
    if manifest.get("kind") != "mask23d":
        raise ConfigError(f"{directory} is not a mask23d checkpoint")
    teacher = MaskTo3DTeacher(TeacherConfig(**manifest["config"])).to(DTYPE)
    expected = teacher.state_dict()
    for name, ref in expected.items():
        if name not in tensors:
            raise ConfigError(f"Checkpoint {directory} lacks tensor {name}")
        if tuple(ref.shape) != tensors[name].shape:
            raise ConfigError(f"Tensor {name} shape {tensors[name].shape} does not match config {tuple(ref.shape)}")
    teacher.load_state_dict({name: torch.from_numpy(tensors[name]) for name in expected})
    teacher.freeze()
    return teacher


__all__ = [
    "MaskTo3DTeacher",
    "Mask23DParams",
    "PretrainReport",
    "masks_to_onehot",
    "encode",
    "style_target",
    "style_targets",
    "synth_triplane",
    "field_points",
    "field_eval",
    "render_ray",
    "render_image",
    "render_orbit",
    "upsample",
    "init_frozen",
    "pretrain_semantic",
    "build_teacher",
    "save_teacher",
    "load_teacher",
]

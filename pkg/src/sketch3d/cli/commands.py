"""
CLI Command Implementations
Each command takes the parsed argparse namespace and returns an exit code
"""

import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from ..analytics.embedding import affinities, collect_embeddings, export_scatter, tsne_embed
from ..analytics.segmentation import evaluate_split
from ..augment.morphology import Branch, apply_branch
from ..config.schema import RunConfig
from ..config.settings import ConfigLoader
from ..datagen.dataset import DatasetManifest, generate_dataset, load_split
from ..errors import ConfigError
from ..imagery.netpbm import load_mask_pgm, load_pgm, save_mask_pgm, save_pgm, save_ppm
from ..imagery.palette import colorize_mask
from ..imagery.tensor_io import MANIFEST_FILE
from ..imagery.types import SegMask
from ..mask23d.camera import frontal_camera, orbit_cameras
from ..mask23d.encoder import LatentCode, StyleVector
from ..mask23d.renderer import RenderOutput
from ..mask23d.teacher import MaskTo3DTeacher, build_teacher, encode, load_teacher, render_image, upsample
from ..sketch2mask.unet import load_unet, predict_mask
from ..training.ablation import run_ablation
from ..training.loop import CHECKPOINT_DIR, resolve_teacher_dir, train_loop
from .selftest import ORACLES, run_selftest

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"


def load_run_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return ConfigLoader.default()
    return ConfigLoader.from_json_file(path)


def resolve_checkpoint(path: str) -> Path:
    """
    U-Net checkpoint directory for a path

    Accepts a checkpoint directory itself or a training output directory, in
    which case the latest checkpoint is used.
    """
    path = Path(path)
    if (path / MANIFEST_FILE).is_file():
        return path
    steps = sorted((path / CHECKPOINT_DIR).glob("step_*")) if (path / CHECKPOINT_DIR).is_dir() else []
    if not steps:
        raise ConfigError(f"No checkpoint found at {path}")
    return steps[-1]


def load_checkpoint(path: str) -> tuple:
    """(U-Net, frozen teacher, checkpoint directory) from a training checkpoint"""
    ckpt = resolve_checkpoint(path)
    model, manifest = load_unet(ckpt)
    teacher = load_teacher(resolve_teacher_dir(ckpt, manifest))
    logger.info(f"Loaded checkpoint {ckpt} (step {manifest.get('step')})")
    return model, teacher, ckpt


def _render_config(args, checkpoint: Optional[Path] = None) -> RunConfig:
    """Explicit --config, else the config saved next to the checkpoints, else defaults"""
    if getattr(args, "config", None):
        return load_run_config(args.config)
    if checkpoint is not None:
        for candidate in (checkpoint.parent.parent / CONFIG_FILE, checkpoint.parent / CONFIG_FILE):
            if candidate.is_file():
                return load_run_config(str(candidate))
    return ConfigLoader.default()


def latent_code(dim: int, seed: Optional[int]) -> LatentCode:
    return LatentCode.zeros(dim) if seed is None else LatentCode.sample(dim, seed)


def semantic_labels(semantic: np.ndarray, weight_sum: np.ndarray) -> SegMask:
    """Argmax of the semantic image with the residual transmittance on class 0"""
    probs = semantic.copy()
    probs[..., 0] += 1.0 - weight_sum
    return SegMask(np.argmax(probs, axis=-1), probs.shape[-1])


def write_views(teacher: MaskTo3DTeacher, w: StyleVector, config: RunConfig, out_dir: Path) -> List[Path]:
    """Orbit frames, their semantic maps and the upsampled high-resolution pair"""
    written = []
    for k, camera in enumerate(orbit_cameras(config.render)):
        output = render_image(teacher, w, camera, config.render)
        color_hr, semantic_hr = upsample(teacher, output)
        weight_hr = np.repeat(np.repeat(output.weight_sum, 2, axis=0), 2, axis=1)
        frame = out_dir / f"frame_{k:03d}.ppm"
        save_ppm(output.color, frame)
        save_mask_pgm(semantic_labels(output.semantic, output.weight_sum), out_dir / f"semantic_{k:03d}.pgm")
        save_ppm(np.clip(color_hr, 0.0, 1.0), out_dir / f"frame_hr_{k:03d}.ppm")
        save_mask_pgm(semantic_labels(semantic_hr, weight_hr), out_dir / f"semantic_hr_{k:03d}.pgm")
        written.append(frame)
    logger.info(f"Wrote {len(written)} orbit views to {out_dir}")
    return written


def _frontal(teacher: MaskTo3DTeacher, w: StyleVector, config: RunConfig, out_dir: Path) -> RenderOutput:
    output = render_image(teacher, w, frontal_camera(config.render), config.render)
    save_ppm(output.color, out_dir / "frontal.ppm")
    save_mask_pgm(semantic_labels(output.semantic, output.weight_sum), out_dir / "frontal_semantic.pgm")
    return output


def _print_json(payload) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n")


def cmd_gen_data(args) -> int:
    config = load_run_config(args.config)
    updates = {k: v for k, v in {"root": args.root, "count": args.count, "seed": args.seed}.items() if v is not None}
    data = config.data.model_copy(update=updates)
    manifest = DatasetManifest.from_config(data)
    sizes = generate_dataset(manifest, allow_empty=data.allow_empty, workers=args.workers)
    _print_json({"root": manifest.root, "splits": sizes})
    return 0


def cmd_train(args) -> int:
    config = load_run_config(args.config)
    samples = load_split(args.data, "train")
    teacher, report = build_teacher(config.teacher, config.render, [s.mask for s in samples])
    if report is not None:
        logger.info(f"Teacher pretraining: ce {report.initial_ce:.6f} -> {report.final_ce:.6f}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_FILE).write_text(config.model_dump_json(indent=2) + "\n")
    result = train_loop(samples, config, teacher, out_dir=out)
    _print_json(
        {
            "initial": result.initial_report.to_row(1),
            "final": result.final_report.to_row(config.train.steps),
            "checkpoints": [str(p) for p in result.checkpoints],
        }
    )
    return 0


def cmd_eval(args) -> int:
    model, _, _ = load_checkpoint(args.checkpoint)
    samples = load_split(args.data, args.split, limit=args.limit)
    results = evaluate_split(model, samples)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps(results, indent=2, sort_keys=True, default=float) + "\n")
    _print_json(results)
    return 0


def cmd_infer(args) -> int:
    model, teacher, ckpt = load_checkpoint(args.checkpoint)
    config = _render_config(args, ckpt)
    sketch = load_pgm(args.sketch)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    mask, _ = predict_mask(model, sketch)
    save_mask_pgm(mask, out / "mask.pgm")
    save_ppm(colorize_mask(mask), out / "mask_color.ppm")
    w = encode(teacher, mask, latent_code(teacher.config.latent_dim, args.latent_seed))
    _frontal(teacher, w, config, out)
    frames = write_views(teacher, w, config, out)
    _print_json({"mask": str(out / "mask.pgm"), "frames": [str(f) for f in frames]})
    return 0


def cmd_render(args) -> int:
    if args.teacher:
        teacher, ckpt = load_teacher(args.teacher), None
    elif args.checkpoint:
        _, teacher, ckpt = load_checkpoint(args.checkpoint)
    else:
        raise ConfigError("render needs --checkpoint or --teacher")
    config = _render_config(args, ckpt)
    mask = load_mask_pgm(args.mask, teacher.config.num_classes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    w = encode(teacher, mask, latent_code(teacher.config.latent_dim, args.latent_seed))
    frames = write_views(teacher, w, config, out)
    _print_json({"frames": [str(f) for f in frames]})
    return 0


def cmd_tsne(args) -> int:
    model, _, ckpt = load_checkpoint(args.checkpoint)
    config = _render_config(args, ckpt)
    samples = load_split(args.data, args.split, limit=args.limit)
    embeddings = collect_embeddings(model, samples)
    perplexity = args.perplexity if args.perplexity is not None else config.tsne.perplexity
    coords = tsne_embed(affinities(embeddings.points, perplexity), config.tsne)
    csv_path, ppm_path = export_scatter(coords, embeddings.labels, args.out)
    _print_json({"csv": str(csv_path), "ppm": str(ppm_path), "n": embeddings.n})
    return 0


def cmd_augment_preview(args) -> int:
    config = load_run_config(args.config)
    sketch = load_pgm(args.sketch)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_pgm(sketch, out / "original.pgm")
    for branch in Branch:
        save_pgm(apply_branch(sketch, branch, config.augment), out / f"{branch.value}.pgm")
    _print_json({"out": str(out), "branches": [b.value for b in Branch]})
    return 0


def cmd_selftest(args) -> int:
    known = [name for name, _ in ORACLES]
    unknown = sorted(set(args.only or []) - set(known))
    if unknown:
        raise ConfigError(f"Unknown oracle(s) {unknown}; choose from {known}")
    table = run_selftest(only=args.only)
    for row in table.itertuples():
        status = "PASS" if row.passed else "FAIL"
        sys.stdout.write(f"{status} {row.oracle} ({row.seconds:.2f}s) {row.detail}\n")
    return 0 if bool(table.passed.all()) else 2


def cmd_ablation(args) -> int:
    seeds = _seed_list(args.seeds)
    config = load_run_config(args.config)
    train = load_split(args.data, "train")
    test = load_split(args.data, "test")
    teacher, _ = build_teacher(config.teacher, config.render, [s.mask for s in train])
    result = run_ablation(
        config, train, test, teacher, seeds=seeds, embedding_view=args.embedding_view
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result.table.to_csv(out / "ablation.csv", index=False)
    (out / "ablation_summary.json").write_text(json.dumps(result.summary, indent=2, sort_keys=True, default=float) + "\n")
    _print_json(result.summary)
    return 0


def _seed_list(text: str) -> Sequence[int]:
    try:
        seeds = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"--seeds must be a comma-separated list of integers, got {text!r}") from e
    if not seeds:
        raise ConfigError("--seeds is empty")
    return seeds


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "infer": cmd_infer,
    "render": cmd_render,
    "tsne": cmd_tsne,
    "augment-preview": cmd_augment_preview,
    "selftest": cmd_selftest,
    "ablation": cmd_ablation,
}


__all__ = ["COMMANDS", "load_run_config", "resolve_checkpoint", "load_checkpoint", "latent_code", "write_views"]

"""
Ablation Runs
Train the full objective against variants without L_SV or without augmentation
across seeds and compare test metrics and the evaluated style loss
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import pandas as pd

from ..analytics.embedding import affinities, collect_embeddings, silhouette, tsne_embed
from ..analytics.segmentation import evaluate_split
from ..config.schema import RunConfig
from ..datagen.dataset import Sample
from ..errors import S3DError
from ..mask23d.teacher import MaskTo3DTeacher
from ..sketch2mask.unet import SketchUNet
from .loop import train_loop
from .steps import evaluate_style_loss

logger = logging.getLogger(__name__)

ARMS = ("full", "no_sv", "no_augment")
MAP_MARGIN = 0.02
ABLATION_COLUMNS = ["arm", "seed", "miou", "map", "l_sv", "initial_l_total", "final_l_total"]


def arm_config(config: RunConfig, arm: str, seed: int) -> RunConfig:
    """Run configuration of one ablation arm with the given training seed"""
    train = config.train.model_copy(update={"seed": seed})
    loss = config.loss
    if arm == "no_sv":
        loss = loss.model_copy(update={"lambda_sv": 0.0})
    elif arm == "no_augment":
        train = train.model_copy(update={"augment": False})
    elif arm != "full":
        raise ValueError(f"Unknown ablation arm {arm!r}; expected one of {ARMS}")
    return config.model_copy(update={"train": train, "loss": loss})


@dataclass
class AblationResult:
    table: pd.DataFrame
    summary: Dict[str, object] = field(default_factory=dict)


def _embedding_silhouette(model: SketchUNet, samples: Sequence[Sample], config: RunConfig) -> Optional[float]:
    embeddings = collect_embeddings(model, samples)
    perplexity = min(config.tsne.perplexity, (embeddings.n - 1) / 3.0)
    try:
        coords = tsne_embed(affinities(embeddings.points, perplexity), config.tsne)
        return silhouette(coords, embeddings.labels)
    except S3DError as e:
        logger.warning(f"Embedding silhouette unavailable: {e}")
        return None


def summarize(table: pd.DataFrame) -> Dict[str, object]:
    """Per-arm medians and the direction checks between full and no_sv"""
    medians = table.groupby("arm")[["miou", "map", "l_sv"]].median()
    summary: Dict[str, object] = {"medians": medians.to_dict(orient="index")}
    if {"full", "no_sv"} <= set(medians.index):
        paired = table.pivot(index="seed", columns="arm", values="l_sv")
        summary["sv_lower_every_seed"] = bool((paired["full"] < paired["no_sv"]).all())
        summary["map_noninferior"] = bool(
            medians.loc["full", "map"] >= medians.loc["no_sv", "map"] - MAP_MARGIN
        )
    return summary


def run_ablation(
    config: RunConfig,
    train_samples: Sequence[Sample],
    test_samples: Sequence[Sample],
    teacher: MaskTo3DTeacher,
    seeds: Sequence[int] = (0, 1, 2, 3, 4),
    arms: Sequence[str] = ARMS,
    embedding_view: bool = False,
) -> AblationResult:
    """
    Train every (arm, seed) pair and evaluate it on the test samples

    With embedding_view, the first seed's full and no_sv models also get a
    t-SNE silhouette of their test embeddings grouped by sample group; it is
    reported only.
    """
    rows: List[Dict[str, object]] = []
    first_models: Dict[str, SketchUNet] = {}
    for arm in arms:
        for seed in seeds:
            cfg = arm_config(config, arm, seed)
            logger.info(f"Ablation arm={arm} seed={seed}")
            result = train_loop(train_samples, cfg, teacher)
            metrics = evaluate_split(result.model, test_samples)
            rows.append(
                {
                    "arm": arm,
                    "seed": seed,
                    "miou": metrics["miou"],
                    "map": metrics["map"],
                    "l_sv": evaluate_style_loss(
                        result.model, teacher, [(s.sketch, s.mask) for s in test_samples]
                    ),
                    "initial_l_total": result.initial_report.l_total,
                    "final_l_total": result.final_report.l_total,
                }
            )
            if seed == seeds[0]:
                first_models[arm] = result.model

    table = pd.DataFrame(rows, columns=ABLATION_COLUMNS)
    summary = summarize(table)
    if embedding_view:
        for arm in ("full", "no_sv"):
            if arm in first_models:
                summary[f"silhouette_{arm}"] = _embedding_silhouette(first_models[arm], test_samples, config)
    logger.info(f"Ablation summary: {summary}")
    return AblationResult(table=table, summary=summary)


__all__ = ["ARMS", "MAP_MARGIN", "arm_config", "AblationResult", "summarize", "run_ablation"]

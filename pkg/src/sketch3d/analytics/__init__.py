"""Segmentation metrics and the embedding-space t-SNE view"""

from .embedding import (
    EmbeddingSet,
    affinities,
    collect_embeddings,
    conditional_affinities,
    export_scatter,
    initial_coordinates,
    kl_divergence,
    silhouette,
    tsne_embed,
)
from .segmentation import (
    ConfusionMatrix,
    SegmentationEvaluator,
    average_precision,
    confusion,
    evaluate_split,
    map_score,
    mean_ap,
    miou,
    per_class_ap,
    per_class_iou,
)

__all__ = [
    "EmbeddingSet",
    "affinities",
    "collect_embeddings",
    "conditional_affinities",
    "export_scatter",
    "initial_coordinates",
    "kl_divergence",
    "silhouette",
    "tsne_embed",
    "ConfusionMatrix",
    "SegmentationEvaluator",
    "average_precision",
    "confusion",
    "evaluate_split",
    "map_score",
    "mean_ap",
    "miou",
    "per_class_ap",
    "per_class_iou",
]

"""
Embedding-Space View
Bottleneck embedding collection, exact t-SNE and scatter export
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np
import pandas as pd
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from scipy.spatial.distance import pdist, squareform
from sklearn.metrics import silhouette_score

from ..config.schema import CLASS_NAMES, TsneConfig
from ..errors import ConfigError, NumericalError
from ..imagery.netpbm import save_ppm
from ..imagery.palette import palette
from ..sketch2mask.unet import SketchUNet, forward

logger = logging.getLogger(__name__)

PERPLEXITY_TOLERANCE = 1e-5
MAX_BISECTIONS = 100
LOG_BETA_RANGE = (-50.0, 50.0)
INIT_SCALE = 1e-4
SCATTER_SIZE = 256
SCATTER_MARGIN = 12
SCATTER_DPI = 100
SCATTER_MARKER_SIZE = 16.0  # points squared


@dataclass(frozen=True)
class EmbeddingSet:
    points: np.ndarray  # (n, d)
    labels: np.ndarray  # (n,) integer group labels

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if points.ndim != 2 or points.shape[0] < 2:
            raise ConfigError(f"EmbeddingSet needs at least 2 points, got shape {points.shape}")
        if labels.shape != (points.shape[0],):
            raise ConfigError("EmbeddingSet needs one label per point")
        if not np.all(np.isfinite(points)):
            raise NumericalError("EmbeddingSet points must be finite", where="points")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def collect_embeddings(model: SketchUNet, samples: Sequence) -> EmbeddingSet:
    """Flattened (L * D) bottleneck embedding per sample, labelled with the sample group"""
    rows, labels = [], []
    for sample in samples:
        _, embedding = forward(model, sample.sketch)
        rows.append(embedding.values.ravel())
        labels.append(sample.group)
    return EmbeddingSet(np.stack(rows), np.asarray(labels))


def _row_distribution(distances: np.ndarray, beta: float) -> Tuple[np.ndarray, float]:
    """Gaussian neighbor distribution of one row and its perplexity exp(H)"""
    logits = -beta * (distances - distances.min())
    weights = np.exp(logits)
    p = weights / weights.sum()
    nz = p > 0
    entropy = -np.sum(p[nz] * np.log(p[nz]))
    return p, float(np.exp(entropy))


def conditional_affinities(points: np.ndarray, perplexity: float) -> np.ndarray:
    """
    Row-stochastic p(j | i) with each row's perplexity calibrated to the target

    Bandwidths are found by bisection over log(beta), with squared distances
    scaled by the row mean so one bracket fits every row.

    Raises:
        ConfigError: perplexity >= n
        NumericalError: a row does not reach the target within MAX_BISECTIONS steps
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if not 0 < perplexity < n:
        raise ConfigError(f"Perplexity must lie in (0, {n}), got {perplexity}")
    sq = squareform(pdist(points, "sqeuclidean"))
    cond = np.zeros((n, n))

    for i in range(n):
        others = np.r_[0:i, i + 1:n]
        if others.size == 1:
            cond[i, others] = 1.0
            continue
        d = sq[i, others]
        scale = d.mean() if d.mean() > 0 else 1.0
        d = d / scale
        lo, hi = LOG_BETA_RANGE
        converged = False
        for step in range(MAX_BISECTIONS):
            mid = 0.5 * (lo + hi)
            p, perp = _row_distribution(d, np.exp(mid))
            if abs(perp - perplexity) < PERPLEXITY_TOLERANCE:
                converged = True
                break
            if perp > perplexity:
                lo = mid
            else:
                hi = mid
        if not converged:
            raise NumericalError(
                f"Perplexity calibration did not converge (reached {perp:.6f}, target {perplexity})",
                where=f"row {i}",
            )
        logger.debug(f"row {i}: perplexity calibrated in {step + 1} bisections")
        cond[i, others] = p
    return cond


def affinities(points: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetric joint P = (P_cond + P_cond^T) / (2n); zero diagonal, sums to 1"""
    cond = conditional_affinities(points, perplexity)
    return (cond + cond.T) / (2.0 * cond.shape[0])


def initial_coordinates(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).normal(0.0, INIT_SCALE, (n, 2))


def _student_kernel(coords: np.ndarray) -> np.ndarray:
    num = 1.0 / (1.0 + squareform(pdist(coords, "sqeuclidean")))
    np.fill_diagonal(num, 0.0)
    return num


def kl_divergence(P: np.ndarray, coords: np.ndarray) -> float:
    """KL(P || Q) for Student-t Q of the coordinates"""
    num = _student_kernel(coords)
    Q = num / num.sum()
    mask = P > 0
    return float(np.sum(P[mask] * np.log(P[mask] / np.maximum(Q[mask], 1e-300))))


def tsne_embed(P: np.ndarray, cfg: TsneConfig = TsneConfig()) -> np.ndarray:
    """
    Gradient descent on KL(P || Q) with momentum and early exaggeration

    Args:
        P: Symmetric joint affinities from affinities()
        cfg: Optimisation schedule and seed

    Returns:
        (n, 2) coordinates, deterministic per cfg.seed
    """
    n = P.shape[0]
    coords = initial_coordinates(n, cfg.seed)
    velocity = np.zeros_like(coords)
    for it in range(cfg.iterations):
        exaggeration = cfg.exaggeration if it < cfg.exaggeration_iterations else 1.0
        momentum = cfg.momentum_early if it < cfg.momentum_switch else cfg.momentum_late
        num = _student_kernel(coords)
        Q = np.maximum(num / num.sum(), 1e-300)
        weights = (exaggeration * P - Q) * num
        grad = 4.0 * (weights.sum(axis=1)[:, None] * coords - weights @ coords)
        velocity = momentum * velocity - cfg.learning_rate * grad
        coords = coords + velocity
        coords -= coords.mean(axis=0)
        if not np.all(np.isfinite(coords)):
            raise NumericalError("t-SNE coordinates became non-finite", where=f"iteration {it}")
        if it % 100 == 0:
            logger.debug(f"t-SNE iteration {it}: KL={kl_divergence(P, coords):.6f}")
    return coords


def silhouette(coords: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette coefficient; needs at least two groups"""
    labels = np.asarray(labels)
    if np.unique(labels).size < 2:
        raise ConfigError("Silhouette needs at least two distinct labels")
    return float(silhouette_score(coords, labels))


def render_scatter(coords: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """
    Draw labeled 2D points on a white SCATTER_SIZE square canvas

    Returns:
        (SCATTER_SIZE, SCATTER_SIZE, 3) reals in [0, 1]; the data bounds map
        to the plot area inside a SCATTER_MARGIN pixel border
    """
    inches = SCATTER_SIZE / SCATTER_DPI
    figure = Figure(figsize=(inches, inches), dpi=SCATTER_DPI, facecolor="white")
    canvas = FigureCanvasAgg(figure)
    margin = SCATTER_MARGIN / SCATTER_SIZE
    axes = figure.add_axes((margin, margin, 1.0 - 2.0 * margin, 1.0 - 2.0 * margin))
    axes.set_axis_off()

    if len(coords):
        colors = palette(max(len(CLASS_NAMES), int(labels.max()) + 1))
        lo, hi = coords.min(axis=0), coords.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        axes.scatter(
            coords[:, 0],
            coords[:, 1],
            c=colors[labels],
            s=SCATTER_MARKER_SIZE,
            marker="s",
            linewidths=0,
            clip_on=False,
        )
        axes.set_xlim(lo[0], lo[0] + span[0])
        axes.set_ylim(lo[1], lo[1] + span[1])

    canvas.draw()
    rgba = np.asarray(canvas.buffer_rgba())
    return rgba[..., :3].astype(np.float64) / 255.0


def export_scatter(coords: np.ndarray, labels: np.ndarray, prefix: Union[str, Path]) -> Tuple[Path, Path]:
    """
    Write prefix.csv (x, y, label) and a prefix.ppm scatter plot

    Points are drawn in the class palette on white; an empty input gives a
    header-only CSV and a blank image.
    """
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    coords = np.asarray(coords, dtype=np.float64).reshape(-1, 2)
    labels = np.asarray(labels, dtype=np.int64).ravel()
    csv_path = prefix.with_name(prefix.name + ".csv")
    ppm_path = prefix.with_name(prefix.name + ".ppm")

    pd.DataFrame({"x": coords[:, 0], "y": coords[:, 1], "label": labels}).to_csv(csv_path, index=False)
    save_ppm(render_scatter(coords, labels), ppm_path)
    logger.info(f"Wrote scatter of {len(coords)} points to {csv_path} and {ppm_path}")
    return csv_path, ppm_path


__all__ = [
    "EmbeddingSet",
    "collect_embeddings",
    "conditional_affinities",
    "affinities",
    "initial_coordinates",
    "kl_divergence",
    "tsne_embed",
    "silhouette",
    "render_scatter",
    "export_scatter",
]

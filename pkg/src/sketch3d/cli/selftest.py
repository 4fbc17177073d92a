"""
Self Test
Named analytic oracles for every module, run by the `selftest` command
"""

import logging
import math
import tempfile
import time
from pathlib import Path
from typing import Callable, List, Tuple

import numpy as np
import pandas as pd
import torch

from ..analytics.embedding import affinities, conditional_affinities, initial_coordinates, kl_divergence, silhouette, tsne_embed
from ..analytics.segmentation import average_precision, confusion, miou
from ..augment.morphology import DEFAULT_POLICY, Branch, binarize, choose_branch, dilate, erode
from ..config.schema import UNET_PRESETS, LossConfig, TsneConfig
from ..imagery.netpbm import load_pgm, load_ppm, save_pgm, save_ppm
from ..imagery.tensor_io import decode_tensor, encode_tensor
from ..imagery.types import OneHotMask, ProbMap, SegMask, Sketch, Tensor
from ..losses.objectives import cross_entropy_loss, cross_entropy_t, dice_loss, dice_t, style_vector_loss, style_vector_loss_t, total_loss
from ..mask23d.renderer import composite, transmittance_weights
from ..mask23d.triplane import PLANE_AXES, sample_planes
from ..training.gradcheck import finite_diff_check

logger = logging.getLogger(__name__)

Oracle = Callable[[], Tuple[bool, str]]


def bilinear_reference(planes: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Brute-force tri-plane lookup: explicit bilinear weights on each plane, summed"""
    _, _, rows, cols = planes.shape
    p = np.clip(np.asarray(point, dtype=np.float64), -1.0, 1.0)
    total = np.zeros(planes.shape[1])
    for k, (a, b) in enumerate(PLANE_AXES):
        x = (p[a] + 1.0) / 2.0 * (cols - 1)
        y = (p[b] + 1.0) / 2.0 * (rows - 1)
        x0 = min(int(math.floor(x)), cols - 2)
        y0 = min(int(math.floor(y)), rows - 2)
        fx, fy = x - x0, y - y0
        plane = planes[k]
        total += (
            (1 - fx) * (1 - fy) * plane[:, y0, x0]
            + fx * (1 - fy) * plane[:, y0, x0 + 1]
            + (1 - fx) * fy * plane[:, y0 + 1, x0]
            + fx * fy * plane[:, y0 + 1, x0 + 1]
        )
    return total


def check_gradients() -> Tuple[bool, str]:
    report = finite_diff_check(UNET_PRESETS["gradcheck"], seed=0)
    return report.passed, report.summary()


def check_loss_values() -> Tuple[bool, str]:
    uniform = cross_entropy_loss(
        OneHotMask(np.eye(4, dtype=np.uint8), 2, 2), ProbMap(np.full((4, 4), 0.25), 2, 2)
    )
    y = OneHotMask(np.array([[1, 0], [1, 0], [0, 1], [0, 1]], dtype=np.uint8), 2, 2)
    hard = ProbMap(np.array([[1.0, 0.0]] * 4), 2, 2)
    dice = dice_loss(y, hard, 1e-6)
    sv = style_vector_loss(np.array([[1.0, 2.0]]), np.array([[0.0, 0.0]]))
    linear = total_loss(1.0, 2.0, 0.5, LossConfig(lambda_sv=2.0)).l_total
    ok = (
        abs(uniform - math.log(4)) < 1e-9
        and abs(dice - 2.0 / 3.0) < 1e-6
        and sv == 5.0
        and abs(linear - 4.5) < 1e-12
        and total_loss(1.0, 2.0, 0.5).l_total == 3.5
    )
    return ok, f"ce={uniform:.9f} dice={dice:.7f} sv={sv} weighted_total={linear}"


def check_loss_gradients() -> Tuple[bool, str]:
    """Analytic loss gradients against central differences on 8x8, C=3"""
    rng = np.random.default_rng(7)
    n, c, h = 64, 3, 1e-6
    y = torch.from_numpy(np.eye(c)[rng.integers(0, c, n)])
    logits = rng.normal(size=(n, c))
    yhat = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
    a, b = rng.normal(size=(2, 4)), rng.normal(size=(2, 4))

    def worst(fn, x0: np.ndarray) -> float:
        x = torch.from_numpy(x0.copy()).requires_grad_(True)
        fn(x).backward()
        analytic = x.grad.numpy().ravel()
        err = 0.0
        for k in range(x0.size):
            plus, minus = x0.copy().ravel(), x0.copy().ravel()
            plus[k] += h
            minus[k] -= h
            with torch.no_grad():
                fp = float(fn(torch.from_numpy(plus.reshape(x0.shape))))
                fm = float(fn(torch.from_numpy(minus.reshape(x0.shape))))
            numeric = (fp - fm) / (2 * h)
            err = max(err, abs(analytic[k] - numeric) / max(abs(analytic[k]), abs(numeric), 1e-6))
        return err

    errors = {
        "ce": worst(lambda p: cross_entropy_t(y, p), yhat),
        "dice": worst(lambda p: dice_t(y, p, 1e-6), yhat),
        "sv_a": worst(lambda p: style_vector_loss_t(p, torch.from_numpy(b)), a),
        "sv_b": worst(lambda p: style_vector_loss_t(torch.from_numpy(a), p), b),
    }
    return all(e < 1e-6 for e in errors.values()), ", ".join(f"{k}={v:.2e}" for k, v in errors.items())


def check_renderer() -> Tuple[bool, str]:
    rng = np.random.default_rng(11)
    density = torch.from_numpy(rng.exponential(2.0, (1000, 24)))
    deltas = torch.from_numpy(rng.uniform(0.01, 0.2, (1000, 24)))
    weights = transmittance_weights(density, deltas)
    closed = 1.0 - torch.exp(-(density * deltas).sum(dim=1))
    telescoping = float((weights.sum(dim=1) - closed).abs().max())

    colors = torch.from_numpy(rng.uniform(0, 1, (1, 2, 3)))
    sem = torch.full((1, 2, 2), 0.5, dtype=torch.float64)
    feat = torch.zeros((1, 2, 1), dtype=torch.float64)
    bg = (1.0, 1.0, 1.0)
    empty = composite(torch.zeros((1, 2), dtype=torch.float64), torch.ones(2, dtype=torch.float64), colors, sem, feat, bg)
    opaque = composite(torch.tensor([[1e9, 0.0]], dtype=torch.float64), torch.ones(2, dtype=torch.float64), colors, sem, feat, bg)
    ln2 = composite(torch.full((1, 2), math.log(2), dtype=torch.float64), torch.ones(2, dtype=torch.float64), colors, sem, feat, bg)
    expected = 0.5 * colors[0, 0] + 0.25 * colors[0, 1] + 0.25
    ok = (
        telescoping < 1e-12
        and float(empty.weight_sum[0]) == 0.0
        and torch.allclose(empty.color[0], torch.ones(3, dtype=torch.float64))
        and abs(float(opaque.weight_sum[0]) - 1.0) < 1e-6
        and float((opaque.color[0] - colors[0, 0]).abs().max()) < 1e-6
        and float((ln2.weights[0] - torch.tensor([0.5, 0.25], dtype=torch.float64)).abs().max()) < 1e-9
        and float((ln2.color[0] - expected).abs().max()) < 1e-9
    )
    return ok, f"telescoping max error {telescoping:.2e}"


def check_triplane() -> Tuple[bool, str]:
    rng = np.random.default_rng(3)
    planes = rng.normal(size=(3, 4, 8, 8))
    points = rng.uniform(-1.2, 1.2, (10000, 3))
    with torch.no_grad():
        fast = sample_planes(torch.from_numpy(planes), torch.from_numpy(points)).numpy()
    ref = np.stack([bilinear_reference(planes, p) for p in points])
    err = float(np.abs(fast - ref).max())
    return err < 1e-12, f"max deviation {err:.2e} over {len(points)} points"


def check_augmentation() -> Tuple[bool, str]:
    counts = {b: 0 for b in Branch}
    draws = 10000
    for seed in range(draws):
        counts[choose_branch(DEFAULT_POLICY, seed)] += 1
    freqs = {b.value: counts[b] / draws for b in Branch}
    target = {"identity": 0.5, "dilate": 0.25, "erode": 0.25}
    freq_ok = all(abs(freqs[k] - target[k]) <= 0.02 for k in target)

    rng = np.random.default_rng(5)
    morph_ok = True
    for _ in range(100):
        x = binarize(Sketch(rng.uniform(0, 1, (16, 16))))
        complement = Sketch(1.0 - x.pixels)
        morph_ok &= bool(np.all(dilate(x, 3).pixels >= x.pixels))
        morph_ok &= bool(np.all(erode(x, 7).pixels <= x.pixels))
        morph_ok &= bool(np.array_equal(erode(x, 5).pixels, 1.0 - dilate(complement, 5).pixels))
    return freq_ok and morph_ok, f"branch frequencies {freqs}"


def check_metrics() -> Tuple[bool, str]:
    truth = SegMask(np.array([[0, 0, 1, 1]]), 2)
    pred = SegMask(np.array([[0, 1, 1, 1]]), 2)
    m = miou(confusion(truth, pred))
    ap = average_precision([1, 0, 1, 0], [0.9, 0.8, 0.7, 0.6])
    perfect_iou = miou(confusion(truth, truth))
    perfect_ap = average_precision([1, 1, 0, 0], [0.9, 0.8, 0.2, 0.1])
    ok = abs(m - 7 / 12) < 1e-12 and abs(ap - 5 / 6) < 1e-12 and perfect_iou == 1.0 and perfect_ap == 1.0
    return ok, f"miou={m:.12f} ap={ap:.12f}"


def three_clusters(rng: np.random.Generator, per_cluster: int = 20, dim: int = 5) -> Tuple[np.ndarray, np.ndarray]:
    """Gaussian blobs of spread 1 with centers 10 apart along separate axes"""
    centers = np.zeros((3, dim))
    for k in range(3):
        centers[k, k] = 10.0 * (k + 1)
    points = np.concatenate([centers[k] + rng.normal(size=(per_cluster, dim)) for k in range(3)])
    labels = np.repeat(np.arange(3), per_cluster)
    return points, labels


def check_tsne() -> Tuple[bool, str]:
    points, labels = three_clusters(np.random.default_rng(0))
    cfg = TsneConfig()
    cond = conditional_affinities(points, cfg.perplexity)
    nz = np.where(cond > 0, cond, 1.0)
    perplexities = np.exp(-np.sum(cond * np.log(nz), axis=1))
    calibration = float(np.abs(perplexities - cfg.perplexity).max())
    P = affinities(points, cfg.perplexity)
    coords = tsne_embed(P, cfg)
    kl_start = kl_divergence(P, initial_coordinates(len(points), cfg.seed))
    kl_end = kl_divergence(P, coords)
    sil = silhouette(coords, labels)
    ok = calibration < 1e-5 and kl_end < kl_start and sil >= 0.5
    return ok, f"calibration {calibration:.1e}, KL {kl_start:.4f} -> {kl_end:.4f}, silhouette {sil:.3f}"


def check_formats() -> Tuple[bool, str]:
    rng = np.random.default_rng(9)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        sketch = Sketch(rng.integers(0, 256, (7, 5)) / 255.0)
        save_pgm(sketch, tmp / "s.pgm")
        pgm_ok = load_pgm(tmp / "s.pgm") == sketch
        rgb = rng.integers(0, 256, (4, 6, 3)) / 255.0
        save_ppm(rgb, tmp / "c.ppm")
        ppm_ok = np.array_equal(load_ppm(tmp / "c.ppm"), rgb)
    values = rng.normal(size=(3, 4, 2)).astype(np.float32).astype(np.float64)
    s3dt_ok = decode_tensor(encode_tensor(Tensor(values))) == Tensor(values)
    return pgm_ok and ppm_ok and s3dt_ok, f"pgm={pgm_ok} ppm={ppm_ok} s3dt={s3dt_ok}"


ORACLES: List[Tuple[str, Oracle]] = [
    ("gradient_check", check_gradients),
    ("loss_values", check_loss_values),
    ("loss_gradients", check_loss_gradients),
    ("renderer_conservation", check_renderer),
    ("triplane_bilinear", check_triplane),
    ("augmentation", check_augmentation),
    ("metrics", check_metrics),
    ("tsne", check_tsne),
    ("formats", check_formats),
]


def run_selftest(only: List[str] = None) -> pd.DataFrame:
    """Run the oracles (optionally a named subset); one row per oracle"""
    rows = []
    for name, oracle in ORACLES:
        if only and name not in only:
            continue
        start = time.perf_counter()
        try:
            ok, detail = oracle()
        except Exception as e:  # an oracle that raises has failed
            ok, detail = False, f"{type(e).__name__}: {e}"
        elapsed = time.perf_counter() - start
        log = logger.info if ok else logger.error
        log(f"[{'PASS' if ok else 'FAIL'}] {name} ({elapsed:.2f}s): {detail}")
        rows.append({"oracle": name, "passed": bool(ok), "seconds": elapsed, "detail": detail})
    return pd.DataFrame(rows, columns=["oracle", "passed", "seconds", "detail"])


__all__ = ["ORACLES", "bilinear_reference", "three_clusters", "run_selftest"]

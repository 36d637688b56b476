"""Aggregates behind the explorer: projection, grid cells, distributions,
concept clusters, and in-cell layouts.

Everything here is a pure function of immutable inputs; all stochastic steps
(t-SNE, k-means) take explicit seeds and are reproducible bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.optimize import linear_sum_assignment

from .adapters import BaseEncoderAdapter
from .data import PixelTensor
from .detector import ConfusionStats, DetectorModel, Prediction, distill
from .encoder import ForgetProjection, encode_base
from .relevance import RelevanceStack

DEFAULT_GRID_M = 30
HIST_BINS = 32
LAPLACE_SMOOTHING = 1e-6
SEGMENT_TAU = 0.5
SEGMENT_IOU_MAX = 0.5
CONCEPT_CLUSTERS = 3


@dataclass(frozen=True)
class ProjectedPoint:
    image_id: str
    x: float  # in [0, 1]
    y: float  # in [0, 1]


@dataclass
class GridCell:
    row: int
    col: int
    member_ids: list[str]
    stats: ConfusionStats | None = None
    sector_confidence: dict[str, float | None] = field(default_factory=dict)
    annotation: str | None = None


@dataclass
class DimensionDistribution:
    dim: int  # 1-based
    bin_edges: np.ndarray  # len(bins) + 1; [v, v] for a constant dimension
    real_hist: np.ndarray  # probability vector
    fake_hist: np.ndarray
    kl: float | None  # KL(real||fake) + KL(fake||real); None if a class is absent
    scope: str  # "global" or "cell:row,col"


@dataclass(frozen=True)
class Segment:
    image_id: str
    box: tuple[int, int, int, int]  # half-open (x0, y0, x1, y1)
    dim: int  # originating distilled dimension, 1-based


@dataclass
class ConceptCluster:
    cluster_id: int
    members: list[Segment]
    centroid: np.ndarray  # (distill_dim,)


@dataclass
class CellLayout:
    rows: int
    cols: int
    assignment: dict[str, tuple[int, int]]  # image_id -> (row, col)


def project_2d(vectors: list[np.ndarray] | np.ndarray, ids: list[str],
               seed: int = 0) -> list[ProjectedPoint]:
    """Stochastic-neighbor embedding to 2-D, min-max normalized per axis."""
    from sklearn.manifold import TSNE

    matrix = np.asarray(vectors, dtype=np.float64)
    n = matrix.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 vectors to project, got {n}")
    if len(ids) != n:
        raise ValueError("ids and vectors disagree in length")
    perplexity = min(30.0, n / 4)
    method = "exact" if n < 20 else "barnes_hut"
    coords = TSNE(
        n_components=2, perplexity=perplexity, random_state=seed,
        init="random", learning_rate=200.0, method=method, n_jobs=1,
    ).fit_transform(matrix)
    normalized = np.empty_like(coords, dtype=np.float64)
    for axis in range(2):
        lo, hi = coords[:, axis].min(), coords[:, axis].max()
        normalized[:, axis] = 0.5 if hi == lo else (coords[:, axis] - lo) / (hi - lo)
    return [ProjectedPoint(image_id=i, x=float(p[0]), y=float(p[1]))
            for i, p in zip(ids, normalized)]


def assign_grid(points: list[ProjectedPoint], m: int = DEFAULT_GRID_M) -> list[GridCell]:
    """Bucket points into an m x m grid; empty cells are omitted."""
    if m < 1:
        raise ValueError(f"grid size must be >= 1, got {m}")
    cells: dict[tuple[int, int], list[str]] = {}
    for point in points:
        row = min(int(point.y * m), m - 1)
        col = min(int(point.x * m), m - 1)
        cells.setdefault((row, col), []).append(point.image_id)
    return [GridCell(row=row, col=col, member_ids=ids)
            for (row, col), ids in sorted(cells.items())]


SECTORS = ("tp", "tn", "fp", "fn")


def cell_statistics(cell: GridCell, predictions: dict[str, Prediction],
                    labels: dict[str, int]) -> GridCell:
    """Fill confusion counts and per-sector mean confidence (fake=positive)."""
    buckets: dict[str, list[float]] = {s: [] for s in SECTORS}
    for image_id in cell.member_ids:
        if image_id not in predictions or image_id not in labels:
            raise RuntimeError(f"missing prediction or label for {image_id}")
        pred = predictions[image_id]
        truth = labels[image_id]
        if truth == 1:
            sector = "tp" if pred.label == 1 else "fn"
        else:
            sector = "tn" if pred.label == 0 else "fp"
        buckets[sector].append(pred.confidence)
    counts = {s: len(buckets[s]) for s in SECTORS}
    total = sum(counts.values())
    tp, tn, fp, fn = counts["tp"], counts["tn"], counts["fp"], counts["fn"]
    cell.stats = ConfusionStats(
        tp=tp, tn=tn, fp=fp, fn=fn,
        accuracy=(tp + tn) / total if total else 0.0,
        sensitivity=tp / (tp + fn) if (tp + fn) else None,
        specificity=tn / (tn + fp) if (tn + fp) else None,
    )
    cell.sector_confidence = {
        s: (sum(vals) / len(vals) if vals else None) for s, vals in buckets.items()
    }
    return cell


def _smoothed_histogram(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    if len(edges) == 2 and edges[0] == edges[1]:
        counts = np.array([float(len(values))])
    else:
        counts, _ = np.histogram(values, bins=edges)
        counts = counts.astype(np.float64)
    counts += LAPLACE_SMOOTHING
    return counts / counts.sum()


def _symmetric_kl(p: np.ndarray, q: np.ndarray) -> float:
    return float(np.sum(p * np.log(p / q)) + np.sum(q * np.log(q / p)))


def dimension_distributions(
    values: np.ndarray,  # (n, distill_dim) distilled values for ALL images
    labels: np.ndarray,  # (n,) ground truth
    member_mask: np.ndarray | None = None,  # scope restriction; None = global
    scope: str = "global",
    bins: int = HIST_BINS,
) -> list[DimensionDistribution]:
    """Per-dimension real/fake histograms with symmetric-KL ordering.

    Bin edges always come from the global per-dimension range so cell-scoped
    histograms remain comparable with the global ones. Results are sorted by
    ascending divergence (dimensions without both classes in scope last).
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels)
    mask = np.ones(len(labels), dtype=bool) if member_mask is None else member_mask
    out = []
    for dim in range(values.shape[1]):
        column = values[:, dim]
        lo, hi = float(column.min()), float(column.max())
        if hi == lo:
            edges = np.array([lo, hi])
        else:
            edges = np.linspace(lo, hi, bins + 1)
        real_vals = column[mask & (labels == 0)]
        fake_vals = column[mask & (labels == 1)]
        real_hist = _smoothed_histogram(real_vals, edges)
        fake_hist = _smoothed_histogram(fake_vals, edges)
        kl = (_symmetric_kl(real_hist, fake_hist)
              if len(real_vals) and len(fake_vals) else None)
        out.append(DimensionDistribution(
            dim=dim + 1, bin_edges=edges, real_hist=real_hist,
            fake_hist=fake_hist, kl=kl, scope=scope,
        ))
    out.sort(key=lambda d: (d.kl is None, d.kl if d.kl is not None else 0.0, d.dim))
    return out


def contribution_distributions(
    contributions: dict[str, np.ndarray],  # image_id -> c vector
    correct: dict[str, bool],
    member_ids: list[str],
    which: str = "all",  # all | correct | incorrect
    kde_points: int = 64,
) -> list[dict] | None:
    """Quartiles, mean, and kernel-density samples of c_i per dimension.

    Returns None when no member survives the correctness filter.
    """
    from scipy.stats import gaussian_kde

    if which == "all":
        kept = list(member_ids)
    elif which == "correct":
        kept = [i for i in member_ids if correct[i]]
    elif which == "incorrect":
        kept = [i for i in member_ids if not correct[i]]
    else:
        raise ValueError(f"unknown filter {which!r}")
    if not kept:
        return None
    matrix = np.vstack([contributions[i] for i in kept])
    summaries = []
    for dim in range(matrix.shape[1]):
        col = matrix[:, dim]
        q1, median, q3 = np.percentile(col, [25, 50, 75])
        if len(col) >= 2 and col.std() > 0:
            kde = gaussian_kde(col)
            xs = np.linspace(col.min(), col.max(), kde_points)
            density = kde(xs)
            samples = [[float(x), float(d)] for x, d in zip(xs, density)]
        else:
            samples = [[float(col[0]), 1.0]]
        summaries.append({
            "dim": dim + 1, "count": len(col), "mean": float(col.mean()),
            "q1": float(q1), "median": float(median), "q3": float(q3),
            "kde": samples,
        })
    return summaries


def box_iou(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> float:
    """Intersection over union of half-open pixel boxes (x0, y0, x1, y1)."""
    ix0, iy0 = max(a[0], b[0]), max(a[1], b[1])
    ix1, iy1 = min(a[2], b[2]), min(a[3], b[3])
    inter = max(0, ix1 - ix0) * max(0, iy1 - iy0)
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    union = area_a + area_b - inter
    return inter / union if union else 0.0


def extract_segments(stack: RelevanceStack, tau: float = SEGMENT_TAU,
                     iou_max: float = SEGMENT_IOU_MAX) -> list[Segment]:
    """Influential boxes per relevance map, deduplicated by IOU.

    Each map is binarized at tau * max, the largest 4-connected component's
    bounding box is taken, and boxes overlapping an already-kept box with
    IOU > iou_max are discarded (maps visited in dimension order).
    """
    kept: list[Segment] = []
    for rel in stack.maps:
        if rel.degenerate:
            continue
        mask = rel.map >= tau * rel.map.max()
        labeled, count = ndimage.label(mask)  # default structure = 4-connectivity
        if count == 0:
            continue
        sizes = ndimage.sum_labels(np.ones_like(labeled), labeled, range(1, count + 1))
        largest = int(np.argmax(sizes)) + 1
        ys, xs = np.nonzero(labeled == largest)
        box = (int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)
        if any(box_iou(box, seg.box) > iou_max for seg in kept):
            continue
        kept.append(Segment(image_id=stack.source_id, box=box, dim=rel.target_dim))
    return kept


def kmeans_l2(points: np.ndarray, k: int, seed: int, max_iter: int = 100
              ) -> tuple[np.ndarray, np.ndarray]:
    """Plain Lloyd k-means with seeded greedy-spread initialization.

    The first center is a seeded uniform pick; each further center is the
    point farthest (L2) from all chosen centers, ties to the lowest index.
    Returns (labels, centroids).
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} invalid for {n} points")
    rng = np.random.default_rng(seed)
    centers = [points[int(rng.integers(n))]]
    while len(centers) < k:
        dists = np.min(
            [np.sum((points - c) ** 2, axis=1) for c in centers], axis=0
        )
        centers.append(points[int(np.argmax(dists))])
    centroids = np.array(centers)
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        sq = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(sq, axis=1)
        for c in range(k):
            member = points[new_labels == c]
            if len(member):
                centroids[c] = member.mean(axis=0)
            else:  # re-seed an empty cluster on the farthest point
                centroids[c] = points[int(np.argmax(np.min(sq, axis=1)))]
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels, centroids


def _crop_resize(pixels: np.ndarray, box: tuple[int, int, int, int], size: int) -> np.ndarray:
    import torch

    x0, y0, x1, y1 = box
    crop = np.ascontiguousarray(pixels[y0:y1, x0:x1, :], dtype=np.float32)
    t = torch.from_numpy(crop).permute(2, 0, 1)[None]
    resized = torch.nn.functional.interpolate(
        t, size=(size, size), mode="bilinear", align_corners=False
    )[0].permute(1, 2, 0).numpy()
    return np.ascontiguousarray(resized, dtype=np.float32)


def cluster_concepts(
    segments: list[Segment],
    pixel_lookup: dict[str, PixelTensor],
    adapter: BaseEncoderAdapter,
    projection: ForgetProjection,
    model: DetectorModel,
    seed: int = 0,
) -> list[ConceptCluster]:
    """Group segment crops by their distilled representations (k-means, L2).

    Crops are re-encoded through the full base -> forget -> distill chain.
    Fewer than 3 segments yield that many singleton clusters.
    """
    if not segments:
        return []
    encoded = []
    for seg in segments:
        pixels = pixel_lookup[seg.image_id]
        crop = _crop_resize(pixels.data, seg.box, adapter.info.input_size)
        base = encode_base(PixelTensor(data=crop, source_id=seg.image_id), adapter)
        visual = projection.matrix @ base.vector
        encoded.append(distill(visual, model, source_id=seg.image_id).values)
    matrix = np.vstack(encoded).astype(np.float64)
    k = min(CONCEPT_CLUSTERS, len(segments))
    labels, centroids = kmeans_l2(matrix, k=k, seed=seed)
    clusters = []
    for cid in range(k):
        members = [seg for seg, lbl in zip(segments, labels) if lbl == cid]
        clusters.append(ConceptCluster(cluster_id=cid, members=members,
                                       centroid=centroids[cid]))
    return clusters


def isomatch_layout(points: list[ProjectedPoint]) -> CellLayout:
    """Overlap-free grid placement preserving 2-D proximity.

    Builds a ceil(sqrt(n))-square grid and solves the exact minimum-cost
    assignment between normalized points and normalized slot positions
    (squared Euclidean cost).
    """
    n = len(points)
    if n < 1:
        raise ValueError("layout needs at least one point")
    side = math.ceil(math.sqrt(n))
    xs = np.array([p.x for p in points])
    ys = np.array([p.y for p in points])

    def norm(arr):
        # degenerate axes collapse to 0 so constant coordinates cost nothing
        # against the first row/column of slots
        lo, hi = arr.min(), arr.max()
        return np.zeros_like(arr) if hi == lo else (arr - lo) / (hi - lo)

    xs, ys = norm(xs), norm(ys)
    slot_coord = (lambda i: i / (side - 1)) if side > 1 else (lambda i: 0.0)
    slots = [(r, c) for r in range(side) for c in range(side)]
    cost = np.empty((n, len(slots)))
    for j, (r, c) in enumerate(slots):
        cost[:, j] = (xs - slot_coord(c)) ** 2 + (ys - slot_coord(r)) ** 2
    rows_idx, cols_idx = linear_sum_assignment(cost)
    assignment = {points[i].image_id: slots[j] for i, j in zip(rows_idx, cols_idx)}
    return CellLayout(rows=side, cols=side, assignment=assignment)

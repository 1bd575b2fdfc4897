"""Dataset cleaning and class rebalancing.

A labeled feature table can be cleaned of outliers with quartile fences,
rebalanced to exact class parity with cluster-aware interpolation, or both.
:func:`make_variants` produces all four combinations from one input so the
evaluation harness can compare them under identical splits.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    BadParam,
    EmptyInput,
    LabelError,
    NonFiniteFeature,
    ShapeMismatch,
    SingleClass,
)
from .metrics import FEATURE_NAMES, FeatureRow
from .seeding import derive_seed

VARIANT_NAMES = ("original", "cleaned", "rebalanced", "cleaned_rebalanced")

# tag movement when a stage is applied standalone
_CLEAN_TAG = {"original": "cleaned", "rebalanced": "cleaned_rebalanced"}
_REBALANCE_TAG = {"original": "rebalanced", "cleaned": "cleaned_rebalanced"}


@dataclass(frozen=True)
class Dataset:
    """An ordered, labeled collection of feature rows."""

    rows: tuple[FeatureRow, ...]
    variant: str = "original"
    phoneme_tag: str = ""

    def __len__(self) -> int:
        return len(self.rows)

    def features(self) -> np.ndarray:
        if not self.rows:
            return np.empty((0, len(FEATURE_NAMES)))
        return np.asarray([r.values() for r in self.rows], dtype=np.float64)

    def labels(self) -> np.ndarray:
        return np.asarray([r.label for r in self.rows], dtype=np.int64)

    @classmethod
    def from_arrays(cls, x, y, variant: str = "original", phoneme_tag: str = "") -> "Dataset":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y)
        if x.ndim != 2 or x.shape[1] != len(FEATURE_NAMES):
            raise ShapeMismatch(f"expected (n, {len(FEATURE_NAMES)}) features, got {x.shape}")
        if len(y) != len(x):
            raise ShapeMismatch("feature and label counts differ")
        if not np.isfinite(x).all():
            raise NonFiniteFeature("features must be finite")
        if y.size and not np.isin(y, (0, 1)).all():
            raise LabelError("labels must be 0 or 1")
        rows = tuple(
            FeatureRow(*map(float, row), label=int(label)) for row, label in zip(x, y)
        )
        return cls(rows=rows, variant=variant, phoneme_tag=phoneme_tag)


@dataclass(frozen=True)
class SmoteParams:
    """Controls for cluster-aware minority oversampling."""

    n_clusters: int = 8
    cluster_balance_threshold: float = 0.5
    k_neighbors: int = 5
    density_exponent: float | None = None  # None: use the feature dimension
    seed: int = 0

    def __post_init__(self):
        if self.n_clusters < 1:
            raise BadParam("n_clusters must be >= 1")
        if not 0.0 <= self.cluster_balance_threshold <= 1.0:
            raise BadParam("cluster_balance_threshold must be in [0, 1]")
        if self.k_neighbors < 1:
            raise BadParam("k_neighbors must be >= 1")
        if self.density_exponent is not None and not np.isfinite(self.density_exponent):
            raise BadParam("density_exponent must be finite")


def iqr_clean(d: Dataset, fence_k: float = 1.5) -> Dataset:
    """Drop rows with any feature strictly outside its quartile fences.

    Fences are Q1 - fence_k*IQR and Q3 + fence_k*IQR per feature, computed
    once from the input with linearly interpolated quantiles. Boundary
    values survive; an all-identical column removes nothing.
    """
    if not np.isfinite(fence_k) or fence_k < 0:
        raise BadParam("fence_k must be a finite real >= 0")
    variant = _CLEAN_TAG.get(d.variant, d.variant)
    if not d.rows:
        return replace(d, variant=variant)
    x = d.features()
    q1 = np.quantile(x, 0.25, axis=0)
    q3 = np.quantile(x, 0.75, axis=0)
    spread = q3 - q1
    low = q1 - fence_k * spread
    high = q3 + fence_k * spread
    keep = ((x >= low) & (x <= high)).all(axis=1)
    rows = tuple(r for r, ok in zip(d.rows, keep) if ok)
    return Dataset(rows=rows, variant=variant, phoneme_tag=d.phoneme_tag)


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centroids[c] = points[idx]
        d2 = np.minimum(d2, ((points - centroids[c]) ** 2).sum(axis=1))
    return centroids


def kmeans(
    points, k: int, seed: int = 0, max_iter: int = 100, tol: float = 1e-4
) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm with k-means++ seeding; returns (labels, centroids).

    Iteration stops when no centroid moves more than ``tol`` or after
    ``max_iter`` rounds. An emptied cluster is re-seeded to the point
    farthest from its assigned centroid. Deterministic for a given seed.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or len(pts) == 0:
        raise EmptyInput("kmeans needs a non-empty (n, d) array")
    if not np.isfinite(pts).all():
        raise NonFiniteFeature("points must be finite")
    if k < 1 or k > len(pts):
        raise BadParam(f"k must be in [1, {len(pts)}]")
    rng = np.random.Generator(np.random.PCG64(seed))
    centroids = _kmeans_pp_init(pts, k, rng)
    n = len(pts)
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        new = centroids.copy()
        for c in range(k):
            members = labels == c
            if members.any():
                new[c] = pts[members].mean(axis=0)
        assigned = d2[np.arange(n), labels].copy()
        for c in range(k):
            if not (labels == c).any():
                far = int(assigned.argmax())
                new[c] = pts[far]
                assigned[far] = -1.0
        shift = np.sqrt(((new - centroids) ** 2).sum(axis=1)).max()
        centroids = new
        if shift < tol:
            break
    d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    return labels, centroids


def _largest_remainder(total: int, weights: np.ndarray) -> np.ndarray:
    shares = total * weights
    counts = np.floor(shares).astype(np.int64)
    left = total - int(counts.sum())
    if left > 0:
        # stable sort: equal remainders resolve toward the earlier cluster
        order = np.argsort(-(shares - counts), kind="stable")
        counts[order[:left]] += 1
    return counts


def _neighbor_table(points: np.ndarray, k: int) -> np.ndarray:
    # per-row indices of the k nearest other rows, ties by row order
    d2 = ((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def _interpolate(
    members: np.ndarray, count: int, k_neighbors: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Synthesize ``count`` rows on segments between members and their neighbors."""
    out = []
    if len(members) == 1:
        for _ in range(count):
            out.append(members[0].copy())
        return out
    k = min(k_neighbors, len(members) - 1)
    table = _neighbor_table(members, k)
    for _ in range(count):
        i = int(rng.integers(len(members)))
        j = int(table[i, rng.integers(k)])
        u = float(rng.random())
        out.append(members[i] + u * (members[j] - members[i]))
    return out


def kmeans_smote(d: Dataset, params: SmoteParams | None = None) -> Dataset:
    """Oversample the minority class to exact parity with the majority.

    Rows are clustered; clusters whose minority fraction reaches the balance
    threshold generate synthetics, weighted by minority sparsity
    (mean intra-minority distance ** density_exponent / minority count) with
    largest-remainder rounding. Synthetics interpolate between a minority row
    and one of its nearest minority neighbors inside the cluster. If no
    cluster qualifies, interpolation falls back to the whole minority class.
    Original rows are kept unchanged as a prefix of the output.
    """
    if params is None:
        params = SmoteParams()
    counts = np.bincount(d.labels(), minlength=2) if d.rows else np.zeros(2, np.int64)
    if counts[0] == 0 or counts[1] == 0:
        raise SingleClass("rebalancing needs both classes present")
    if counts[0] == counts[1]:
        return d
    minority = int(counts.argmin())
    total = int(abs(counts[0] - counts[1]))

    x = d.features()
    y = d.labels()
    exponent = params.density_exponent if params.density_exponent is not None else x.shape[1]
    k = min(params.n_clusters, len(x))
    cluster_of, _ = kmeans(x, k, seed=derive_seed(params.seed, 0))
    rng = np.random.Generator(np.random.PCG64(derive_seed(params.seed, 1)))

    kept = []
    for c in range(k):
        members = cluster_of == c
        size = int(members.sum())
        if size == 0:
            continue
        minority_rows = np.flatnonzero(members & (y == minority))
        if len(minority_rows) / size >= params.cluster_balance_threshold and len(minority_rows):
            kept.append(minority_rows)

    synthetics: list[np.ndarray] = []
    if kept:
        sparsity = np.zeros(len(kept))
        for idx, rows in enumerate(kept):
            if len(rows) < 2:
                continue
            pts = x[rows]
            dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
            mean_dist = dist.sum() / (len(rows) * (len(rows) - 1))
            sparsity[idx] = mean_dist**exponent / len(rows)
        if sparsity.sum() > 0:
            weights = sparsity / sparsity.sum()
        else:
            weights = np.full(len(kept), 1.0 / len(kept))
        for rows, count in zip(kept, _largest_remainder(total, weights)):
            synthetics.extend(_interpolate(x[rows], int(count), params.k_neighbors, rng))
    else:
        minority_rows = np.flatnonzero(y == minority)
        synthetics.extend(_interpolate(x[minority_rows], total, params.k_neighbors, rng))

    new_rows = tuple(
        FeatureRow(*map(float, row), label=minority) for row in synthetics
    )
    variant = _REBALANCE_TAG.get(d.variant, d.variant)
    return Dataset(rows=d.rows + new_rows, variant=variant, phoneme_tag=d.phoneme_tag)


def make_variants(
    d: Dataset, smote: SmoteParams | None = None, fence_k: float = 1.5
) -> dict[str, Dataset]:
    """All four preparation variants of one dataset, keyed by variant name."""
    if smote is None:
        smote = SmoteParams()
    cleaned = iqr_clean(d, fence_k=fence_k)
    rebalanced = kmeans_smote(d, replace(smote, seed=derive_seed(smote.seed, 0)))
    both = kmeans_smote(cleaned, replace(smote, seed=derive_seed(smote.seed, 1)))
    out = {
        "original": d,
        "cleaned": cleaned,
        "rebalanced": rebalanced,
        "cleaned_rebalanced": both,
    }
    return {name: replace(ds, variant=name) for name, ds in out.items()}

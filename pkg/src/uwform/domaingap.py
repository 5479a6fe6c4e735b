"""Domain-gap statistics between two image sets via 2-D embedding overlap.

Each image is reduced to 30 orderless statistics (per-channel mean, std,
and an 8-bin histogram), the pooled vectors are standardized and projected
onto their top two principal components, and the two sets are compared by
occupancy-grid intersection and centroid distance. PCA is used instead of
a stochastic neighborhood embedding so runs are deterministic and
seed-free; absolute values are therefore only comparable within this tool.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imgcore import LinearImage

N_HIST_BINS = 8
FEATURE_DIM = 3 + 3 + 3 * N_HIST_BINS


@dataclass(frozen=True)
class Embedding2D:
    points: np.ndarray  # (n, 2)
    method: str = "pca"

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 2:
            raise ValueError(f"expected (n, 2) points, got {p.shape}")
        if not np.isfinite(p).all():
            raise ValueError("embedding contains non-finite coordinates")
        object.__setattr__(self, "points", p)

    def __len__(self) -> int:
        return self.points.shape[0]


def extract_features(img: LinearImage) -> np.ndarray:
    """30 deterministic statistics: mean (3), std (3), 8-bin histograms (24)."""
    data = np.clip(img.data, 0.0, 1.0)
    means = data.mean(axis=(0, 1))
    stds = data.std(axis=(0, 1))
    hists = []
    for c in range(3):
        counts, _ = np.histogram(data[:, :, c], bins=N_HIST_BINS, range=(0.0, 1.0))
        hists.append(counts / counts.sum())
    return np.concatenate([means, stds, np.concatenate(hists)])


def embed_2d(features) -> Embedding2D:
    """Standardize, drop zero-variance dims, project onto top-2 PCs.

    Sign convention: each component's largest-magnitude loading is made
    positive. Fully degenerate input (all vectors identical) embeds to all
    zeros.
    """
    X = np.asarray(list(features), dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 3:
        raise ValueError("embedding needs at least 3 feature vectors")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    keep = std > 0
    if not keep.any():
        return Embedding2D(np.zeros((X.shape[0], 2)))
    Z = (X[:, keep] - mean[keep]) / std[keep]
    _, _, vt = np.linalg.svd(Z, full_matrices=False)
    coords = np.zeros((X.shape[0], 2))
    n_comp = min(2, vt.shape[0])
    for k in range(n_comp):
        component = vt[k]
        if component[np.argmax(np.abs(component))] < 0:
            component = -component
        coords[:, k] = Z @ component
    return Embedding2D(coords)


def _occupied_cells(points: np.ndarray, lo: np.ndarray, span: np.ndarray, grid: int):
    scaled = (points - lo) / span
    idx = np.clip((scaled * grid).astype(int), 0, grid - 1)
    return set(map(tuple, idx))


def intersection_ratio(A: Embedding2D, B: Embedding2D, grid: int = 50) -> float:
    """Percentage of A's occupied grid cells that B also occupies.

    The grid spans the joint bounding box of both sets. A is conventionally
    the synthetic set, B the real one.
    """
    if len(A) == 0 or len(B) == 0:
        raise ValueError("embeddings must be non-empty")
    if grid < 1:
        raise ValueError("grid must be >= 1")
    both = np.vstack([A.points, B.points])
    lo = both.min(axis=0)
    span = both.max(axis=0) - lo
    span[span == 0] = 1.0
    cells_a = _occupied_cells(A.points, lo, span, grid)
    cells_b = _occupied_cells(B.points, lo, span, grid)
    return 100.0 * len(cells_a & cells_b) / len(cells_a)


def center_distance(A: Embedding2D, B: Embedding2D) -> float:
    """Euclidean distance between the two sets' centroids."""
    if len(A) == 0 or len(B) == 0:
        raise ValueError("embeddings must be non-empty")
    return float(np.linalg.norm(A.points.mean(axis=0) - B.points.mean(axis=0)))

"""Codebook training (LBG binary splitting + k-means) and vector encoding.

Feature scaling is handled by a global mean/variance normalization fitted on
the training frames; it is stored alongside the codebook in the model file
and applied to every feature matrix before encoding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadSize, DimMismatch, TooFewVectors

SPLIT_EPSILON = 0.01
KMEANS_TOL = 1e-4
KMEANS_MAX_ITERS = 50


@dataclass(frozen=True)
class Codebook:
    """M centroid vectors plus the final mean squared distortion."""

    centroids: np.ndarray
    distortion: float

    @property
    def size(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


@dataclass(frozen=True)
class Normalization:
    """Per-dimension shift/scale applied to features before quantization."""

    mean: np.ndarray
    scale: np.ndarray

    def apply(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64)
        if rows.shape[-1] != self.mean.shape[0]:
            raise DimMismatch(
                f"feature dim {rows.shape[-1]} != normalization dim {self.mean.shape[0]}"
            )
        return (rows - self.mean) / self.scale


def fit_normalization(vectors: np.ndarray) -> Normalization:
    """Global mean and standard deviation; tiny deviations floor to 1."""
    vectors = np.asarray(vectors, dtype=np.float64)
    mean = vectors.mean(axis=0)
    std = vectors.std(axis=0)
    scale = np.where(std < 1e-8, 1.0, std)
    return Normalization(mean=mean, scale=scale)


def _squared_distances(vectors: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # (n, m) matrix of squared Euclidean distances via the expansion
    # |x - c|^2 = |x|^2 - 2 x.c + |c|^2; clipped at 0 against rounding.
    d2 = (
        np.sum(vectors * vectors, axis=1)[:, None]
        - 2.0 * vectors @ centroids.T
        + np.sum(centroids * centroids, axis=1)[None, :]
    )
    return np.maximum(d2, 0.0)


def kmeans_refine(
    vectors: np.ndarray,
    centroids: np.ndarray,
    max_iters: int = KMEANS_MAX_ITERS,
    tol: float = KMEANS_TOL,
) -> tuple[np.ndarray, list[float]]:
    """Lloyd iterations from the given centroids until distortion stalls.

    Returns the refined centroids and the per-iteration distortion history;
    the last entry is the distortion of the returned centroids. Cells that
    come up empty are re-seeded with the vector farthest from its assigned
    centroid, which can only reduce distortion.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    centroids = np.array(centroids, dtype=np.float64)
    history: list[float] = []
    for _ in range(max_iters):
        d2 = _squared_distances(vectors, centroids)
        assign = np.argmin(d2, axis=1)
        residuals = d2[np.arange(len(vectors)), assign]
        distortion = float(residuals.mean())
        history.append(distortion)
        if len(history) > 1:
            prev = history[-2]
            if prev <= 0.0 or (prev - distortion) / prev < tol:
                return centroids, history
        updated = centroids.copy()
        for m in range(len(centroids)):
            cell = assign == m
            if np.any(cell):
                updated[m] = vectors[cell].mean(axis=0)
        empty = [m for m in range(len(centroids)) if not np.any(assign == m)]
        if empty:
            residuals = residuals.copy()
            for m in empty:
                far = int(np.argmax(residuals))
                updated[m] = vectors[far]
                residuals[far] = -1.0  # each empty cell takes a distinct vector
        centroids = updated
    # Ran out of iterations: report the distortion of the final centroids.
    d2 = _squared_distances(vectors, centroids)
    history.append(float(d2.min(axis=1).mean()))
    return centroids, history


def train_codebook(vectors: np.ndarray, size: int, seed: int = 0) -> Codebook:
    """Grow a codebook of `size` centroids by LBG binary splitting.

    Starts from the global mean and doubles the codebook by splitting each
    centroid into c*(1+eps) and c*(1-eps), running k-means after every split.
    The procedure is fully determined by the data; `seed` is accepted for
    interface stability.
    """
    del seed
    vectors = np.asarray(vectors, dtype=np.float64)
    if size < 1 or size & (size - 1):
        raise BadSize(f"codebook size {size} is not a power of two")
    if len(vectors) < size:
        raise TooFewVectors(f"{len(vectors)} vectors for a size-{size} codebook")

    centroids = vectors.mean(axis=0, keepdims=True)
    centroids, history = kmeans_refine(vectors, centroids)
    while len(centroids) < size:
        centroids = np.vstack(
            [centroids * (1.0 + SPLIT_EPSILON), centroids * (1.0 - SPLIT_EPSILON)]
        )
        centroids, history = kmeans_refine(vectors, centroids)
    return Codebook(centroids=centroids, distortion=history[-1])


def encode(codebook: Codebook, rows: np.ndarray) -> np.ndarray:
    """Map each feature row to its nearest centroid index.

    Ties break toward the lowest index. `rows` must already be normalized
    with the same Normalization the codebook was trained under.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != codebook.dim:
        raise DimMismatch(
            f"rows of dim {rows.shape[-1] if rows.ndim else '?'} "
            f"vs codebook dim {codebook.dim}"
        )
    return np.argmin(_squared_distances(rows, codebook.centroids), axis=1)

"""Complex-plane partition, region-average features and Kruskal-Wallis ranking."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .spectral import ResonanceSet


@dataclass
class PlanePartition:
    """Nearest-centroid partition of the complex plane."""

    centroids: np.ndarray
    d_th: float

    def __post_init__(self):
        self.centroids = np.atleast_1d(np.asarray(self.centroids, dtype=np.complex128))
        if self.centroids.size < 1:
            raise ValueError("a partition needs at least one centroid")
        if not self.d_th > 0:
            raise ValueError("d_th must be positive")

    @property
    def M(self) -> int:
        return self.centroids.size


@dataclass
class FeatureVector:
    values: np.ndarray  # complex, length M
    mask: np.ndarray  # bool, region occupied

    def flat(self) -> np.ndarray:
        """Real parts then imaginary parts, length 2M."""
        return flatten(self.values)


@dataclass
class FeatureRanking:
    scores: np.ndarray  # Kruskal-Wallis H per real column, length 2M
    selected: np.ndarray  # sorted column indices

    def retained_regions(self) -> np.ndarray:
        """Regions with a selected real or imaginary column."""
        M = self.scores.size // 2
        return np.unique(self.selected % M)


def flatten(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.complex128)
    return np.concatenate([v.real, v.imag], axis=-1)


def cluster_labels(points, d_th: float) -> np.ndarray:
    """Complete-linkage agglomeration of ``points`` stopped at distance ``d_th``.

    Returns a cluster id per point; ids are numbered in order of each cluster's
    lowest member index.  Ties between equally distant pairs merge the
    lexicographically smallest (i, j) pair of current cluster slots.
    """
    z = np.atleast_1d(np.asarray(points, dtype=np.complex128))
    Q = z.size
    if Q == 0:
        raise ValueError("cannot cluster an empty point set")
    if not d_th > 0:
        raise ValueError("d_th must be positive")
    D = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(D, np.inf)
    owner = np.arange(Q)  # cluster slot of each point; slot = lowest member index
    active = np.ones(Q, dtype=bool)
    row_min = D.min(axis=1)
    row_arg = D.argmin(axis=1)
    for _ in range(Q - 1):
        i = int(np.argmin(row_min))
        if not row_min[i] <= d_th:
            break
        j = int(row_arg[i])
        # Lance-Williams update for complete linkage, j folds into i (i < j).
        D[i] = np.maximum(D[i], D[j])
        D[:, i] = D[i]
        D[i, i] = np.inf
        D[j] = np.inf
        D[:, j] = np.inf
        active[j] = False
        row_min[j] = np.inf
        owner[owner == j] = i
        stale = active & ((row_arg == i) | (row_arg == j))
        stale[i] = True
        for k in np.flatnonzero(stale):
            row_arg[k] = int(np.argmin(D[k]))
            row_min[k] = D[k, row_arg[k]]
        # Untouched rows keep valid minima: merged distances only grow; a row whose
        # minimum ties with its new distance to i must still point at the lowest index.
        fresh = active & ~stale & (D[:, i] == row_min) & (i < row_arg)
        row_arg[fresh] = i
    _, labels = np.unique(owner, return_inverse=True)
    return labels


def cluster_resonances(points, d_th: float) -> PlanePartition:
    """Partition of the plane whose centroids are the complete-linkage cluster means."""
    z = np.atleast_1d(np.asarray(points, dtype=np.complex128))
    labels = cluster_labels(z, d_th)
    sums = np.bincount(labels, weights=z.real) + 1j * np.bincount(labels, weights=z.imag)
    return PlanePartition(sums / np.bincount(labels), float(d_th))


def assign_region(partition: PlanePartition, z) -> np.ndarray | int:
    """Index of the nearest centroid (lowest index on ties); vectorized over ``z``."""
    z_arr = np.asarray(z, dtype=np.complex128)
    d = np.abs(z_arr.reshape(-1)[:, None] - partition.centroids[None, :])
    idx = d.argmin(axis=1)
    return int(idx[0]) if z_arr.ndim == 0 else idx.reshape(z_arr.shape)


def featurize(rs: ResonanceSet, partition: PlanePartition) -> FeatureVector:
    """Mean of the resonances falling in each region; 0 for empty regions."""
    M = partition.M
    freqs = rs.freqs
    if freqs.size == 0:
        return FeatureVector(np.zeros(M, dtype=np.complex128), np.zeros(M, dtype=bool))
    regions = assign_region(partition, freqs)
    counts = np.bincount(regions, minlength=M)
    sums = np.bincount(regions, weights=freqs.real, minlength=M) + 1j * np.bincount(
        regions, weights=freqs.imag, minlength=M
    )
    mask = counts > 0
    values = np.zeros(M, dtype=np.complex128)
    values[mask] = sums[mask] / counts[mask]
    return FeatureVector(values, mask)


def kruskal_wallis(feature, labels) -> float:
    """Tie-corrected Kruskal-Wallis H statistic; 0 when all values are tied."""
    x = np.asarray(feature, dtype=float)
    g = np.asarray(labels)
    if x.shape != g.shape or x.ndim != 1:
        raise ValueError("feature and labels must be 1-D and of equal length")
    classes = np.unique(g)
    n = x.size
    if classes.size < 2 or n < classes.size:
        raise ValueError("need at least two classes, each present")
    ranks = rankdata(x)
    _, ties = np.unique(x, return_counts=True)
    correction = 1.0 - np.sum(ties ** 3 - ties) / (n ** 3 - n)
    if correction <= 0:
        return 0.0
    center = (n + 1) / 2.0
    spread = sum((g == c).sum() * (ranks[g == c].mean() - center) ** 2 for c in classes)
    return float(12.0 / (n * (n + 1)) * spread / correction)


def select_features(train_features, labels, c_percent: float = 50.0) -> FeatureRanking:
    """Keep the top ``ceil(c/100 * 2M)`` real columns by H (lower index wins ties)."""
    if not 0 < c_percent <= 100:
        raise ValueError("c_percent must lie in (0, 100]")
    X = np.array([f.flat() if isinstance(f, FeatureVector) else flatten(f) for f in train_features])
    if X.size == 0:
        raise ValueError("empty training set")
    scores = np.array([kruskal_wallis(col, labels) for col in X.T])
    keep = math.ceil(round(c_percent / 100.0 * X.shape[1], 9))
    order = np.argsort(-scores, kind="stable")
    return FeatureRanking(scores, np.sort(order[:keep]))

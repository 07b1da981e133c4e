"""Agglomerative average-linkage clustering with Dunn-index model selection.

The dissimilarity between clusters is the unweighted mean of all cross-pair
distances (UPGMA); merges use the Lance-Williams update. The number of
clusters is chosen by maximizing the Dunn index over a candidate range, and
clusters below a minimum size can be folded into a single noise cluster.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .alignment import DistanceMatrix
from .data import ValidationError


@dataclass(frozen=True)
class Dendrogram:
    """n-1 merge records (left id, right id, height, resulting size).

    Leaves are ids 0..n-1; the merge at row t creates id n+t.
    """

    n: int
    merges: np.ndarray  # (n-1, 4) float; ids are integral

    def heights(self) -> np.ndarray:
        return self.merges[:, 2]

    def save_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["left", "right", "height", "size"])
            for left, right, h, size in self.merges:
                w.writerow([int(left), int(right), repr(float(h)), int(size)])


@dataclass(frozen=True)
class ClusterLabels:
    """Cluster index per sequence, plus the optional merged-noise cluster id."""

    labels: np.ndarray
    noise_cluster: Optional[int] = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        m = labels.max() + 1 if labels.size else 0
        if len(np.unique(labels)) != m:
            raise ValidationError("cluster labels must cover 0..M-1")

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels)


def average_linkage(D: DistanceMatrix) -> Dendrogram:
    """UPGMA agglomeration of a distance matrix.

    Ties in the minimum inter-cluster dissimilarity are broken toward the
    lexicographically smallest (min id, max id) pair, so the merge order is
    deterministic across platforms.
    """
    n = D.n
    if n < 2:
        raise ValidationError("need at least 2 points to cluster")
    dist = {}
    full = D.full()
    for i in range(n):
        for j in range(i):
            dist[(j, i)] = full[i, j]
    active = {i: 1 for i in range(n)}  # id -> size
    merges = np.zeros((n - 1, 4))
    next_id = n
    for t in range(n - 1):
        best = None
        for a in sorted(active):
            for b in sorted(active):
                if a >= b:
                    continue
                d = dist[(a, b)]
                if best is None or d < best[0] or (d == best[0] and (a, b) < best[1:]):
                    best = (d, a, b)
        d, a, b = best
        size = active[a] + active[b]
        merges[t] = (a, b, d, size)
        # Lance-Williams update for the average link
        for c in active:
            if c in (a, b):
                continue
            dac = dist[(min(a, c), max(a, c))]
            dbc = dist[(min(b, c), max(b, c))]
            dist[(min(c, next_id), max(c, next_id))] = (
                active[a] * dac + active[b] * dbc) / size
        del active[a], active[b]
        active[next_id] = size
        next_id += 1
    return Dendrogram(n, merges)


def cut(dend: Dendrogram, k: int) -> ClusterLabels:
    """Labels induced by undoing the k-1 last merges; label indices follow
    the order of first member appearance."""
    n = dend.n
    if not 1 <= k <= n:
        raise ValidationError(f"k={k} out of range [1, {n}]")
    parent = list(range(n + max(0, n - k)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t in range(n - k):
        a, b = int(dend.merges[t, 0]), int(dend.merges[t, 1])
        parent[find(a)] = n + t
        parent[find(b)] = n + t

    labels = np.empty(n, dtype=np.int64)
    seen: dict[int, int] = {}
    for i in range(n):
        root = find(i)
        if root not in seen:
            seen[root] = len(seen)
        labels[i] = seen[root]
    return ClusterLabels(labels)


def dunn_index(D: DistanceMatrix, labels: ClusterLabels) -> float:
    """(min inter-cluster distance) / (max intra-cluster diameter).

    All-singleton partitions have zero diameter everywhere and return +inf.
    """
    lab = labels.labels
    m = labels.n_clusters
    if m < 2:
        raise ValidationError("Dunn index needs at least 2 clusters")
    full = D.full()
    same = lab[:, None] == lab[None, :]
    iu = np.triu_indices(D.n, k=1)
    intra = full[iu][same[iu]]
    inter = full[iu][~same[iu]]
    max_diam = intra.max() if intra.size else 0.0
    min_inter = inter.min()
    if max_diam == 0.0:
        return math.inf
    return float(min_inter / max_diam)


def select_num_clusters(dend: Dendrogram, D: DistanceMatrix,
                        k_range: tuple[int, int]) -> tuple[int, ClusterLabels, np.ndarray]:
    """Scan k over the inclusive range and keep the Dunn-maximizing cut.

    Ties break toward smaller k; the +inf singleton sentinel is treated as
    maximal, so degenerate cuts should be excluded via k_range.
    """
    lo, hi = k_range
    if lo > hi:
        raise ValidationError("empty k range")
    if lo < 2 or hi > D.n:
        raise ValidationError(f"k range must lie within [2, {D.n}]")
    ks = range(lo, hi + 1)
    scores = np.empty(len(ks))
    best_k, best_score, best_labels = None, -math.inf, None
    for i, k in enumerate(ks):
        labels = cut(dend, k)
        score = dunn_index(D, labels)
        scores[i] = score
        if score > best_score:
            best_k, best_score, best_labels = k, score, labels
    return best_k, best_labels, scores


def merge_small(labels: ClusterLabels, min_size: int) -> ClusterLabels:
    """Fold every cluster of size < min_size into one trailing noise cluster."""
    if min_size < 1:
        raise ValidationError("min_size must be >= 1")
    sizes = labels.sizes()
    small = np.flatnonzero(sizes < min_size)
    if small.size == 0:
        return labels
    keep = [c for c in range(labels.n_clusters) if c not in set(small.tolist())]
    remap = {c: i for i, c in enumerate(keep)}
    noise_idx = len(keep)
    new = np.array([remap.get(c, noise_idx) for c in labels.labels], dtype=np.int64)
    return ClusterLabels(new, noise_cluster=noise_idx)


def save_labels_csv(path, ids, labels: ClusterLabels) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "cluster"])
        for i, lab in zip(ids, labels.labels):
            w.writerow([i, int(lab)])

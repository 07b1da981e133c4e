"""Walk through the unsupervised half of the pipeline: pairwise optimal
matching distances, average-linkage clustering, Dunn-index selection of the
number of clusters, and merging of tiny clusters into a noise bucket.

Run with `python demos/01_cluster_sequences.py`. Everything is seeded, so the
printed numbers are reproducible.
"""

import numpy as np

from seqselect import (
    average_linkage,
    cut,
    default_cost_scheme,
    dunn_index,
    merge_small,
    pairwise_distances,
    select_num_clusters,
)

rng = np.random.default_rng(0)

# Three behavioral templates over q = 4 states; individuals follow one
# template with occasional random deviations, plus a handful of outliers.
templates = np.array([
    [0] * 10 + [1] * 10 + [0] * 10,
    [2] * 15 + [3] * 15,
    [0, 1, 2, 3] * 7 + [0, 1],
])
rows = []
for t in range(3):
    for _ in range(20):
        seq = templates[t].copy()
        flip = rng.random(30) < 0.1
        seq[flip] = rng.integers(0, 4, flip.sum())
        rows.append(seq)
for _ in range(4):  # outliers that belong to no template
    rows.append(rng.integers(0, 4, 30))
states = np.array(rows)
print(f"{len(states)} sequences of length {states.shape[1]} over 4 states")

costs = default_cost_scheme(4)  # substitution 2, indel 1
D = pairwise_distances(states, costs)
print(f"distance range: {D.tri.min():.1f} .. {D.tri.max():.1f}")

dend = average_linkage(D)
k, labels, scores = select_num_clusters(dend, D, (2, 10))
print("\nDunn index by number of clusters:")
for ki, score in zip(range(2, 11), scores):
    marker = "  <-- selected" if ki == k else ""
    print(f"  k={ki:2d}  dunn={score:.3f}{marker}")

print(f"\ncluster sizes at k={k}: {cut(dend, k).sizes().tolist()}")

# Small clusters (here, the outliers) get folded into one noise cluster so
# the downstream regression is not asked to predict singleton labels.
merged = merge_small(cut(dend, k), min_size=5)
print(f"after merging clusters smaller than 5: sizes {merged.sizes().tolist()}"
      f" (noise cluster index {merged.noise_cluster})")
print(f"final Dunn index: {dunn_index(D, merged):.3f}")

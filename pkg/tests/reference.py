"""Naive reference implementations used as independent test oracles.

These deliberately avoid the library's algorithms: plain recursion instead
of the DP lattice, O(n^3) re-averaging instead of Lance-Williams, exhaustive
pair scans instead of vectorized reductions.
"""

import math

import numpy as np


def edit_distance_recursive(a, b, sub, indel):
    """Memo-free three-way recursion over edit scripts."""

    def rec(i, j):
        if i == 0:
            return j * indel
        if j == 0:
            return i * indel
        return min(
            rec(i - 1, j - 1) + sub[a[i - 1]][b[j - 1]],
            rec(i - 1, j) + indel,
            rec(i, j - 1) + indel,
        )

    return rec(len(a), len(b))


def naive_average_linkage_heights(full):
    """Merge heights from an O(n^3) agglomeration that re-averages all
    cross-pair distances at every step, with the same lexicographic
    tie-break as the library."""
    n = full.shape[0]
    clusters = {i: [i] for i in range(n)}
    heights = []
    next_id = n
    for _ in range(n - 1):
        best = None
        for a in sorted(clusters):
            for b in sorted(clusters):
                if a >= b:
                    continue
                d = np.mean([full[i, j] for i in clusters[a] for j in clusters[b]])
                if best is None or d < best[0] or (d == best[0] and (a, b) < best[1:]):
                    best = (d, a, b)
        d, a, b = best
        clusters[next_id] = clusters.pop(a) + clusters.pop(b)
        heights.append(d)
        next_id += 1
    return np.array(heights)


def dunn_exhaustive(full, labels):
    """Dunn index by scanning every pair of points."""
    n = full.shape[0]
    intra, inter = 0.0, math.inf
    for i in range(n):
        for j in range(i):
            if labels[i] == labels[j]:
                intra = max(intra, full[i, j])
            else:
                inter = min(inter, full[i, j])
    if intra == 0.0:
        return math.inf
    return inter / intra


def nll_per_sample(beta, intercepts, X, y):
    """Direct per-sample summation of the multinomial NLL."""
    total = 0.0
    n = X.shape[0]
    for i in range(n):
        eta = [intercepts[m] + float(np.dot(X[i], beta[m])) for m in range(len(intercepts))]
        top = max(eta)
        lse = top + math.log(sum(math.exp(e - top) for e in eta))
        total += lse - eta[y[i]]
    return total / n


def finite_difference_gradient(fun, x0, eps=1e-5):
    """Central finite differences of a scalar function of a flat vector."""
    g = np.zeros_like(x0)
    for i in range(len(x0)):
        xp = x0.copy()
        xm = x0.copy()
        xp[i] += eps
        xm[i] -= eps
        g[i] = (fun(xp) - fun(xm)) / (2 * eps)
    return g

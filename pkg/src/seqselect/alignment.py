"""Optimal-matching (edit-distance) dissimilarity between categorical sequences.

The distance is the minimal total cost of substitutions and insertions/
deletions transforming one sequence into the other, computed by dynamic
programming over the (|a|+1) x (|b|+1) lattice. Default costs follow the
social-sequence-analysis convention: substitution 2, indel 1.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from .data import SequenceDataset, ValidationError


@dataclass(frozen=True)
class CostScheme:
    """Substitution cost matrix (q x q, symmetric, zero diagonal) and a
    positive indel cost."""

    substitution: np.ndarray
    indel: float

    def __post_init__(self):
        sub = np.asarray(self.substitution, dtype=float)
        object.__setattr__(self, "substitution", sub)
        if sub.ndim != 2 or sub.shape[0] != sub.shape[1]:
            raise ValidationError("substitution matrix must be square")
        if not np.allclose(sub, sub.T):
            raise ValidationError("substitution matrix must be symmetric")
        if np.any(np.diag(sub) != 0):
            raise ValidationError("substitution matrix must have zero diagonal")
        if np.any(sub < 0):
            raise ValidationError("substitution costs must be nonnegative")
        if not self.indel > 0:
            raise ValidationError("indel cost must be positive")

    @property
    def q(self) -> int:
        return self.substitution.shape[0]


def default_cost_scheme(q: int, substitution: float = 2.0, indel: float = 1.0) -> CostScheme:
    """Constant substitution cost between distinct states, constant indel."""
    sub = np.full((q, q), float(substitution))
    np.fill_diagonal(sub, 0.0)
    return CostScheme(sub, float(indel))


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric n x n dissimilarities stored as the row-major lower triangle
    (entry (i, j) with i > j at index i*(i-1)/2 + j)."""

    n: int
    tri: np.ndarray

    def __post_init__(self):
        tri = np.asarray(self.tri, dtype=float)
        object.__setattr__(self, "tri", tri)
        if tri.shape != (self.n * (self.n - 1) // 2,):
            raise ValidationError("triangle length does not match n")
        if tri.size and (not np.all(np.isfinite(tri)) or tri.min() < 0):
            raise ValidationError("distances must be finite and nonnegative")

    def get(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        if i < j:
            i, j = j, i
        return float(self.tri[i * (i - 1) // 2 + j])

    def full(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        idx = np.tril_indices(self.n, k=-1)
        out[idx] = self.tri
        return out + out.T

    @classmethod
    def from_square(cls, mat: np.ndarray) -> "DistanceMatrix":
        mat = np.asarray(mat, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValidationError("distance matrix must be square")
        if not np.allclose(mat, mat.T):
            raise ValidationError("distance matrix must be symmetric")
        n = mat.shape[0]
        return cls(n, mat[np.tril_indices(n, k=-1)])

    # -- persistence ------------------------------------------------------

    MAGIC = b"OMD1"

    def save(self, path) -> None:
        """Binary triangle file: magic 'OMD1', n as u64 LE, f64 LE triangle."""
        with open(path, "wb") as fh:
            fh.write(self.MAGIC)
            fh.write(struct.pack("<Q", self.n))
            fh.write(self.tri.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "DistanceMatrix":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != cls.MAGIC:
                raise ValidationError(f"{path}: bad magic {magic!r}")
            (n,) = struct.unpack("<Q", fh.read(8))
            tri = np.frombuffer(fh.read(), dtype="<f8")
        return cls(n, tri)

    def save_csv(self, path) -> None:
        np.savetxt(path, self.full(), delimiter=",", fmt="%.17g")

    @classmethod
    def load_csv(cls, path) -> "DistanceMatrix":
        return cls.from_square(np.loadtxt(path, delimiter=",", ndmin=2))


def om_distance(a: Sequence[int], b: Sequence[int], costs: CostScheme) -> float:
    """Optimal-matching distance between two state-index sequences.

    Row-wise DP; the within-row (left-deletion) recurrence is resolved with a
    running-minimum scan so each row is a vectorized pass.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    q = costs.q
    for seq in (a, b):
        if seq.size and (seq.min() < 0 or seq.max() >= q):
            raise ValidationError("state index out of alphabet range")
    ind = costs.indel
    la, lb = len(a), len(b)
    jind = np.arange(lb + 1) * ind
    prev = jind.copy()  # row 0: transform empty prefix into b prefix
    row = np.empty(lb + 1)
    for i in range(1, la + 1):
        sub = costs.substitution[a[i - 1], b] if lb else np.empty(0)
        row[0] = i * ind
        cand = np.empty(lb + 1)
        cand[0] = row[0]
        cand[1:] = np.minimum(prev[:-1] + sub, prev[1:] + ind)
        # row[j] = min_{j' <= j} cand[j'] + (j - j')*ind, via prefix min
        row = np.minimum.accumulate(cand - jind) + jind
        prev = row.copy()
    return float(prev[lb])


def _row_block(states, costs, i_start, i_end):
    out = []
    for i in range(i_start, i_end):
        for j in range(i):
            out.append(om_distance(states[i], states[j], costs))
    return np.array(out)


def pairwise_distances(ds: SequenceDataset | np.ndarray,
                       costs: Optional[CostScheme] = None,
                       n_jobs: int = 1) -> DistanceMatrix:
    """All-pairs optimal-matching distances; result independent of chunking."""
    states = ds.states if isinstance(ds, SequenceDataset) else np.asarray(ds)
    n = states.shape[0]
    if costs is None:
        q = int(states.max()) + 1 if states.size else 2
        costs = default_cost_scheme(max(q, 2))
    if n == 1:
        return DistanceMatrix(1, np.empty(0))
    if n_jobs == 1:
        tri = _row_block(states, costs, 0, n)
    else:
        bounds = np.linspace(0, n, num=min(4 * n_jobs, n) + 1, dtype=int)
        blocks = Parallel(n_jobs=n_jobs)(
            delayed(_row_block)(states, costs, lo, hi)
            for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo)
        tri = np.concatenate(blocks)
    return DistanceMatrix(n, tri)

"""Synthetic categorical sequence generators with planted informative
positions, plus the irrepresentability diagnostic for LASSO support recovery.

Sequences are drawn left to right: with probability `markov_persistence` a
position copies the previous state, otherwise it draws fresh from a state
distribution that is cluster-specific at informative positions and shared
elsewhere. The copy chain induces the neighbor correlation that stresses
plain LASSO selection.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data import DesignMatrix, SequenceDataset, StateAlphabet, ValidationError
from .selection import PositionSet

PROB_TOL = 1e-12


@dataclass(frozen=True)
class SynthSpec:
    """Generative recipe: sizes, planted positions, state distributions,
    copy-persistence, class probabilities, and the master seed."""

    n: int
    p: int
    q: int
    n_classes: int
    informative: tuple[int, ...]
    theta_informative: dict  # (class m, position j) -> length-q prob vector
    theta_background: np.ndarray
    markov_persistence: float = 0.0
    class_probs: Optional[np.ndarray] = None
    seed: int = 0

    def __post_init__(self):
        bg = np.asarray(self.theta_background, dtype=float)
        object.__setattr__(self, "theta_background", bg)
        probs = (np.full(self.n_classes, 1.0 / self.n_classes)
                 if self.class_probs is None else np.asarray(self.class_probs, float))
        object.__setattr__(self, "class_probs", probs)
        object.__setattr__(self, "informative", tuple(sorted(self.informative)))
        theta = {(int(m), int(j)): np.asarray(v, dtype=float)
                 for (m, j), v in self.theta_informative.items()}
        object.__setattr__(self, "theta_informative", theta)
        if not 0.0 <= self.markov_persistence < 1.0:
            raise ValidationError("markov_persistence must lie in [0, 1)")
        if any(not 0 <= j < self.p for j in self.informative):
            raise ValidationError("informative positions must lie in 0..p-1")
        for vec in [bg, probs, *theta.values()]:
            if np.any(vec < 0) or abs(vec.sum() - 1.0) > PROB_TOL:
                raise ValidationError("probability vectors must be nonnegative and sum to 1")
        for m in range(self.n_classes):
            for j in self.informative:
                if (m, j) not in theta:
                    raise ValidationError(f"missing theta for class {m}, position {j}")

    def to_json(self, path) -> None:
        doc = {
            "n": self.n, "p": self.p, "q": self.q, "n_classes": self.n_classes,
            "informative": list(self.informative),
            "theta_informative": {f"{m},{j}": v.tolist()
                                  for (m, j), v in self.theta_informative.items()},
            "theta_background": self.theta_background.tolist(),
            "markov_persistence": self.markov_persistence,
            "class_probs": self.class_probs.tolist(),
            "seed": self.seed,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "SynthSpec":
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        theta = {tuple(int(x) for x in key.split(",")): np.array(v)
                 for key, v in d["theta_informative"].items()}
        return cls(d["n"], d["p"], d["q"], d["n_classes"],
                   tuple(d["informative"]), theta,
                   np.array(d["theta_background"]), d["markov_persistence"],
                   np.array(d["class_probs"]), d["seed"])


@dataclass(frozen=True)
class GroundTruth:
    informative: tuple[int, ...]
    labels: np.ndarray
    theta_informative: dict

    def save_json(self, path) -> None:
        doc = {
            "informative": list(self.informative),
            "labels": [int(v) for v in self.labels],
            "theta_informative": {f"{m},{j}": np.asarray(v).tolist()
                                  for (m, j), v in self.theta_informative.items()},
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


def generate(spec: SynthSpec) -> tuple[SequenceDataset, GroundTruth]:
    """Draw a dataset from the spec. Rows use per-row derived seeds, so the
    output is deterministic and rows could be generated in parallel."""
    master = np.random.SeedSequence(spec.seed)
    label_rng = np.random.default_rng(master.spawn(1)[0])
    y = label_rng.choice(spec.n_classes, size=spec.n, p=spec.class_probs)
    row_seeds = np.random.SeedSequence(spec.seed + 1).spawn(spec.n)
    informative = set(spec.informative)
    states = np.empty((spec.n, spec.p), dtype=np.int64)
    for i in range(spec.n):
        rng = np.random.default_rng(row_seeds[i])
        for j in range(spec.p):
            theta = (spec.theta_informative[(int(y[i]), j)]
                     if j in informative else spec.theta_background)
            if j > 0 and rng.random() < spec.markov_persistence:
                states[i, j] = states[i, j - 1]
            else:
                states[i, j] = rng.choice(spec.q, p=theta)
    alphabet = StateAlphabet(tuple(f"S{k}" for k in range(spec.q)))
    ids = tuple(f"seq{i}" for i in range(spec.n))
    ds = SequenceDataset(states, alphabet, ids, outcome=y,
                         outcome_labels=tuple(f"C{m}" for m in range(spec.n_classes)))
    truth = GroundTruth(spec.informative, y, spec.theta_informative)
    return ds, truth


def default_benchmark(seed: int = 91) -> SynthSpec:
    """Desk-scale benchmark: 600 sequences of length 60 over 4 states, 3
    classes, 6 planted positions, copy-persistence 0.6.

    Fresh draws at a planted position land on a class-specific state; the
    background rests on the last state, so the copy chain drags class
    states into neighboring positions and correlates them with the planted
    ones without making any single neighbor a substitute."""
    n, p, q, m = 600, 60, 4, 3
    informative = (8, 17, 26, 35, 44, 53)
    theta = {}
    for mi in range(m):
        for j in informative:
            vec = np.zeros(q)
            vec[mi] = 1.0
            theta[(mi, j)] = vec
    background = np.full(q, 0.1 / (q - 1))
    background[q - 1] = 0.9
    return SynthSpec(n=n, p=p, q=q, n_classes=m, informative=informative,
                     theta_informative=theta,
                     theta_background=background,
                     markov_persistence=0.6, seed=seed)


def irrepresentability_stat(X: DesignMatrix | np.ndarray, support: Sequence[int],
                            signs: Sequence[float], ridge: bool = False) -> float:
    """Infinity norm of X2^T X1 (X1^T X1)^{-1} s, where X1 holds the support
    columns; values >= 1 flag likely LASSO support-recovery failure.

    A rank-deficient support block raises unless ridge=True, which adds a
    1e-8 stabilizer to the Gram matrix (flagged use case for collinear
    designs)."""
    Xd = X.values.toarray() if isinstance(X, DesignMatrix) else np.asarray(X, float)
    support = np.asarray(support, dtype=int)
    signs = np.asarray(signs, dtype=float)
    if signs.shape != support.shape:
        raise ValidationError("signs must pair one value per support column")
    X1 = Xd[:, support]
    rest = np.setdiff1d(np.arange(Xd.shape[1]), support)
    X2 = Xd[:, rest]
    gram = X1.T @ X1
    if ridge:
        gram = gram + 1e-8 * np.eye(gram.shape[0])
    elif np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise ValidationError(
            "support columns are rank deficient; retry with ridge=True "
            "(1e-8 stabilizer)")
    w = np.linalg.solve(gram, signs)
    if rest.size == 0:
        return 0.0
    return float(np.abs(X2.T @ (X1 @ w)).max())


def irrepresentability_by_position(X: DesignMatrix, positions: Sequence[int],
                                   ridge: bool = False) -> float:
    """Position-level wrapper: support = all columns of the given positions,
    all-ones sign pattern."""
    support = np.concatenate([X.columns_of(j) for j in sorted(set(positions))])
    return irrepresentability_stat(X, support, np.ones(len(support)), ridge=ridge)


def score_selection(selected: PositionSet, truth: GroundTruth):
    """(recall, precision, overselection ratio) against the planted positions.

    Empty selections give recall 0 and precision nan."""
    sel = set(selected.positions)
    inf = set(truth.informative)
    if not sel:
        return 0.0, math.nan, 0.0
    hit = len(sel & inf)
    return (hit / len(inf), hit / len(sel), len(sel) / len(inf))

"""Random-forest baseline on the binary one-hot design, with Gini importance.

Trees are grown on bootstrap samples with floor(sqrt(C)) candidate columns
per split; binary features split on 0/1. Importance is the mean decrease in
Gini impurity accumulated per split column, averaged over trees. Randomness
derives from one master seed, so refits are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from .data import DesignMatrix, ValidationError
from .regression import misclassification_rate, stratified_folds
from .selection import PositionSet


@dataclass
class TreeNode:
    """Internal node (column split) or leaf (class distribution)."""

    n_samples: int
    class_counts: np.ndarray
    column: Optional[int] = None
    left: Optional["TreeNode"] = None   # rows with feature == 0
    right: Optional["TreeNode"] = None  # rows with feature == 1
    impurity_decrease: float = 0.0      # weighted by n_node / n_root

    @property
    def is_leaf(self) -> bool:
        return self.column is None

    def distribution(self) -> np.ndarray:
        return self.class_counts / self.class_counts.sum()


@dataclass
class Forest:
    trees: list[TreeNode]
    n_trees: int
    max_depth: int
    oob_indices: list[np.ndarray]
    seed: int
    n_columns: int
    n_classes: int


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.dot(p, p))


def _grow(Xb: np.ndarray, yb: np.ndarray, rng: np.random.Generator,
          depth: int, max_depth: int, mtry: int, n_root: int,
          n_classes: int) -> TreeNode:
    counts = np.bincount(yb, minlength=n_classes).astype(float)
    node = TreeNode(n_samples=len(yb), class_counts=counts)
    g_node = _gini(counts)
    if depth >= max_depth or g_node == 0.0 or len(yb) < 2:
        return node
    candidates = rng.choice(Xb.shape[1], size=mtry, replace=False)
    best_col, best_gain = None, 0.0
    for col in sorted(candidates):
        mask = Xb[:, col] == 1
        nr = int(mask.sum())
        nl = len(yb) - nr
        if nl == 0 or nr == 0:
            continue
        gl = _gini(np.bincount(yb[~mask], minlength=n_classes).astype(float))
        gr = _gini(np.bincount(yb[mask], minlength=n_classes).astype(float))
        gain = g_node - (nl * gl + nr * gr) / len(yb)
        if gain > best_gain + 1e-15:
            best_col, best_gain = int(col), gain
    if best_col is None:
        return node
    mask = Xb[:, best_col] == 1
    node.column = best_col
    node.impurity_decrease = best_gain * len(yb) / n_root
    node.left = _grow(Xb[~mask], yb[~mask], rng, depth + 1, max_depth,
                      mtry, n_root, n_classes)
    node.right = _grow(Xb[mask], yb[mask], rng, depth + 1, max_depth,
                       mtry, n_root, n_classes)
    return node


def _fit_tree(X: np.ndarray, y: np.ndarray, max_depth: int, mtry: int,
              n_classes: int, seed_seq: np.random.SeedSequence):
    rng = np.random.default_rng(seed_seq)
    n = len(y)
    boot = rng.integers(0, n, size=n)
    oob = np.setdiff1d(np.arange(n), boot)
    tree = _grow(X[boot], y[boot], rng, 0, max_depth, mtry, n, n_classes)
    return tree, oob


def fit_forest(X: DesignMatrix | np.ndarray, y: np.ndarray, n_trees: int = 100,
               max_depth: int = 10, seed: int = 0, n_jobs: int = 1) -> Forest:
    """Grow a forest of depth-capped trees on bootstrap samples."""
    if n_trees < 1 or max_depth < 1:
        raise ValidationError("n_trees and max_depth must be >= 1")
    Xd = _dense(X)
    y = np.asarray(y)
    n_classes = int(y.max()) + 1
    if len(np.unique(y)) < 2:
        raise ValidationError("outcome has a single class")
    mtry = max(1, int(math.isqrt(Xd.shape[1])))
    children = np.random.SeedSequence(seed).spawn(n_trees)
    if n_jobs == 1:
        fitted = [_fit_tree(Xd, y, max_depth, mtry, n_classes, c) for c in children]
    else:
        fitted = Parallel(n_jobs=n_jobs)(
            delayed(_fit_tree)(Xd, y, max_depth, mtry, n_classes, c) for c in children)
    trees = [t for t, _ in fitted]
    oob = [o for _, o in fitted]
    return Forest(trees, n_trees, max_depth, oob, seed, Xd.shape[1], n_classes)


def _dense(X) -> np.ndarray:
    if isinstance(X, DesignMatrix):
        return np.asarray(X.values.todense()).astype(np.int8)
    return np.asarray(X).astype(np.int8)


def _tree_distribution(node: TreeNode, row: np.ndarray) -> np.ndarray:
    while not node.is_leaf:
        node = node.right if row[node.column] == 1 else node.left
    return node.distribution()


def predict_forest(forest: Forest, X) -> np.ndarray:
    """Average the per-tree leaf distributions; argmax, smallest index wins."""
    Xd = _dense(X)
    votes = np.zeros((Xd.shape[0], forest.n_classes))
    for tree in forest.trees:  # fixed order keeps the reduction deterministic
        for i in range(Xd.shape[0]):
            votes[i] += _tree_distribution(tree, Xd[i])
    return np.argmax(votes, axis=1)


@dataclass(frozen=True)
class ImportanceVector:
    """Mean decrease in Gini impurity per design column, averaged over trees."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if np.any(values < 0):
            raise ValidationError("importances must be nonnegative")


def gini_importance(forest: Forest) -> ImportanceVector:
    """Accumulate each split's weighted impurity decrease onto its column,
    then average across trees. Columns never split on get importance 0."""
    total = np.zeros(forest.n_columns)

    def walk(node: TreeNode, acc: np.ndarray):
        if node.is_leaf:
            return
        acc[node.column] += node.impurity_decrease
        walk(node.left, acc)
        walk(node.right, acc)

    for tree in forest.trees:
        walk(tree, total)
    return ImportanceVector(total / forest.n_trees)


def select_positions_by_importance(imp: ImportanceVector, threshold: float,
                                   design: DesignMatrix) -> PositionSet:
    """Position selected iff the max importance over its columns >= threshold."""
    if threshold < 0:
        raise ValidationError("threshold must be nonnegative")
    selected = []
    for pos, cols in zip(design.positions, design.group_column_indices()):
        top = imp.values[cols].max()
        if (top > 0 if threshold == 0 else top >= threshold):
            selected.append(int(pos))
    return PositionSet(tuple(selected))


def select_depth(X: DesignMatrix | np.ndarray, y: np.ndarray,
                 depths: Sequence[int] = range(1, 16), n_trees: int = 100,
                 folds: int = 10, seed: int = 0,
                 n_jobs: int = 1) -> tuple[int, np.ndarray]:
    """Pick max_depth by stratified CV accuracy over a depth grid.

    Ties break toward the shallower tree. Returns (best depth, accuracies).
    """
    Xd = _dense(X)
    y = np.asarray(y)
    assign = stratified_folds(y, folds, seed)
    depths = list(depths)
    acc = np.zeros(len(depths))
    for di, depth in enumerate(depths):
        fold_acc = []
        for f in range(folds):
            train = assign != f
            forest = fit_forest(Xd[train], y[train], n_trees=n_trees,
                                max_depth=depth, seed=seed, n_jobs=n_jobs)
            pred = predict_forest(forest, Xd[~train])
            fold_acc.append(1.0 - misclassification_rate(pred, y[~train]))
        acc[di] = float(np.mean(fold_acc))
    return depths[int(np.argmax(acc))], acc


def save_importance_csv(path, imp: ImportanceVector, design: DesignMatrix) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["position", "state", "importance"])
        for c, (j, k) in enumerate(design.columns):
            w.writerow([j, k, repr(float(imp.values[c]))])

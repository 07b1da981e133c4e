"""Penalized multinomial logistic regression by accelerated proximal gradient.

Objective: (1/n) * negative log-likelihood + lambda * penalty, where the
penalty is L1, group (position blocks weighted by sqrt of block size), or
their sparse-group combination. The fitted model is a symmetric softmax over
all M classes with unpenalized intercepts; identifiability comes from the
penalty. Includes lambda-path construction and stratified cross-validation
scored by prediction accuracy.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy import sparse
from scipy.special import logsumexp, softmax

from .data import DesignMatrix, ValidationError


class SolverError(RuntimeError):
    """Raised when the objective becomes non-finite (overflow)."""


@dataclass
class CoefficientTensor:
    """M x C coefficient matrix plus M unpenalized intercepts."""

    beta: np.ndarray
    intercepts: np.ndarray

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        self.intercepts = np.asarray(self.intercepts, dtype=float)
        if self.beta.ndim != 2 or self.intercepts.shape != (self.beta.shape[0],):
            raise ValidationError("beta must be (M, C) with matching intercepts")

    @property
    def n_classes(self) -> int:
        return self.beta.shape[0]

    @property
    def n_columns(self) -> int:
        return self.beta.shape[1]

    @classmethod
    def zeros(cls, n_classes: int, n_columns: int) -> "CoefficientTensor":
        return cls(np.zeros((n_classes, n_columns)), np.zeros(n_classes))

    def copy(self) -> "CoefficientTensor":
        return CoefficientTensor(self.beta.copy(), self.intercepts.copy())

    def save_csv(self, path, design: DesignMatrix) -> None:
        """Sparse CSV `class,position,state,value`; zeros omitted; intercepts
        written with position/state = -1."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["class", "position", "state", "value"])
            for m, b in enumerate(self.intercepts):
                w.writerow([m, -1, -1, repr(float(b))])
            for m in range(self.n_classes):
                for c in np.flatnonzero(self.beta[m]):
                    j, k = design.columns[c]
                    w.writerow([m, j, k, repr(float(self.beta[m, c]))])


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty kind with its group structure.

    By default a group is all columns of one position across all M classes
    (block size M*s_j, weight sqrt(M*s_j)), so a position is in or out
    globally. per_class=True switches to per-class blocks weighted sqrt(s_j).
    """

    kind: str  # lasso | group | sparse_group
    groups: tuple  # tuple of np.ndarray of column indices, one per position
    alpha: float = 1.0
    per_class: bool = False

    def __post_init__(self):
        if self.kind not in ("lasso", "group", "sparse_group"):
            raise ValidationError(f"unknown penalty kind {self.kind!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError("alpha must lie in [0, 1]")
        for g in self.groups:
            if len(g) == 0:
                raise ValidationError("empty penalty group")

    @classmethod
    def from_design(cls, dm: DesignMatrix, kind: str = "lasso",
                    alpha: float = 1.0, per_class: bool = False) -> "PenaltySpec":
        return cls(kind, tuple(dm.group_column_indices()), alpha, per_class)


def _group_blocks(v: np.ndarray, spec: PenaltySpec):
    """Yield (index expression, weight) per penalty block of the (M, C) matrix."""
    M = v.shape[0]
    for cols in spec.groups:
        if spec.per_class:
            w = math.sqrt(len(cols))
            for m in range(M):
                yield (m, cols), w
        else:
            yield (slice(None), cols), math.sqrt(M * len(cols))


def penalty_value(beta: np.ndarray, spec: PenaltySpec) -> float:
    """Penalty term P(beta); the solver objective is nll + lambda * P."""
    l1 = float(np.abs(beta).sum())
    if spec.kind == "lasso":
        return l1
    grp = sum(w * np.linalg.norm(beta[idx]) for idx, w in _group_blocks(beta, spec))
    if spec.kind == "group":
        return float(grp)
    return float(spec.alpha * l1 + (1.0 - spec.alpha) * grp)


# -- proximal operators ----------------------------------------------------

def prox_l1(v: np.ndarray, t: float) -> np.ndarray:
    """Elementwise soft threshold sign(v) * max(|v| - t, 0)."""
    if t < 0:
        raise ValidationError("threshold must be nonnegative")
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def prox_group(v: np.ndarray, t: float, spec: PenaltySpec) -> np.ndarray:
    """Blockwise shrinkage v_j * max(1 - t*w_j/||v_j||, 0) per position block."""
    if t < 0:
        raise ValidationError("threshold must be nonnegative")
    out = v.copy()
    for idx, w in _group_blocks(v, spec):
        block = out[idx]
        norm = np.linalg.norm(block)
        out[idx] = block * max(0.0, 1.0 - t * w / norm) if norm > 0 else 0.0
    return out


def prox_sparse_group(v: np.ndarray, t: float, alpha: float,
                      spec: PenaltySpec) -> np.ndarray:
    """Closed-form prox of the sparse-group penalty: group shrinkage applied
    to the soft-thresholded matrix."""
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError("alpha must lie in [0, 1]")
    return prox_group(prox_l1(v, t * alpha), t * (1.0 - alpha), spec)


def apply_prox(v: np.ndarray, t: float, spec: PenaltySpec) -> np.ndarray:
    if spec.kind == "lasso":
        return prox_l1(v, t)
    if spec.kind == "group":
        return prox_group(v, t, spec)
    return prox_sparse_group(v, t, spec.alpha, spec)


# -- likelihood ------------------------------------------------------------

def _matrix(X):
    return X.values if isinstance(X, DesignMatrix) else X


_DENSE_LIMIT = 20_000_000  # entries; below this, sparse designs run dense


def _solver_matrix(X):
    """Dense BLAS beats csr products for small one-hot designs."""
    Xmat = _matrix(X)
    if sparse.issparse(Xmat) and Xmat.shape[0] * Xmat.shape[1] <= _DENSE_LIMIT:
        return np.asarray(Xmat.todense())
    return Xmat


def _eta(coef: CoefficientTensor, Xmat) -> np.ndarray:
    return Xmat @ coef.beta.T + coef.intercepts[None, :]


def nll(coef: CoefficientTensor, X, y: np.ndarray) -> float:
    """Per-sample multinomial negative log-likelihood."""
    Xmat = _matrix(X)
    y = np.asarray(y)
    if Xmat.shape[0] != y.shape[0] or Xmat.shape[1] != coef.n_columns:
        raise ValidationError("shape mismatch between coef, X, and y")
    eta = np.asarray(_eta(coef, Xmat))
    lse = logsumexp(eta, axis=1)
    return float(np.mean(lse - eta[np.arange(len(y)), y]))


def nll_gradient(coef: CoefficientTensor, X, y: np.ndarray):
    """Gradient of nll: ((softmax - onehot)^T X / n, mean residual) per class."""
    Xmat = _matrix(X)
    y = np.asarray(y)
    if Xmat.shape[0] != y.shape[0] or Xmat.shape[1] != coef.n_columns:
        raise ValidationError("shape mismatch between coef, X, and y")
    eta = np.asarray(_eta(coef, Xmat))
    probs = softmax(eta, axis=1)
    resid = probs.copy()
    resid[np.arange(len(y)), y] -= 1.0
    grad_beta = np.asarray((resid.T @ Xmat)) / len(y)
    grad_int = resid.mean(axis=0)
    return grad_beta, grad_int


def predict_classes(coef: CoefficientTensor, X) -> np.ndarray:
    """argmax_m of the linear predictor; ties go to the smallest class index."""
    Xmat = _matrix(X)
    if Xmat.shape[1] != coef.n_columns:
        raise ValidationError("shape mismatch between coef and X")
    return np.argmax(np.asarray(_eta(coef, Xmat)), axis=1)


def misclassification_rate(pred: np.ndarray, truth: np.ndarray) -> float:
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValidationError("prediction/truth length mismatch")
    return float(np.mean(pred != truth))


# -- solver ------------------------------------------------------------------

@dataclass
class FitResult:
    lam: float
    coef: CoefficientTensor
    objective: float
    iterations: int
    converged: bool
    objective_trajectory: list = field(default_factory=list)


def _lipschitz_estimate(Xmat, n: int, iters: int = 30) -> float:
    """Largest eigenvalue of [1 X]^T [1 X] by power iteration, scaled by the
    softmax curvature bound 1/4 and the 1/n objective scaling."""
    rng = np.random.default_rng(0)
    v = rng.standard_normal(Xmat.shape[1] + 1)
    v /= np.linalg.norm(v)
    lam = 1.0
    for _ in range(iters):
        xb = np.asarray(Xmat @ v[1:]) + v[0]
        w = np.empty_like(v)
        w[0] = xb.sum()
        w[1:] = np.asarray(Xmat.T @ xb).ravel()
        lam = np.linalg.norm(w)
        if lam == 0:
            return 0.25 / n
        v = w / lam
    return 0.25 * lam / n


def fit_penalized(X, y: np.ndarray, penalty: PenaltySpec, lam: float,
                  init: Optional[CoefficientTensor] = None,
                  tol: float = 1e-7, max_iter: int = 10_000) -> FitResult:
    """Monotone FISTA with backtracking on the smooth part.

    Stops when the relative objective change drops below tol; hitting the
    iteration cap flags converged=False rather than raising.
    """
    if lam <= 0:
        raise ValidationError("lambda must be positive")
    Xmat = _solver_matrix(X)
    y = np.asarray(y)
    n = Xmat.shape[0]
    M = int(y.max()) + 1
    C = Xmat.shape[1]
    coef = init.copy() if init is not None else CoefficientTensor.zeros(M, C)

    def smooth(c):
        return nll(c, Xmat, y)

    def objective(c):
        return smooth(c) + lam * penalty_value(c.beta, penalty)

    L = max(_lipschitz_estimate(Xmat, n), 1e-12)
    step = 1.0 / L
    x = coef  # monotone iterate
    y_pt = coef.copy()  # extrapolated point
    t_mom = 1.0
    F_x = objective(x)
    if not np.isfinite(F_x):
        raise SolverError("objective is not finite; raise the lambda floor")
    it = 0
    converged = False
    trajectory = [F_x]
    for it in range(1, max_iter + 1):
        f_y = smooth(y_pt)
        gb, gi = nll_gradient(y_pt, Xmat, y)
        # backtracking on the smooth majorization
        while True:
            z = CoefficientTensor(
                apply_prox(y_pt.beta - step * gb, step * lam, penalty),
                y_pt.intercepts - step * gi)
            f_z = smooth(z)
            db = z.beta - y_pt.beta
            di = z.intercepts - y_pt.intercepts
            quad = (f_y + np.sum(gb * db) + np.dot(gi, di)
                    + (np.sum(db * db) + np.dot(di, di)) / (2.0 * step))
            if f_z <= quad + 1e-12 * max(1.0, abs(f_z)):
                break
            step *= 0.5
            if step < 1e-18:
                raise SolverError("line search failed; raise the lambda floor")
        F_z = f_z + lam * penalty_value(z.beta, penalty)
        if not np.isfinite(F_z):
            raise SolverError("objective is not finite; raise the lambda floor")
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
        if F_z <= F_x:
            x_next, F_next = z, F_z
        else:
            x_next, F_next = x, F_x  # monotone safeguard keeps the best iterate
        y_pt = CoefficientTensor(
            x_next.beta + (t_mom / t_next) * (z.beta - x_next.beta)
            + ((t_mom - 1.0) / t_next) * (x_next.beta - x.beta),
            x_next.intercepts + (t_mom / t_next) * (z.intercepts - x_next.intercepts)
            + ((t_mom - 1.0) / t_next) * (x_next.intercepts - x.intercepts))
        # only declare convergence on an accepted step, so a rejected
        # candidate (F unchanged) cannot stop the solver prematurely
        done = F_z <= F_x and abs(F_x - F_next) <= tol * max(1.0, abs(F_next))
        x, F_x = x_next, F_next
        trajectory.append(F_x)
        t_mom = t_next
        if done:
            converged = True
            break
    return FitResult(lam, x, F_x, it, converged, trajectory)


# -- lambda path -------------------------------------------------------------

def _null_gradient(Xmat, y: np.ndarray) -> np.ndarray:
    """Gradient of nll w.r.t. beta at the null (intercept-only) optimum."""
    n = len(y)
    M = int(y.max()) + 1
    freq = np.bincount(y, minlength=M) / n
    resid = np.tile(freq, (n, 1))
    resid[np.arange(n), y] -= 1.0
    return np.asarray(resid.T @ Xmat) / n


def lambda_max(X, y: np.ndarray, penalty: PenaltySpec) -> float:
    """Smallest lambda at which all penalized coefficients are zero."""
    Xmat = _matrix(X)
    y = np.asarray(y)
    if len(np.unique(y)) < 2:
        raise ValidationError("outcome has a single class")
    G = _null_gradient(Xmat, y)
    l1_max = float(np.abs(G).max())
    if penalty.kind == "lasso" or (penalty.kind == "sparse_group" and penalty.alpha == 1.0):
        return l1_max
    if penalty.kind == "group" or penalty.alpha == 0.0:
        return max(np.linalg.norm(G[idx]) / w for idx, w in _group_blocks(G, penalty))
    # sparse group: per block, smallest lam with ||soft(G_b, lam*a)|| <= lam*(1-a)*w
    a = penalty.alpha
    out = 0.0
    for idx, w in _group_blocks(G, penalty):
        block = np.abs(G[idx]).ravel()
        lo, hi = 0.0, l1_max / max(a, 1e-12)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if np.linalg.norm(np.maximum(block - mid * a, 0.0)) <= mid * (1 - a) * w:
                hi = mid
            else:
                lo = mid
        out = max(out, hi)
    return out


def lambda_grid(X, y: np.ndarray, penalty: PenaltySpec,
                count: int = 100, ratio: float = 1e-4) -> np.ndarray:
    """Log-spaced descending grid from lambda_max down to ratio*lambda_max."""
    if count < 2:
        raise ValidationError("grid needs at least 2 points")
    if not 0 < ratio < 1:
        raise ValidationError("ratio must lie in (0, 1)")
    lmax = lambda_max(X, y, penalty)
    return np.geomspace(lmax, ratio * lmax, count)


# -- cross-validation ---------------------------------------------------------

@dataclass
class CVResult:
    lambdas: np.ndarray
    mean_accuracy: np.ndarray
    fold_accuracy: np.ndarray  # (folds, n_lambdas)
    best_lambda: float
    refit: FitResult
    folds: np.ndarray  # fold index per row

    def save_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            nf = self.fold_accuracy.shape[0]
            w.writerow(["lambda", "mean_accuracy"] + [f"fold_{i}" for i in range(nf)])
            for i, lam in enumerate(self.lambdas):
                w.writerow([repr(float(lam)), repr(float(self.mean_accuracy[i]))]
                           + [repr(float(a)) for a in self.fold_accuracy[:, i]])

    @property
    def best_accuracy(self) -> float:
        return float(self.mean_accuracy.max())


def stratified_folds(y: np.ndarray, folds: int, seed: int) -> np.ndarray:
    """Fold index per row; each class is shuffled then dealt round-robin."""
    y = np.asarray(y)
    if folds < 2:
        raise ValidationError("need at least 2 folds")
    counts = np.bincount(y)
    if counts.min() < folds:
        raise ValidationError(
            f"smallest class has {counts.min()} members, fewer than {folds} folds")
    rng = np.random.default_rng(seed)
    assign = np.empty(len(y), dtype=np.int64)
    for cls in range(len(counts)):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        assign[idx] = np.arange(len(idx)) % folds
    return assign


def fit_path(X, y: np.ndarray, penalty: PenaltySpec, lambdas: np.ndarray,
             tol: float = 1e-7, max_iter: int = 10_000) -> list[FitResult]:
    """Warm-started fits along a descending lambda grid."""
    fits = []
    init = None
    for lam in lambdas:
        res = fit_penalized(X, y, penalty, float(lam), init=init,
                            tol=tol, max_iter=max_iter)
        fits.append(res)
        init = res.coef
    return fits


def _fold_accuracies(Xmat, y, penalty, lambdas, assign, fold, tol, max_iter):
    train = assign != fold
    test = ~train
    fits = fit_path(Xmat[train], y[train], penalty, lambdas, tol, max_iter)
    return np.array([
        1.0 - misclassification_rate(predict_classes(f.coef, Xmat[test]), y[test])
        for f in fits])


def cross_validate(X, y: np.ndarray, penalty: PenaltySpec, lambdas: np.ndarray,
                   folds: int = 10, seed: int = 0, n_jobs: int = 1,
                   tol: float = 1e-7, max_iter: int = 10_000) -> CVResult:
    """Stratified k-fold CV over a lambda path, scored by accuracy.

    best_lambda maximizes mean accuracy with ties broken toward larger
    lambda; the refit is on the full data at best_lambda (warm-started down
    the path).
    """
    Xmat = _solver_matrix(X)
    y = np.asarray(y)
    lambdas = np.asarray(lambdas, dtype=float)
    assign = stratified_folds(y, folds, seed)
    if n_jobs == 1:
        rows = [_fold_accuracies(Xmat, y, penalty, lambdas, assign, f, tol, max_iter)
                for f in range(folds)]
    else:
        rows = Parallel(n_jobs=n_jobs)(
            delayed(_fold_accuracies)(Xmat, y, penalty, lambdas, assign, f, tol, max_iter)
            for f in range(folds))
    fold_acc = np.vstack(rows)
    mean_acc = fold_acc.mean(axis=0)
    best_idx = int(np.argmax(mean_acc))  # grid is descending, so first max = largest lam
    best_lambda = float(lambdas[best_idx])
    refit = fit_path(Xmat, y, penalty, lambdas[:best_idx + 1], tol, max_iter)[-1]
    return CVResult(lambdas, mean_acc, fold_acc, best_lambda, refit, assign)

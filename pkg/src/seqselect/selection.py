"""Position-selection procedures built on the penalized regression core.

Implements hard-threshold extraction of active positions, the two-step
thresholded LASSO (CV-tuned L1 fit, threshold, CV-tuned refit on surviving
positions), threshold sweeps, the iterated refit-until-stable variant, and
lambda-path tables. Every reported misclassification comes from a fresh
stratified CV on the restricted design with a fixed seed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from .data import DesignMatrix, ValidationError
from .regression import (
    CoefficientTensor,
    CVResult,
    PenaltySpec,
    cross_validate,
    lambda_grid,
    fit_path,
)

ZERO_TOL = 1e-12  # "strictly nonzero" cutoff when t0 = 0


@dataclass(frozen=True)
class PositionSet:
    """Sorted selected positions, optionally with the per-class sets whose
    union they are."""

    positions: tuple[int, ...]
    per_class: Optional[dict[int, frozenset[int]]] = None

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(sorted(self.positions)))
        if self.per_class is not None:
            union = sorted(set().union(*self.per_class.values()) if self.per_class else set())
            if tuple(union) != self.positions:
                raise ValidationError("positions must equal the union of per-class sets")

    def __len__(self) -> int:
        return len(self.positions)


@dataclass
class CVConfig:
    """Knobs shared by every CV-tuned fit inside a selection procedure."""

    folds: int = 10
    seed: int = 0
    n_lambdas: int = 100
    ratio: float = 1e-4
    n_jobs: int = 1
    tol: float = 1e-7
    max_iter: int = 10_000


@dataclass
class SelectionReport:
    method: str
    tuning: dict
    selected: PositionSet
    n_positions: int
    cv_misclassification: float
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "method": self.method,
            "tuning": self.tuning,
            "positions": list(self.selected.positions),
            "per_class": ({str(m): sorted(s) for m, s in self.selected.per_class.items()}
                          if self.selected.per_class is not None else None),
            "n_positions": self.n_positions,
            "cv_misclassification": self.cv_misclassification,
            "history": self.history,
        }

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "SelectionReport":
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        per_class = d.get("per_class")
        if per_class is not None:
            per_class = {int(m): frozenset(s) for m, s in per_class.items()}
        return cls(d["method"], d["tuning"],
                   PositionSet(tuple(d["positions"]), per_class),
                   d["n_positions"], d["cv_misclassification"],
                   d.get("history", []))


def active_positions(coef: CoefficientTensor, design: DesignMatrix,
                     t0: float = 0.0) -> PositionSet:
    """Positions with any coefficient of magnitude >= t0 in any class.

    t0 = 0 means strictly nonzero (|beta| > 1e-12). Also returns the
    per-class sets whose union the result is.
    """
    if t0 < 0:
        raise ValidationError("threshold must be nonnegative")
    mags = np.abs(coef.beta)
    hit = mags > ZERO_TOL if t0 == 0 else mags >= t0
    js = np.array([j for j, _ in design.columns])
    per_class = {}
    for m in range(coef.n_classes):
        per_class[m] = frozenset(int(j) for j in np.unique(js[hit[m]]))
    union = sorted(set().union(*per_class.values()))
    return PositionSet(tuple(union), per_class)


def _cv_lasso(dm: DesignMatrix, y, cv: CVConfig) -> CVResult:
    spec = PenaltySpec.from_design(dm, "lasso")
    grid = lambda_grid(dm, y, spec, count=cv.n_lambdas, ratio=cv.ratio)
    return cross_validate(dm, y, spec, grid, folds=cv.folds, seed=cv.seed,
                          n_jobs=cv.n_jobs, tol=cv.tol, max_iter=cv.max_iter)


def null_misclassification(y) -> float:
    """Error rate of always predicting the majority class."""
    y = np.asarray(y)
    return float(1.0 - np.bincount(y).max() / len(y))


def lasso_selection(dm: DesignMatrix, y, cv: CVConfig = CVConfig(),
                    step1: Optional[CVResult] = None) -> SelectionReport:
    """Plain CV-tuned LASSO: report the nonzero positions of the refit."""
    res = step1 if step1 is not None else _cv_lasso(dm, y, cv)
    selected = active_positions(res.refit.coef, dm, 0.0)
    return SelectionReport(
        method="lasso",
        tuning={"lambda": res.best_lambda, "folds": cv.folds, "seed": cv.seed},
        selected=selected,
        n_positions=len(selected),
        cv_misclassification=1.0 - res.best_accuracy,
        history=[["active", len(selected)]],
    )


def thresholded_lasso(dm: DesignMatrix, y, t0: float,
                      cv: CVConfig = CVConfig(),
                      step1: Optional[CVResult] = None) -> SelectionReport:
    """Two-step selection: CV-tuned L1 fit, hard threshold at t0 on the
    per-class coefficients, then a fresh CV-tuned L1 refit restricted to the
    surviving positions. The final set is the refit's nonzero positions."""
    if t0 < 0:
        raise ValidationError("threshold must be nonnegative")
    res = step1 if step1 is not None else _cv_lasso(dm, y, cv)
    survivors = active_positions(res.refit.coef, dm, t0)
    if len(survivors) == 0:
        largest = float(np.abs(res.refit.coef.beta).max())
        raise ValidationError(
            f"no coefficients survive t0={t0:g}; largest usable threshold is {largest:g}")
    sub = dm.restrict(survivors.positions)
    refit = _cv_lasso(sub, y, cv)
    final = active_positions(refit.refit.coef, sub, 0.0)
    return SelectionReport(
        method="thresholded_lasso",
        tuning={"t0": t0, "lambda_step1": res.best_lambda,
                "lambda_step2": refit.best_lambda,
                "folds": cv.folds, "seed": cv.seed},
        selected=final,
        n_positions=len(final),
        cv_misclassification=1.0 - refit.best_accuracy,
        history=[["survivors_pre_refit", len(survivors)],
                 ["final", len(final)]],
    )


def default_threshold_grid(coef: CoefficientTensor, count: int = 40) -> np.ndarray:
    """Log-spaced thresholds between the 1st and 99th percentile of the
    nonzero coefficient magnitudes."""
    mags = np.abs(coef.beta)
    mags = mags[mags > ZERO_TOL]
    if mags.size == 0:
        raise ValidationError("no nonzero coefficients to build a threshold grid")
    lo, hi = np.percentile(mags, [1, 99])
    lo = max(lo, ZERO_TOL)
    return np.geomspace(lo, max(hi, lo * (1 + 1e-12)), count)


def threshold_sweep(dm: DesignMatrix, y, grid: Optional[Sequence[float]] = None,
                    cv: CVConfig = CVConfig(),
                    step1: Optional[CVResult] = None) -> list[SelectionReport]:
    """One thresholded-LASSO report per threshold, sharing the single step-1
    fit. A threshold with no survivors yields a null-model marker row instead
    of failing the sweep."""
    res = step1 if step1 is not None else _cv_lasso(dm, y, cv)
    if grid is None:
        grid = default_threshold_grid(res.refit.coef)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValidationError("threshold grid is empty")
    if np.any(np.diff(grid) < 0):
        raise ValidationError("threshold grid must be sorted ascending")
    reports = []
    for t0 in grid:
        try:
            reports.append(thresholded_lasso(dm, y, float(t0), cv, step1=res))
        except ValidationError as err:
            reports.append(SelectionReport(
                method="thresholded_lasso",
                tuning={"t0": float(t0), "error": str(err),
                        "folds": cv.folds, "seed": cv.seed},
                selected=PositionSet(()),
                n_positions=0,
                cv_misclassification=null_misclassification(y),
                history=[["survivors_pre_refit", 0]],
            ))
    return reports


def pick_elbow(reports: Sequence[SelectionReport], slack: float = 0.01) -> SelectionReport:
    """Sweep row with the fewest positions among those within `slack` of the
    best misclassification; ties go to the larger threshold."""
    usable = [r for r in reports if "error" not in r.tuning and r.n_positions > 0]
    if not usable:
        raise ValidationError("sweep has no usable rows")
    best = min(r.cv_misclassification for r in usable)
    near = [r for r in usable if r.cv_misclassification <= best + slack]
    return min(near, key=lambda r: (r.n_positions, -r.tuning.get("t0", 0.0)))


def repeated_lasso(dm: DesignMatrix, y, stability_window: int = 5,
                   max_rounds: int = 100,
                   cv: CVConfig = CVConfig()) -> SelectionReport:
    """Iterate CV-tuned LASSO on the currently active positions until the
    position set is unchanged for stability_window consecutive rounds."""
    if max_rounds < stability_window:
        raise ValidationError("max_rounds must be >= stability_window")
    current = dm
    history: list = []
    stable_runs = 0
    prev_positions: Optional[tuple[int, ...]] = None
    last_cv: Optional[CVResult] = None
    selected = PositionSet(tuple(dm.positions))
    stabilized = False
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        last_cv = _cv_lasso(current, y, cv)
        selected = active_positions(last_cv.refit.coef, current, 0.0)
        history.append(["round", rounds, len(selected)])
        if selected.positions == prev_positions:
            stable_runs += 1
        else:
            stable_runs = 1
        prev_positions = selected.positions
        if stable_runs >= stability_window:
            stabilized = True
            break
        if len(selected) == 0:
            break
        current = dm.restrict(selected.positions)
    return SelectionReport(
        method="repeated_lasso",
        tuning={"stability_window": stability_window, "max_rounds": max_rounds,
                "rounds": rounds, "stabilized": stabilized,
                "lambda_final": last_cv.best_lambda,
                "folds": cv.folds, "seed": cv.seed},
        selected=selected,
        n_positions=len(selected),
        cv_misclassification=1.0 - last_cv.best_accuracy,
        history=history,
    )


def restricted_misclassification(dm: DesignMatrix, y, positions: Sequence[int],
                                 cv: CVConfig = CVConfig()) -> float:
    """Fresh CV-tuned LASSO misclassification on the restricted design; the
    null-model error when the position set is empty."""
    if len(positions) == 0:
        return null_misclassification(y)
    res = _cv_lasso(dm.restrict(positions), y, cv)
    return 1.0 - res.best_accuracy


def lambda_path_table(dm: DesignMatrix, y, lambdas: Sequence[float],
                      cv: CVConfig = CVConfig(),
                      mode: str = "active_at_lambda") -> list[dict]:
    """Rows of (lambda, n_positions, misclassification) along a lambda path.

    mode 'active_at_lambda' counts the nonzero positions of the fit at each
    lambda; 'threshold_at_lambda' thresholds the CV-optimal fit's
    coefficients at lambda instead. Misclassification is a fresh CV on the
    restricted design.
    """
    if mode not in ("active_at_lambda", "threshold_at_lambda"):
        raise ValidationError(f"unknown path mode {mode!r}")
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size == 0:
        raise ValidationError("lambda list is empty")
    spec = PenaltySpec.from_design(dm, "lasso")
    rows = []
    if mode == "threshold_at_lambda":
        res = _cv_lasso(dm, y, cv)
        for lam in lambdas:
            sel = active_positions(res.refit.coef, dm, float(lam))
            rows.append({
                "lambda": float(lam),
                "n_positions": len(sel),
                "misclassification": restricted_misclassification(dm, y, sel.positions, cv),
            })
        return rows
    order = np.argsort(lambdas)[::-1]  # fit descending for warm starts
    fits = fit_path(dm, y, spec, lambdas[order], tol=cv.tol, max_iter=cv.max_iter)
    by_lam = {float(lambdas[order][i]): fits[i] for i in range(len(fits))}
    for lam in lambdas:
        sel = active_positions(by_lam[float(lam)].coef, dm, 0.0)
        rows.append({
            "lambda": float(lam),
            "n_positions": len(sel),
            "misclassification": restricted_misclassification(dm, y, sel.positions, cv),
        })
    return rows


def save_sweep_csv(path, reports: Sequence[SelectionReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t0", "survivors_pre_refit", "n_positions", "misclassification"])
        for r in reports:
            pre = next((h[1] for h in r.history if h[0] == "survivors_pre_refit"), "")
            w.writerow([repr(float(r.tuning["t0"])), pre, r.n_positions,
                        repr(float(r.cv_misclassification))])


def save_path_csv(path, rows: Sequence[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "n_positions", "misclassification"])
        for r in rows:
            w.writerow([repr(r["lambda"]), r["n_positions"], repr(r["misclassification"])])

"""The core selection story: plain LASSO keeps many correlated positions,
while the two-step thresholded LASSO prunes down to the planted ones at the
same cross-validated accuracy.

A small synthetic instance keeps the runtime at a few seconds; the full
benchmark used by the acceptance suite is `default_benchmark()`.
"""

import numpy as np

from seqselect import (
    CVConfig,
    SynthSpec,
    default_threshold_grid,
    encode_one_hot,
    generate,
    lasso_selection,
    pick_elbow,
    score_selection,
    threshold_sweep,
)
from seqselect.selection import _cv_lasso

# 200 sequences, 16 positions, 2 planted ones; neighbor copying at 0.5 makes
# the positions around the planted ones correlated, which is exactly what
# trips up plain LASSO.
q, m = 3, 2
informative = (5, 11)
theta = {(mi, j): np.roll(np.array([0.9, 0.05, 0.05]), mi)
         for mi in range(m) for j in informative}
spec = SynthSpec(n=200, p=16, q=q, n_classes=m, informative=informative,
                 theta_informative=theta,
                 theta_background=np.full(q, 1 / q),
                 markov_persistence=0.5, seed=2)
ds, truth = generate(spec)
dm = encode_one_hot(ds)
print(f"planted positions: {truth.informative}")

cv = CVConfig(folds=5, seed=0, n_lambdas=20, ratio=1e-2, tol=1e-6)
step1 = _cv_lasso(dm, ds.outcome, cv)

plain = lasso_selection(dm, ds.outcome, cv, step1=step1)
recall, precision, over = score_selection(plain.selected, truth)
print(f"\nplain LASSO: {plain.n_positions} positions, "
      f"CV misclassification {plain.cv_misclassification:.3f}")
print(f"  recall {recall:.2f}, precision {precision:.2f}, "
      f"overselection x{over:.1f}")

# Sweep hard thresholds over the fitted coefficient magnitudes, refitting on
# the survivors each time, then pick the fewest-positions row whose error is
# within one point of the best.
grid = default_threshold_grid(step1.refit.coef, count=8)
reports = threshold_sweep(dm, ds.outcome, grid, cv, step1=step1)
print("\nthreshold sweep (t0, positions, misclassification):")
for r in reports:
    tag = " (no survivors)" if "error" in r.tuning else ""
    print(f"  {r.tuning['t0']:.3f}  {r.n_positions:3d}  "
          f"{r.cv_misclassification:.3f}{tag}")

best = pick_elbow(reports)
recall, precision, over = score_selection(best.selected, truth)
print(f"\nelbow at t0={best.tuning['t0']:.3f}: positions "
      f"{list(best.selected.positions)}, CV misclassification "
      f"{best.cv_misclassification:.3f}")
print(f"  recall {recall:.2f}, precision {precision:.2f}, "
      f"overselection x{over:.1f}")

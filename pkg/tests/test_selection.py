import numpy as np
import pytest

from seqselect.data import ValidationError
from seqselect.regression import CoefficientTensor
from seqselect.selection import (
    CVConfig,
    PositionSet,
    SelectionReport,
    active_positions,
    default_threshold_grid,
    lambda_path_table,
    lasso_selection,
    null_misclassification,
    pick_elbow,
    repeated_lasso,
    restricted_misclassification,
    save_path_csv,
    save_sweep_csv,
    threshold_sweep,
    thresholded_lasso,
)

from conftest import tiny_dataset
from seqselect import encode_one_hot


def report(t0, n, mis):
    return SelectionReport("thresholded_lasso", {"t0": t0},
                           PositionSet(tuple(range(n))), n, mis)


def test_position_set_sorted_and_union_checked():
    ps = PositionSet((5, 1, 3))
    assert ps.positions == (1, 3, 5)
    assert len(ps) == 3
    PositionSet((1, 2), {0: frozenset({1}), 1: frozenset({2})})
    with pytest.raises(ValidationError):
        PositionSet((1, 2), {0: frozenset({1})})


def test_active_positions_thresholds(tiny):
    _, _, dm = tiny
    beta = np.zeros((2, dm.n_columns))
    beta[0, 0] = 0.5   # column 0 -> position 0
    beta[1, 4] = -0.2  # some later position
    coef = CoefficientTensor(beta, np.zeros(2))
    j4 = dm.columns[4][0]
    assert active_positions(coef, dm, 0.0).positions == tuple(sorted({0, j4}))
    assert active_positions(coef, dm, 0.3).positions == (0,)
    assert active_positions(coef, dm, 0.6).positions == ()
    per = active_positions(coef, dm, 0.0).per_class
    assert per[0] == frozenset({0}) and per[1] == frozenset({j4})
    with pytest.raises(ValidationError):
        active_positions(coef, dm, -1.0)


def test_lasso_selection_recovers_planted(tiny, fast_cv):
    ds, truth, dm = tiny
    rep = lasso_selection(dm, ds.outcome, fast_cv)
    assert set(truth.informative) <= set(rep.selected.positions)
    assert rep.cv_misclassification < 0.15
    assert rep.method == "lasso"
    assert rep.tuning["lambda"] > 0


def test_thresholded_lasso_prunes_noise(tiny, fast_cv):
    ds, truth, dm = tiny
    rep = thresholded_lasso(dm, ds.outcome, t0=1.1, cv=fast_cv)
    assert set(rep.selected.positions) == set(truth.informative)
    assert rep.cv_misclassification < 0.15
    assert rep.history[0][0] == "survivors_pre_refit"


def test_thresholded_lasso_empty_survivors_names_largest(tiny, fast_cv):
    ds, _, dm = tiny
    with pytest.raises(ValidationError, match="largest usable threshold"):
        thresholded_lasso(dm, ds.outcome, t0=100.0, cv=fast_cv)
    with pytest.raises(ValidationError):
        thresholded_lasso(dm, ds.outcome, t0=-0.1, cv=fast_cv)


def test_default_threshold_grid_spans_magnitudes():
    beta = np.array([[0.0, 0.01, 0.1, 1.0]])
    grid = default_threshold_grid(CoefficientTensor(beta, np.zeros(1)), count=7)
    assert len(grid) == 7
    assert np.all(np.diff(grid) > 0)
    assert grid[0] >= 0.01 * 0.9 and grid[-1] <= 1.0
    with pytest.raises(ValidationError):
        default_threshold_grid(CoefficientTensor.zeros(1, 4))


def test_threshold_sweep_marks_empty_rows(tiny, fast_cv):
    ds, _, dm = tiny
    reports = threshold_sweep(dm, ds.outcome, [0.5, 50.0], fast_cv)
    assert len(reports) == 2
    assert "error" not in reports[0].tuning
    assert "error" in reports[1].tuning
    assert reports[1].n_positions == 0
    assert reports[1].cv_misclassification == pytest.approx(
        null_misclassification(ds.outcome))


def test_threshold_sweep_rejects_bad_grid(tiny, fast_cv):
    ds, _, dm = tiny
    with pytest.raises(ValidationError):
        threshold_sweep(dm, ds.outcome, [0.5, 0.1], fast_cv)
    with pytest.raises(ValidationError):
        threshold_sweep(dm, ds.outcome, [], fast_cv)


def test_pick_elbow_prefers_fewest_within_slack():
    reports = [report(0.1, 20, 0.050),
               report(0.2, 10, 0.055),
               report(0.3, 4, 0.070),
               report(0.4, 0, 0.300)]
    best = pick_elbow(reports, slack=0.01)
    assert best.n_positions == 10
    assert pick_elbow(reports, slack=0.03).n_positions == 4


def test_pick_elbow_tie_goes_to_larger_threshold():
    reports = [report(0.1, 5, 0.05), report(0.2, 5, 0.05)]
    assert pick_elbow(reports).tuning["t0"] == 0.2


def test_pick_elbow_needs_usable_rows():
    bad = SelectionReport("thresholded_lasso", {"t0": 1.0, "error": "empty"},
                          PositionSet(()), 0, 0.5)
    with pytest.raises(ValidationError):
        pick_elbow([bad])


def test_repeated_lasso_stabilizes(tiny, fast_cv):
    ds, truth, dm = tiny
    rep = repeated_lasso(dm, ds.outcome, stability_window=3, max_rounds=20,
                         cv=fast_cv)
    assert rep.tuning["stabilized"]
    assert rep.tuning["rounds"] <= 20
    counts = [h[2] for h in rep.history]
    assert all(a >= b for a, b in zip(counts, counts[1:]))  # non-increasing
    assert set(truth.informative) <= set(rep.selected.positions)
    with pytest.raises(ValidationError):
        repeated_lasso(dm, ds.outcome, stability_window=5, max_rounds=3)


def test_restricted_misclassification_bounds(tiny, fast_cv):
    ds, truth, dm = tiny
    null = restricted_misclassification(dm, ds.outcome, [], fast_cv)
    assert null == pytest.approx(null_misclassification(ds.outcome))
    informative = restricted_misclassification(dm, ds.outcome,
                                               truth.informative, fast_cv)
    assert informative < null


def test_lambda_path_modes(tiny, fast_cv):
    ds, _, dm = tiny
    lams = [0.2, 0.05, 0.01]
    rows = lambda_path_table(dm, ds.outcome, lams, fast_cv, mode="active_at_lambda")
    assert [r["lambda"] for r in rows] == lams
    npos = [r["n_positions"] for r in rows]
    assert npos[0] <= npos[-1]  # weaker penalty keeps more positions
    rows2 = lambda_path_table(dm, ds.outcome, [0.5, 0.05], fast_cv,
                              mode="threshold_at_lambda")
    assert rows2[0]["n_positions"] <= rows2[1]["n_positions"]
    with pytest.raises(ValidationError):
        lambda_path_table(dm, ds.outcome, lams, fast_cv, mode="bogus")
    with pytest.raises(ValidationError):
        lambda_path_table(dm, ds.outcome, [], fast_cv)


def test_report_json_round_trip(tmp_path, tiny, fast_cv):
    ds, _, dm = tiny
    rep = thresholded_lasso(dm, ds.outcome, t0=1.1, cv=fast_cv)
    path = tmp_path / "report.json"
    rep.save_json(path)
    back = SelectionReport.from_json(path)
    assert back.selected.positions == rep.selected.positions
    assert back.selected.per_class == rep.selected.per_class
    assert back.cv_misclassification == rep.cv_misclassification
    assert back.tuning == rep.tuning


def test_sweep_and_path_csv(tmp_path):
    reports = [report(0.1, 3, 0.05)]
    reports[0].history.append(["survivors_pre_refit", 4])
    sweep_path = tmp_path / "sweep.csv"
    save_sweep_csv(sweep_path, reports)
    lines = sweep_path.read_text().strip().split("\n")
    assert lines[0] == "t0,survivors_pre_refit,n_positions,misclassification"
    assert lines[1] == "0.1,4,3,0.05"
    path_path = tmp_path / "path.csv"
    save_path_csv(path_path, [{"lambda": 0.1, "n_positions": 2,
                               "misclassification": 0.25}])
    assert path_path.read_text().strip().split("\n")[1] == "0.1,2,0.25"


def test_survivor_counts_monotone_in_threshold():
    # randomized property: for any coefficient tensor and ascending grid,
    # pre-refit survivor counts never increase
    rng = np.random.default_rng(0)
    ds, _ = tiny_dataset(seed=9, n=40, p=8, q=3)
    dm = encode_one_hot(ds)
    for _ in range(20):
        beta = rng.standard_normal((3, dm.n_columns)) * rng.random()
        beta[rng.random(beta.shape) < 0.5] = 0.0
        coef = CoefficientTensor(beta, np.zeros(3))
        grid = np.sort(rng.random(10) * np.abs(beta).max() * 1.2)
        counts = [len(active_positions(coef, dm, float(t))) for t in grid]
        assert all(a >= b for a, b in zip(counts, counts[1:]))

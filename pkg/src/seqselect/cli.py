"""Command-line pipeline: ingest -> cluster -> select -> report, plus
synthetic benchmarking.

Every run writes a `config.json` echo of the resolved parameters, and all
randomness flows from `--seed` (default 0, never wall-clock entropy), so a
repeated run produces byte-identical outputs. On failure, files already
written for the run are removed and the exit code is nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .alignment import default_cost_scheme, pairwise_distances
from .clustering import (average_linkage, merge_small, save_labels_csv,
                         select_num_clusters)
from .data import CsvFormat, encode_one_hot, load_sequences, save_sequences
from .forest import (fit_forest, gini_importance, save_importance_csv,
                     select_depth, select_positions_by_importance)
from .regression import PenaltySpec, cross_validate, lambda_grid
from .selection import (CVConfig, SelectionReport, active_positions,
                        default_threshold_grid, lasso_selection, pick_elbow,
                        repeated_lasso, restricted_misclassification,
                        save_path_csv, save_sweep_csv, threshold_sweep,
                        thresholded_lasso, lambda_path_table, _cv_lasso)
from .synthetic import SynthSpec, default_benchmark, generate


_CURRENT_TRACKER = None


class _OutputTracker:
    """Records written files so a failed run can clean up after itself."""

    def __init__(self, outdir):
        global _CURRENT_TRACKER
        self.outdir = outdir
        self.files: list[str] = []
        os.makedirs(outdir, exist_ok=True)
        _CURRENT_TRACKER = self

    def path(self, name):
        p = os.path.join(self.outdir, name)
        self.files.append(p)
        return p

    def cleanup(self):
        for p in self.files:
            if os.path.exists(p):
                os.remove(p)


def _write_config(out: _OutputTracker, args: argparse.Namespace):
    echo = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    echo["version"] = __version__
    with open(out.path("config.json"), "w", encoding="utf-8") as fh:
        json.dump(echo, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _load(args):
    fmt = CsvFormat(header=not args.no_header,
                    id_col=None if args.id_col == "" else args.id_col,
                    outcome_col=args.outcome_col or None,
                    delimiter=args.delimiter)
    return load_sequences(args.input, fmt)


def _cv_config(args) -> CVConfig:
    return CVConfig(folds=args.folds, seed=args.seed,
                    n_lambdas=args.n_lambdas, ratio=args.lambda_ratio,
                    n_jobs=args.threads)


def cmd_cluster(args) -> None:
    out = _OutputTracker(args.output_dir)
    _write_config(out, args)
    ds = _load(args)
    costs = default_cost_scheme(ds.q, substitution=args.sub_cost, indel=args.indel_cost)
    D = pairwise_distances(ds, costs, n_jobs=args.threads)
    dend = average_linkage(D)
    lo, hi = args.k_range
    hi = min(hi, ds.n)
    k, labels, scores = select_num_clusters(dend, D, (lo, hi))
    labels = merge_small(labels, args.min_size)
    save_labels_csv(out.path("labels.csv"), ds.ids, labels)
    dend.save_csv(out.path("dendrogram.csv"))
    with open(out.path("dunn_scores.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "dunn_index"])
        for ki, score in zip(range(lo, hi + 1), scores):
            w.writerow([ki, repr(float(score))])
    if args.save_distances:
        D.save(out.path("distances.omd"))
    print(f"clustered {ds.n} sequences: k={k} before merging, "
          f"{labels.n_clusters} final clusters")


def _outcome_from_labels_file(ds, path):
    by_id = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            by_id[row["id"]] = int(row["cluster"])
    missing = [i for i in ds.ids if i not in by_id]
    if missing:
        raise SystemExit(f"label file is missing ids: {missing[:5]}")
    return np.array([by_id[i] for i in ds.ids])


def cmd_select(args) -> None:
    out = _OutputTracker(args.output_dir)
    _write_config(out, args)
    ds = _load(args)
    if ds.outcome is None and args.labels is None:
        raise SystemExit("dataset has no outcome column; run `seqselect cluster` "
                         "first and pass the labels file via --labels")
    y = ds.outcome if args.labels is None else _outcome_from_labels_file(ds, args.labels)
    dm = encode_one_hot(ds)
    cv = _cv_config(args)

    if args.method == "lasso":
        report = lasso_selection(dm, y, cv)
        reports = [report]
    elif args.method == "tlasso":
        step1 = _cv_lasso(dm, y, cv)
        if args.threshold is not None:
            report = thresholded_lasso(dm, y, args.threshold, cv, step1=step1)
            reports = [report]
        else:
            grid = default_threshold_grid(step1.refit.coef, count=args.threshold_count)
            reports = threshold_sweep(dm, y, grid, cv, step1=step1)
            save_sweep_csv(out.path("sweep.csv"), reports)
            report = pick_elbow(reports, slack=args.elbow_slack)
    elif args.method == "repeated":
        report = repeated_lasso(dm, y, stability_window=args.stability_window,
                                max_rounds=args.max_rounds, cv=cv)
        reports = [report]
    elif args.method in ("group", "sgl"):
        kind = "group" if args.method == "group" else "sparse_group"
        spec = PenaltySpec.from_design(dm, kind, alpha=args.alpha)
        grid = lambda_grid(dm, y, spec, count=cv.n_lambdas, ratio=cv.ratio)
        res = cross_validate(dm, y, spec, grid, folds=cv.folds, seed=cv.seed,
                             n_jobs=cv.n_jobs)
        selected = active_positions(res.refit.coef, dm, 0.0)
        tuning = {"lambda": res.best_lambda, "folds": cv.folds, "seed": cv.seed}
        if kind == "sparse_group":
            tuning["alpha"] = args.alpha
        report = SelectionReport(
            method=args.method, tuning=tuning, selected=selected,
            n_positions=len(selected),
            cv_misclassification=1.0 - res.best_accuracy,
            history=[["active", len(selected)]])
        reports = [report]
    elif args.method == "forest":
        depth, _ = select_depth(dm, y, depths=range(1, args.max_depth + 1),
                                n_trees=args.n_trees, folds=cv.folds,
                                seed=cv.seed, n_jobs=cv.n_jobs)
        forest = fit_forest(dm, y, n_trees=args.n_trees, max_depth=depth,
                            seed=cv.seed, n_jobs=cv.n_jobs)
        imp = gini_importance(forest)
        save_importance_csv(out.path("importance.csv"), imp, dm)
        nonzero = np.sort(imp.values[imp.values > 0])
        thresholds = (np.geomspace(nonzero[0], nonzero[-1], args.threshold_count)
                      if nonzero.size else np.array([0.0]))
        reports = []
        for t in thresholds:
            sel = select_positions_by_importance(imp, float(t), dm)
            mis = restricted_misclassification(dm, y, sel.positions, cv)
            reports.append(SelectionReport(
                method="forest",
                tuning={"threshold": float(t), "max_depth": depth,
                        "n_trees": args.n_trees, "seed": cv.seed},
                selected=sel, n_positions=len(sel), cv_misclassification=mis,
                history=[]))
        save_sweep_csv_forest(out.path("sweep.csv"), reports)
        report = pick_elbow(reports, slack=args.elbow_slack)
    else:
        raise SystemExit(f"unknown method {args.method!r}")

    if args.method == "lasso" and args.path_table:
        rows = lambda_path_table(dm, y, np.asarray(args.path_table), cv)
        save_path_csv(out.path("lambda_path.csv"), rows)
    report.save_json(out.path("report.json"))
    print(f"{args.method}: {report.n_positions} positions, "
          f"misclassification {report.cv_misclassification:.4f}")


def save_sweep_csv_forest(path, reports):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["threshold", "n_positions", "misclassification"])
        for r in reports:
            w.writerow([repr(float(r.tuning["threshold"])), r.n_positions,
                        repr(float(r.cv_misclassification))])


def cmd_synth(args) -> None:
    out = _OutputTracker(args.output_dir)
    _write_config(out, args)
    if args.spec:
        spec = SynthSpec.from_json(args.spec)
    else:
        base = default_benchmark(seed=args.seed)
        spec = SynthSpec(
            n=args.n or base.n, p=base.p, q=base.q, n_classes=base.n_classes,
            informative=base.informative,
            theta_informative=base.theta_informative,
            theta_background=base.theta_background,
            markov_persistence=(base.markov_persistence
                                if args.persistence is None else args.persistence),
            seed=args.seed)
    ds, truth = generate(spec)
    save_sequences(out.path("dataset.csv"), ds)
    truth.save_json(out.path("truth.json"))
    spec.to_json(out.path("spec.json"))
    print(f"generated {ds.n} sequences of length {ds.p} over {ds.q} states")


def cmd_report(args) -> None:
    out = _OutputTracker(args.output_dir)
    _write_config(out, args)
    if not args.reports:
        raise SystemExit("no report files given")
    rows = []
    for path in args.reports:
        try:
            r = SelectionReport.from_json(path)
        except (OSError, KeyError, json.JSONDecodeError) as err:
            raise SystemExit(f"malformed report file {path}: {err}")
        tuning = json.dumps(r.tuning, sort_keys=True)
        rows.append([r.method, tuning, r.n_positions,
                     repr(float(r.cv_misclassification))])
    with open(out.path("comparison.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "tuning", "n_positions", "misclassification"])
        w.writerows(rows)
    print(f"wrote comparison table with {len(rows)} rows")


def _add_shared(sp):
    sp.add_argument("--output-dir", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int, default=1)


def _add_input(sp):
    sp.add_argument("--input", required=True)
    sp.add_argument("--no-header", action="store_true")
    sp.add_argument("--id-col", default="id",
                    help="id column name or index; empty string for none")
    sp.add_argument("--outcome-col", default="",
                    help="outcome column name (omit if absent)")
    sp.add_argument("--delimiter", default=",")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seqselect",
                                 description="Position-based dimension reduction "
                                             "for categorical sequences")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("cluster", help="distance matrix, average-linkage "
                                        "clustering, Dunn selection, noise merge")
    _add_shared(sp)
    _add_input(sp)
    sp.add_argument("--sub-cost", type=float, default=2.0)
    sp.add_argument("--indel-cost", type=float, default=1.0)
    sp.add_argument("--k-range", type=int, nargs=2, default=(2, 100))
    sp.add_argument("--min-size", type=int, default=13)
    sp.add_argument("--save-distances", action="store_true")
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("select", help="position selection by a chosen method")
    _add_shared(sp)
    _add_input(sp)
    sp.add_argument("--method", required=True,
                    choices=["lasso", "tlasso", "repeated", "group", "sgl", "forest"])
    sp.add_argument("--labels", help="labels CSV from `cluster` when the input "
                                     "has no outcome column")
    sp.add_argument("--folds", type=int, default=10)
    sp.add_argument("--n-lambdas", type=int, default=100)
    sp.add_argument("--lambda-ratio", type=float, default=1e-4)
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--threshold", type=float,
                    help="single hard threshold for tlasso; omit to sweep")
    sp.add_argument("--threshold-count", type=int, default=40)
    sp.add_argument("--elbow-slack", type=float, default=0.01)
    sp.add_argument("--stability-window", type=int, default=5)
    sp.add_argument("--max-rounds", type=int, default=100)
    sp.add_argument("--n-trees", type=int, default=100)
    sp.add_argument("--max-depth", type=int, default=15)
    sp.add_argument("--path-table", type=float, nargs="*",
                    help="lambda values for a path table (lasso only)")
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("synth", help="generate a synthetic benchmark dataset")
    _add_shared(sp)
    sp.add_argument("--spec", help="JSON spec file; omit for the default benchmark")
    sp.add_argument("--n", type=int)
    sp.add_argument("--persistence", type=float)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("report", help="merge selection reports into one table")
    _add_shared(sp)
    sp.add_argument("reports", nargs="*")
    sp.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    global _CURRENT_TRACKER
    args = build_parser().parse_args(argv)
    _CURRENT_TRACKER = None
    try:
        args.func(args)
        return 0
    except (Exception, SystemExit) as err:  # partial outputs are removed on failure
        if _CURRENT_TRACKER is not None:
            _CURRENT_TRACKER.cleanup()
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

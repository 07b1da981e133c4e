import math

import numpy as np
import pytest

from seqselect.data import ValidationError
from seqselect.selection import PositionSet
from seqselect.synthetic import (
    GroundTruth,
    SynthSpec,
    default_benchmark,
    generate,
    irrepresentability_by_position,
    irrepresentability_stat,
    score_selection,
)
from seqselect import encode_one_hot


def small_spec(**over):
    q = over.pop("q", 3)
    kw = dict(n=200, p=6, q=q, n_classes=2, informative=(1, 4),
              theta_informative={(m, j): np.eye(q)[m]
                                 for m in range(2) for j in (1, 4)},
              theta_background=np.full(q, 1 / q),
              markov_persistence=0.0, seed=3)
    kw.update(over)
    return SynthSpec(**kw)


def test_generate_shapes_and_determinism():
    ds, truth = generate(small_spec())
    assert (ds.n, ds.p, ds.q) == (200, 6, 3)
    assert truth.informative == (1, 4)
    assert np.array_equal(truth.labels, ds.outcome)
    ds2, _ = generate(small_spec())
    assert np.array_equal(ds.states, ds2.states)
    ds3, _ = generate(small_spec(seed=4))
    assert not np.array_equal(ds.states, ds3.states)


def test_informative_positions_track_class():
    # peak 1.0 and zero persistence: informative states equal the class
    ds, truth = generate(small_spec())
    for j in truth.informative:
        assert np.array_equal(ds.states[:, j], ds.outcome)


def test_background_marginal_is_uniform():
    ds, _ = generate(small_spec(n=4000))
    counts = np.bincount(ds.states[:, 0], minlength=3) / 4000
    assert counts == pytest.approx(np.full(3, 1 / 3), abs=0.03)


def test_persistence_induces_neighbor_copying():
    spec0 = small_spec(markov_persistence=0.0, n=2000)
    spec9 = small_spec(markov_persistence=0.9, n=2000)
    agree0 = np.mean(generate(spec0)[0].states[:, 2] == generate(spec0)[0].states[:, 3])
    agree9 = np.mean(generate(spec9)[0].states[:, 2] == generate(spec9)[0].states[:, 3])
    assert agree9 > agree0 + 0.3


def test_class_probs_respected():
    spec = small_spec(n=3000, class_probs=np.array([0.8, 0.2]))
    ds, _ = generate(spec)
    assert np.mean(ds.outcome == 0) == pytest.approx(0.8, abs=0.03)


def test_spec_validation():
    with pytest.raises(ValidationError):
        small_spec(markov_persistence=1.0)
    with pytest.raises(ValidationError):
        small_spec(informative=(1, 9))  # out of range
    with pytest.raises(ValidationError):
        small_spec(theta_background=np.array([0.5, 0.2, 0.2]))  # sums to 0.9
    with pytest.raises(ValidationError):
        # missing theta for one (class, position) pair
        SynthSpec(n=10, p=3, q=2, n_classes=2, informative=(0,),
                  theta_informative={(0, 0): np.array([1.0, 0.0])},
                  theta_background=np.array([0.5, 0.5]))


def test_spec_json_round_trip(tmp_path):
    spec = small_spec()
    path = tmp_path / "spec.json"
    spec.to_json(path)
    back = SynthSpec.from_json(path)
    assert back.n == spec.n and back.informative == spec.informative
    assert np.array_equal(back.theta_background, spec.theta_background)
    for key, v in spec.theta_informative.items():
        assert np.array_equal(back.theta_informative[key], v)
    ds1, _ = generate(spec)
    ds2, _ = generate(back)
    assert np.array_equal(ds1.states, ds2.states)


def test_ground_truth_json(tmp_path):
    _, truth = generate(small_spec(n=20))
    path = tmp_path / "truth.json"
    truth.save_json(path)
    import json
    doc = json.loads(path.read_text())
    assert doc["informative"] == [1, 4]
    assert len(doc["labels"]) == 20


def test_default_benchmark_shape():
    spec = default_benchmark()
    assert (spec.n, spec.p, spec.q, spec.n_classes) == (600, 60, 4, 3)
    assert len(spec.informative) == 6
    assert spec.markov_persistence == 0.6
    ds, truth = generate(spec)
    assert ds.n == 600
    # every class and state actually appears
    assert set(np.unique(ds.outcome)) == {0, 1, 2}
    assert set(np.unique(ds.states)) == {0, 1, 2, 3}


def test_irrepresentability_orthogonal_design():
    X = np.eye(8)
    stat = irrepresentability_stat(X, [0, 1], [1.0, -1.0])
    assert abs(stat) <= 1e-10


def test_irrepresentability_exact_copy():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((30, 1))
    X = np.hstack([x, x])  # column 1 copies column 0
    stat = irrepresentability_stat(X, [0], [1.0])
    assert stat >= 1.0 - 1e-12


def test_irrepresentability_rank_deficiency_and_ridge():
    x = np.ones((10, 1))
    X = np.hstack([x, x, np.random.default_rng(1).standard_normal((10, 1))])
    with pytest.raises(ValidationError, match="ridge"):
        irrepresentability_stat(X, [0, 1], [1.0, 1.0])
    stat = irrepresentability_stat(X, [0, 1], [1.0, 1.0], ridge=True)
    assert np.isfinite(stat)
    with pytest.raises(ValidationError):
        irrepresentability_stat(X, [0, 1], [1.0])  # sign length mismatch


def test_irrepresentability_no_rest_columns():
    X = np.random.default_rng(2).standard_normal((10, 2))
    assert irrepresentability_stat(X, [0, 1], [1.0, 1.0]) == 0.0


def test_persistence_raises_position_level_stat():
    # the directional claim: neighbor copying inflates the diagnostic
    base = default_benchmark()
    flat = SynthSpec(n=base.n, p=base.p, q=base.q, n_classes=base.n_classes,
                     informative=base.informative,
                     theta_informative=base.theta_informative,
                     theta_background=base.theta_background,
                     markov_persistence=0.0, seed=base.seed)
    s_pers = irrepresentability_by_position(
        encode_one_hot(generate(base)[0]), base.informative, ridge=True)
    s_flat = irrepresentability_by_position(
        encode_one_hot(generate(flat)[0]), base.informative, ridge=True)
    assert s_pers > s_flat


def test_score_selection_values():
    truth = GroundTruth((1, 4), np.zeros(2, dtype=int), {})
    r, p, o = score_selection(PositionSet((1, 4, 5, 6)), truth)
    assert (r, p, o) == (1.0, 0.5, 2.0)
    r, p, o = score_selection(PositionSet(()), truth)
    assert r == 0.0 and math.isnan(p) and o == 0.0
    r, p, o = score_selection(PositionSet((2,)), truth)
    assert (r, p, o) == (0.0, 0.0, 0.5)

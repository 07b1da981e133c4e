import numpy as np
import pytest

from seqselect.data import (
    CsvFormat,
    FormatError,
    SequenceDataset,
    StateAlphabet,
    ValidationError,
    decode_states,
    encode_one_hot,
    load_alphabet,
    load_sequences,
    save_sequences,
)

from conftest import tiny_dataset


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_basic_with_outcome(tmp_path):
    path = write(tmp_path, "id,p1,p2,p3,p4,outcome\n"
                           "s1,A,A,B,B,x\n"
                           "s2,B,A,A,B,y\n"
                           "s3,A,B,B,A,x\n")
    ds = load_sequences(path, CsvFormat(outcome_col="outcome"))
    assert (ds.n, ds.p, ds.q) == (3, 4, 2)
    assert ds.alphabet.labels == ("A", "B")
    assert ds.ids == ("s1", "s2", "s3")
    assert ds.outcome.tolist() == [0, 1, 0]
    assert ds.outcome_labels == ("x", "y")


def test_label_outside_explicit_alphabet(tmp_path):
    path = write(tmp_path, "id,p1,p2\ns1,A,C\n")
    fmt = CsvFormat(alphabet=StateAlphabet(("A", "B")))
    with pytest.raises(ValidationError, match="'C'"):
        load_sequences(path, fmt)


def test_ragged_row_names_offender(tmp_path):
    path = write(tmp_path, "id,p1,p2\ns1,A,B\ns2,A\n")
    with pytest.raises(FormatError, match="row 3"):
        load_sequences(path)


def test_empty_file(tmp_path):
    with pytest.raises(ValidationError, match="empty"):
        load_sequences(write(tmp_path, ""))


def test_missing_cell_rejected(tmp_path):
    path = write(tmp_path, "id,p1,p2\ns1,A,\n")
    with pytest.raises(ValidationError, match="missing"):
        load_sequences(path)


def test_no_header_positional_columns(tmp_path):
    path = write(tmp_path, "A,B\nB,B\n")
    ds = load_sequences(path, CsvFormat(header=False, id_col=None))
    assert (ds.n, ds.p) == (2, 2)
    assert ds.ids == ("0", "1")


def test_alphabet_file_overrides_order(tmp_path):
    alpha = load_alphabet(write(tmp_path, "B\nA\n", "alpha.txt"))
    path = write(tmp_path, "id,p1\ns1,A\ns2,B\n")
    ds = load_sequences(path, CsvFormat(alphabet=alpha))
    assert ds.alphabet.labels == ("B", "A")
    assert ds.states[:, 0].tolist() == [1, 0]


def test_load_is_deterministic(tmp_path):
    path = write(tmp_path, "id,p1,p2\ns1,A,B\ns2,B,A\n")
    a = load_sequences(path)
    b = load_sequences(path)
    assert np.array_equal(a.states, b.states) and a.ids == b.ids


def test_save_load_round_trip(tmp_path):
    ds, _ = tiny_dataset(seed=3, n=10, p=5)
    path = tmp_path / "out.csv"
    save_sequences(path, ds)
    back = load_sequences(path, CsvFormat(outcome_col="outcome"))
    assert np.array_equal(back.states, ds.states)
    assert np.array_equal(back.outcome, ds.outcome)


def test_encode_full_design():
    ds = SequenceDataset(np.array([[0, 1], [1, 0]]), StateAlphabet(("A", "B")),
                         ("a", "b"))
    dm = encode_one_hot(ds)
    assert dm.n_columns == 4
    assert dm.group_sizes.tolist() == [2, 2]
    assert dm.dropped == ()
    assert dm.columns == ((0, 0), (0, 1), (1, 0), (1, 1))


def test_encode_drops_unobserved():
    ds = SequenceDataset(np.array([[0, 0]]), StateAlphabet(("A", "B")), ("a",))
    dm = encode_one_hot(ds, drop_unobserved=True)
    assert dm.n_columns == 2
    assert dm.group_sizes.tolist() == [1, 1]
    assert dm.dropped == ((0, 1), (1, 1))


def test_encode_keep_unobserved():
    ds = SequenceDataset(np.array([[0, 0]]), StateAlphabet(("A", "B")), ("a",))
    dm = encode_one_hot(ds, drop_unobserved=False)
    assert dm.n_columns == 4


def test_column_count_identity():
    ds, _ = tiny_dataset(seed=1, n=15, p=6, q=3)
    dm = encode_one_hot(ds)
    assert dm.n_columns + len(dm.dropped) == ds.p * ds.q


def test_row_sums_match_indicator_oracle():
    ds, _ = tiny_dataset(seed=2, n=25, p=6, q=3)
    dm = encode_one_hot(ds)
    dense = np.asarray(dm.values.todense())
    # direct per-cell indicator computation
    for c, (j, k) in enumerate(dm.columns):
        assert np.array_equal(dense[:, c], (ds.states[:, j] == k).astype(float))
    for cols in dm.group_column_indices():
        assert np.all(dense[:, cols].sum(axis=1) == 1.0)


def test_decode_round_trip():
    ds, _ = tiny_dataset(seed=4, n=30, p=8, q=3)
    dm = encode_one_hot(ds, drop_unobserved=False)
    assert np.array_equal(decode_states(dm), ds.states)


def test_restrict_keeps_metadata():
    ds, _ = tiny_dataset(seed=5, n=20, p=6, q=3)
    dm = encode_one_hot(ds)
    sub = dm.restrict([1, 4])
    assert sub.positions == (1, 4)
    assert all(j in (1, 4) for j, _ in sub.columns)
    assert sub.group_sizes.sum() == sub.n_columns
    with pytest.raises(ValidationError):
        dm.restrict([99])


def test_unequal_rows_rejected():
    with pytest.raises(ValidationError):
        SequenceDataset(np.array([[0, 1], [1, 0]]), StateAlphabet(("A", "B")),
                        ("only-one",))


def test_outcome_classes_must_cover_range():
    with pytest.raises(ValidationError):
        SequenceDataset(np.array([[0], [1]]), StateAlphabet(("A", "B")),
                        ("a", "b"), outcome=np.array([0, 2]))

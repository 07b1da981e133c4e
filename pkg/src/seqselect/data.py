"""Ingestion, validation, and one-hot encoding of categorical sequence datasets.

A dataset is n sequences of equal length p over a q-state alphabet, with an
optional sequence-level categorical outcome. The one-hot (dummy) encoding
expands each (position, state) pair into a binary design-matrix column;
columns never observed in the data can be dropped.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import sparse


class FormatError(ValueError):
    """Raised when an input file does not match the declared table format."""


class ValidationError(ValueError):
    """Raised when parsed data violates a dataset invariant."""


@dataclass(frozen=True)
class StateAlphabet:
    """Ordered collection of the q distinct state labels."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError("alphabet labels must be unique")
        if len(self.labels) < 2:
            raise ValidationError("alphabet needs at least 2 states")

    @property
    def q(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationError(f"label {label!r} not in alphabet") from None


@dataclass(frozen=True)
class SequenceDataset:
    """n equal-length categorical sequences with an optional outcome label.

    states holds 0-based state indices (n x p); outcome, when present, holds
    0-based class indices with every class 0..M-1 occupied.
    """

    states: np.ndarray
    alphabet: StateAlphabet
    ids: tuple[str, ...]
    outcome: Optional[np.ndarray] = None
    outcome_labels: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.int64)
        object.__setattr__(self, "states", states)
        if states.ndim != 2:
            raise ValidationError("states must be a 2-d array")
        if states.shape[0] != len(self.ids):
            raise ValidationError("ids length must match number of sequences")
        if states.size and (states.min() < 0 or states.max() >= self.alphabet.q):
            raise ValidationError("state index out of alphabet range")
        if self.outcome is not None:
            outcome = np.asarray(self.outcome, dtype=np.int64)
            object.__setattr__(self, "outcome", outcome)
            if outcome.shape != (states.shape[0],):
                raise ValidationError("outcome length must match number of sequences")
            m = outcome.max() + 1 if outcome.size else 0
            if outcome.min() < 0 or len(np.unique(outcome)) != m:
                raise ValidationError("outcome classes must cover 0..M-1")
            if self.outcome_labels is not None and len(self.outcome_labels) != m:
                raise ValidationError("outcome_labels length must equal M")

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def p(self) -> int:
        return self.states.shape[1]

    @property
    def q(self) -> int:
        return self.alphabet.q

    @property
    def n_classes(self) -> int:
        if self.outcome is None:
            raise ValidationError("dataset has no outcome")
        return int(self.outcome.max()) + 1

    def with_outcome(self, outcome: np.ndarray,
                     outcome_labels: Optional[tuple[str, ...]] = None) -> "SequenceDataset":
        return SequenceDataset(self.states, self.alphabet, self.ids,
                               outcome=np.asarray(outcome),
                               outcome_labels=outcome_labels)


@dataclass(frozen=True)
class DesignMatrix:
    """Sparse binary one-hot design with per-column (position, state) metadata.

    columns[c] = (j, k) for design column c; positions lists the distinct
    positions present (sorted) and group_sizes[i] = number of columns at
    positions[i]. dropped records (j, k) pairs removed as never observed.
    """

    values: sparse.csr_matrix
    columns: tuple[tuple[int, int], ...]
    positions: tuple[int, ...]
    group_sizes: np.ndarray
    dropped: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "group_sizes",
                           np.asarray(self.group_sizes, dtype=np.int64))
        if self.values.shape[1] != len(self.columns):
            raise ValidationError("column metadata length mismatch")
        if int(self.group_sizes.sum()) != len(self.columns):
            raise ValidationError("group sizes must sum to the column count")
        if len(self.positions) != len(self.group_sizes):
            raise ValidationError("positions/group_sizes length mismatch")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    def columns_of(self, position: int) -> np.ndarray:
        """Indices of the design columns belonging to one position."""
        return np.flatnonzero(np.fromiter((j == position for j, _ in self.columns),
                                          dtype=bool, count=len(self.columns)))

    def group_column_indices(self) -> list[np.ndarray]:
        """Column-index arrays, one per present position, in position order."""
        js = np.array([j for j, _ in self.columns])
        return [np.flatnonzero(js == j) for j in self.positions]

    def restrict(self, positions: Sequence[int]) -> "DesignMatrix":
        """New design keeping only the columns at the given positions."""
        keep_pos = sorted(set(int(j) for j in positions))
        missing = [j for j in keep_pos if j not in set(self.positions)]
        if missing:
            raise ValidationError(f"positions {missing} not present in design")
        mask = np.array([j in set(keep_pos) for j, _ in self.columns])
        idx = np.flatnonzero(mask)
        cols = tuple(self.columns[c] for c in idx)
        sizes = np.array([sum(1 for j, _ in cols if j == pos) for pos in keep_pos])
        return DesignMatrix(self.values[:, idx].tocsr(), cols,
                            tuple(keep_pos), sizes, self.dropped)


@dataclass(frozen=True)
class CsvFormat:
    """Descriptor for the wide CSV layout: one row per sequence, one column
    per position, cells holding state labels."""

    header: bool = True
    id_col: Optional[str | int] = "id"
    outcome_col: Optional[str | int] = None
    delimiter: str = ","
    alphabet: Optional[StateAlphabet] = None


def _resolve_col(spec, header_row, n_cols, what):
    if spec is None:
        return None
    if isinstance(spec, int):
        if not 0 <= spec < n_cols:
            raise FormatError(f"{what} column index {spec} out of range")
        return spec
    if header_row is None:
        raise FormatError(f"{what} column given by name but file has no header")
    try:
        return header_row.index(spec)
    except ValueError:
        raise FormatError(f"{what} column {spec!r} not found in header") from None


def load_sequences(path, fmt: CsvFormat = CsvFormat()) -> SequenceDataset:
    """Load a wide CSV of state labels into a validated SequenceDataset.

    Ragged rows and labels outside an explicitly supplied alphabet are
    rejected; the alphabet otherwise defaults to the sorted set of labels
    encountered.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter=fmt.delimiter))
    if not rows:
        raise ValidationError(f"{path}: empty file")

    header = rows[0] if fmt.header else None
    body = rows[1:] if fmt.header else rows
    if not body:
        raise ValidationError(f"{path}: no data rows")
    n_cols = len(body[0])
    id_idx = _resolve_col(fmt.id_col, header, n_cols, "id")
    out_idx = _resolve_col(fmt.outcome_col, header, n_cols, "outcome")

    meta = {i for i in (id_idx, out_idx) if i is not None}
    state_idx = [i for i in range(n_cols) if i not in meta]
    if not state_idx:
        raise ValidationError(f"{path}: no state columns")

    ids, raw, outcomes = [], [], []
    for r, row in enumerate(body):
        rownum = r + (2 if fmt.header else 1)
        if len(row) != n_cols:
            raise FormatError(f"{path}: row {rownum} has {len(row)} cells, expected {n_cols}")
        if any(row[i] == "" for i in state_idx):
            raise ValidationError(f"{path}: row {rownum} has a missing state cell")
        ids.append(row[id_idx] if id_idx is not None else str(r))
        raw.append([row[i] for i in state_idx])
        if out_idx is not None:
            outcomes.append(row[out_idx])

    if fmt.alphabet is not None:
        alphabet = fmt.alphabet
        lut = {lab: i for i, lab in enumerate(alphabet.labels)}
        for r, labels in enumerate(raw):
            for lab in labels:
                if lab not in lut:
                    raise ValidationError(
                        f"{path}: row {r + 1} label {lab!r} not in supplied alphabet")
    else:
        alphabet = StateAlphabet(tuple(sorted({lab for labels in raw for lab in labels})))
        lut = {lab: i for i, lab in enumerate(alphabet.labels)}

    states = np.array([[lut[lab] for lab in labels] for labels in raw], dtype=np.int64)

    outcome = None
    outcome_labels = None
    if out_idx is not None:
        outcome_labels = tuple(sorted(set(outcomes)))
        olut = {lab: i for i, lab in enumerate(outcome_labels)}
        outcome = np.array([olut[o] for o in outcomes], dtype=np.int64)

    return SequenceDataset(states, alphabet, tuple(ids), outcome, outcome_labels)


def load_alphabet(path) -> StateAlphabet:
    """Read an explicit alphabet file, one label per line, order preserved."""
    with open(path, encoding="utf-8") as fh:
        labels = [line.strip() for line in fh if line.strip()]
    return StateAlphabet(tuple(labels))


def encode_one_hot(ds: SequenceDataset, drop_unobserved: bool = True) -> DesignMatrix:
    """One-hot encode a dataset, position-major then state-index column order.

    With drop_unobserved, (position, state) columns whose sum is zero are
    removed and recorded in `dropped`. Columns are plain 0/1 indicators and
    are never standardized.
    """
    n, p, q = ds.n, ds.p, ds.q
    # full encoding: column index = j*q + k
    cols_full = ds.states + np.arange(p)[None, :] * q
    values = sparse.csr_matrix(
        (np.ones(n * p), (np.repeat(np.arange(n), p), cols_full.ravel())),
        shape=(n, p * q),
    )
    all_cols = [(j, k) for j in range(p) for k in range(q)]
    if not drop_unobserved:
        return DesignMatrix(values, tuple(all_cols), tuple(range(p)),
                            np.full(p, q, dtype=np.int64), ())
    counts = np.asarray(values.sum(axis=0)).ravel()
    keep = np.flatnonzero(counts > 0)
    dropped = tuple(all_cols[c] for c in np.flatnonzero(counts == 0))
    columns = tuple(all_cols[c] for c in keep)
    sizes = np.array([sum(1 for j, _ in columns if j == pos) for pos in range(p)])
    return DesignMatrix(values[:, keep].tocsr(), columns, tuple(range(p)), sizes, dropped)


def save_sequences(path, ds: SequenceDataset) -> None:
    """Write the wide CSV layout (id, one column per position, optional
    outcome), emitting the original text labels."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        header = ["id"] + [f"pos_{j}" for j in range(ds.p)]
        if ds.outcome is not None:
            header.append("outcome")
        w.writerow(header)
        for i in range(ds.n):
            row = [ds.ids[i]] + [ds.alphabet.labels[k] for k in ds.states[i]]
            if ds.outcome is not None:
                labels = ds.outcome_labels or tuple(
                    str(m) for m in range(ds.n_classes))
                row.append(labels[ds.outcome[i]])
            w.writerow(row)


def decode_states(dm: DesignMatrix) -> np.ndarray:
    """Invert one-hot rows back to state indices (argmax within each group).

    Only valid per group when the observed state's column was retained;
    fully retained groups round-trip exactly.
    """
    dense = np.asarray(dm.values.todense())
    out = np.zeros((dm.n, len(dm.positions)), dtype=np.int64)
    for gi, cols in enumerate(dm.group_column_indices()):
        ks = np.array([dm.columns[c][1] for c in cols])
        out[:, gi] = ks[np.argmax(dense[:, cols], axis=1)]
    return out

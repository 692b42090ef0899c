"""Tabular data model, CSV ingestion and the persisted dataset format.

Missing numeric cells are carried as NaN inside float64 columns. Missing
categorical/date cells are ``None`` inside object columns. Nothing downstream
is allowed to do arithmetic on a NaN: stages that need complete data check
for it and raise.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

NUMERIC = "numeric"
CATEGORICAL = "categorical"
DATE = "date"
TARGET = "target"
KINDS = (NUMERIC, CATEGORICAL, DATE, TARGET)

MISSING_TOKENS = frozenset({"NA", ""})
POSITIVE_TOKENS = frozenset({"Yes", "1", "1.0"})
NEGATIVE_TOKENS = frozenset({"No", "0", "0.0"})

FORMAT_MAGIC = "# imbkit-dataset v1"


class SchemaError(ValueError):
    """Raised when a file or dataset does not match the expected columns."""


@dataclass(frozen=True)
class ColumnMeta:
    name: str
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown column kind {self.kind!r} for {self.name!r}")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


class Dataset:
    """Immutable column store plus an optional binary label vector.

    Parameters
    ----------
    columns : sequence of ColumnMeta
        Ordered column descriptions. At most one may be of kind ``target``;
        its values live in ``y`` rather than in ``data``.
    data : dict
        Feature column name -> 1-D array. Numeric columns are float64,
        categorical and date columns are object arrays.
    y : array-like of {0, 1}, optional
    """

    def __init__(self, columns: Sequence[ColumnMeta], data: dict, y=None):
        columns = tuple(columns)
        names = [c.name for c in columns]
        if len(set(names)) != len(names):
            raise SchemaError("column names must be unique")
        targets = [c for c in columns if c.kind == TARGET]
        if len(targets) > 1:
            raise SchemaError("at most one target column is allowed")

        n_rows = None
        store = {}
        for col in columns:
            if col.kind == TARGET:
                continue
            if col.name not in data:
                raise SchemaError(f"no data for column {col.name!r}")
            if col.kind == NUMERIC:
                arr = np.array(data[col.name], dtype=np.float64)
                if np.isinf(arr).any():
                    raise ValueError(f"infinite value in column {col.name!r}")
            else:
                arr = np.array(data[col.name], dtype=object)
            if arr.ndim != 1:
                raise SchemaError(f"column {col.name!r} must be 1-D")
            if n_rows is None:
                n_rows = len(arr)
            elif len(arr) != n_rows:
                raise SchemaError(f"column {col.name!r} has {len(arr)} rows, expected {n_rows}")
            store[col.name] = _frozen(arr)

        if y is not None:
            y = np.array(y, dtype=np.int64)
            if y.ndim != 1 or not np.isin(y, (0, 1)).all():
                raise ValueError("labels must be a 1-D vector of 0/1")
            if n_rows is None:
                n_rows = len(y)
            elif len(y) != n_rows:
                raise SchemaError(f"label vector has {len(y)} rows, expected {n_rows}")
            y = _frozen(y)
        elif targets:
            raise SchemaError("target column declared but no labels given")

        self.columns = columns
        self.data = store
        self.y = y
        self._n_rows = 0 if n_rows is None else n_rows

    # -- shape ---------------------------------------------------------
    @property
    def n_rows(self) -> int:
        return self._n_rows

    def __len__(self) -> int:
        return self._n_rows

    @property
    def feature_columns(self) -> list[ColumnMeta]:
        return [c for c in self.columns if c.kind != TARGET]

    @property
    def feature_names(self) -> list[str]:
        return [c.name for c in self.feature_columns]

    @property
    def target_column(self) -> ColumnMeta | None:
        for c in self.columns:
            if c.kind == TARGET:
                return c
        return None

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[name]
        except KeyError:
            raise KeyError(f"no feature column {name!r}") from None

    def kind_of(self, name: str) -> str:
        for c in self.columns:
            if c.name == name:
                return c.kind
        raise KeyError(f"no column {name!r}")

    @property
    def X(self) -> np.ndarray:
        """Row-major float64 feature matrix (NaN marks missing cells)."""
        feats = self.feature_columns
        bad = [c.name for c in feats if c.kind != NUMERIC]
        if bad:
            raise SchemaError(f"non-numeric columns must be encoded first: {bad}")
        if not feats:
            return np.empty((self._n_rows, 0))
        return np.column_stack([self.data[c.name] for c in feats])

    # -- derivation ----------------------------------------------------
    def replace(self, columns=None, data=None, y=...) -> "Dataset":
        return Dataset(
            self.columns if columns is None else columns,
            self.data if data is None else data,
            self.y if y is ... else y,
        )

    def take(self, indices) -> "Dataset":
        """Rows at ``indices`` (in the given order)."""
        idx = np.asarray(indices, dtype=np.int64)
        data = {k: v[idx] for k, v in self.data.items()}
        y = None if self.y is None else self.y[idx]
        return Dataset(self.columns, data, y)

    def has_missing(self) -> bool:
        for col in self.feature_columns:
            arr = self.data[col.name]
            if col.kind == NUMERIC:
                if np.isnan(arr).any():
                    return True
            elif any(v is None for v in arr):
                return True
        return False


def from_arrays(X, y=None, names: Sequence[str] | None = None, target: str = "target") -> Dataset:
    """Wrap a numeric matrix (and labels) as a Dataset."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    if names is None:
        names = [f"x{i}" for i in range(X.shape[1])]
    if len(names) != X.shape[1]:
        raise SchemaError("one name per column required")
    columns = [ColumnMeta(n, NUMERIC) for n in names]
    if y is not None:
        columns.append(ColumnMeta(target, TARGET))
    return Dataset(columns, {n: X[:, j] for j, n in enumerate(names)}, y)


def class_counts(y) -> tuple[int, int]:
    """(positive, negative) tallies of a 0/1 label vector."""
    y = np.asarray(y)
    pos = int(np.count_nonzero(y == 1))
    return pos, int(y.shape[0]) - pos


# -- schemas ------------------------------------------------------------
_RAIN_COLUMNS = [
    ("Date", DATE),
    ("Location", CATEGORICAL),
    ("MinTemp", NUMERIC),
    ("MaxTemp", NUMERIC),
    ("Rainfall", NUMERIC),
    ("Evaporation", NUMERIC),
    ("Sunshine", NUMERIC),
    ("WindGustDir", CATEGORICAL),
    ("WindGustSpeed", NUMERIC),
    ("WindDir9am", CATEGORICAL),
    ("WindDir3pm", CATEGORICAL),
    ("WindSpeed9am", NUMERIC),
    ("WindSpeed3pm", NUMERIC),
    ("Humidity9am", NUMERIC),
    ("Humidity3pm", NUMERIC),
    ("Pressure9am", NUMERIC),
    ("Pressure3pm", NUMERIC),
    ("Cloud9am", NUMERIC),
    ("Cloud3pm", NUMERIC),
    ("Temp9am", NUMERIC),
    ("Temp3pm", NUMERIC),
    ("RainToday", CATEGORICAL),
    ("RISK_MM", NUMERIC),
    ("RainTomorrow", TARGET),
]


def rain_schema(include_risk_mm: bool = True) -> list[ColumnMeta]:
    """Column schema of the Rain-in-Australia CSV.

    Later Kaggle revisions removed ``RISK_MM``; pass ``include_risk_mm=False``
    for those files.
    """
    return [
        ColumnMeta(name, kind)
        for name, kind in _RAIN_COLUMNS
        if include_risk_mm or name != "RISK_MM"
    ]


def numeric_schema(names: Iterable[str], target: str | None = None) -> list[ColumnMeta]:
    cols = [ColumnMeta(n, NUMERIC) for n in names if n != target]
    if target is not None:
        cols.append(ColumnMeta(target, TARGET))
    return cols


# -- parsing ------------------------------------------------------------
def _parse_numeric(values: np.ndarray, name: str) -> np.ndarray:
    out = np.empty(len(values), dtype=np.float64)
    for i, tok in enumerate(values):
        tok = tok.strip()
        if tok in MISSING_TOKENS:
            out[i] = np.nan
            continue
        try:
            v = float(tok)
        except ValueError:
            raise ValueError(f"row {i + 1}: column {name!r}: unparseable number {tok!r}") from None
        if not math.isfinite(v):
            raise ValueError(f"row {i + 1}: column {name!r}: non-finite value {tok!r}")
        out[i] = v
    return out


def _parse_labels(values: np.ndarray, name: str) -> np.ndarray:
    out = np.empty(len(values), dtype=np.int64)
    for i, tok in enumerate(values):
        tok = tok.strip()
        if tok in POSITIVE_TOKENS:
            out[i] = 1
        elif tok in NEGATIVE_TOKENS:
            out[i] = 0
        elif tok in MISSING_TOKENS:
            out[i] = -1
        else:
            raise ValueError(f"row {i + 1}: column {name!r}: bad label {tok!r}")
    return out


def load_csv(path, schema: Sequence[ColumnMeta], drop_missing_target: bool = False) -> Dataset:
    """Read a comma-separated file whose header matches ``schema``.

    ``"NA"`` and empty cells become missing. Categorical and date cells stay
    strings until encoded. A missing target label is an error unless
    ``drop_missing_target`` is set, in which case those rows are skipped.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False)
    header = list(frame.columns)
    expected = [c.name for c in schema]
    if header != expected:
        raise SchemaError(f"header mismatch: expected {expected}, found {header}")

    data = {}
    y = None
    for col in schema:
        raw = frame[col.name].to_numpy(dtype=object)
        if col.kind == NUMERIC:
            data[col.name] = _parse_numeric(raw, col.name)
        elif col.kind == TARGET:
            y = _parse_labels(raw, col.name)
        else:
            data[col.name] = np.array(
                [None if v.strip() in MISSING_TOKENS else v.strip() for v in raw], dtype=object
            )

    if y is not None and (y < 0).any():
        if not drop_missing_target:
            bad = int(np.flatnonzero(y < 0)[0]) + 1
            raise ValueError(f"row {bad}: missing target label")
        keep = y >= 0
        data = {k: v[keep] for k, v in data.items()}
        y = y[keep]
    return Dataset(schema, data, y)


# -- persisted format ---------------------------------------------------
def _fmt_cell(value, kind: str) -> str:
    if kind == NUMERIC:
        return "NA" if math.isnan(value) else repr(float(value))
    return "NA" if value is None else str(value)


def write_dataset(ds: Dataset, path) -> None:
    """Write ``ds`` in the imbkit columnar text format.

    Line 1 is the magic ``# imbkit-dataset v1``; line 2 is the header of
    ``name:kind`` tokens; each further line is one row. Numbers use Python's
    shortest round-trip repr, missing cells are ``NA``, and the target column
    (if any) holds 0/1. Quoting follows RFC 4180.
    """
    cols = list(ds.columns)
    with open(path, "w", newline="") as fh:
        fh.write(FORMAT_MAGIC + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"{c.name}:{c.kind}" for c in cols])
        arrays = [ds.y if c.kind == TARGET else ds.data[c.name] for c in cols]
        for i in range(ds.n_rows):
            writer.writerow(
                [str(int(a[i])) if c.kind == TARGET else _fmt_cell(a[i], c.kind) for c, a in zip(cols, arrays)]
            )


def read_dataset(path) -> Dataset:
    """Inverse of :func:`write_dataset`."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, newline="") as fh:
        magic = fh.readline().rstrip("\n")
        if magic != FORMAT_MAGIC:
            raise SchemaError(f"{path}: not an imbkit dataset file")
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: missing header")
        columns = []
        for tok in header:
            name, _, kind = tok.rpartition(":")
            columns.append(ColumnMeta(name, kind))
        rows = list(reader)
    cells = list(zip(*rows)) if rows else [() for _ in columns]
    data = {}
    y = None
    for col, values in zip(columns, cells):
        values = np.array(values, dtype=object)
        if col.kind == NUMERIC:
            data[col.name] = _parse_numeric(values, col.name)
        elif col.kind == TARGET:
            y = np.array([int(v) for v in values], dtype=np.int64)
        else:
            data[col.name] = np.array([None if v == "NA" else v for v in values], dtype=object)
    if y is None and any(c.kind == TARGET for c in columns):
        y = np.empty(0, dtype=np.int64)
    return Dataset(columns, data, y)

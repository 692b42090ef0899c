"""Column drops, Month extraction, encoding, imputation, capping, scaling and
chi-square feature selection.

Every statistical stage is split into a fit step (learns numbers from
training rows) and an apply step (uses only those numbers), so the same
:class:`FittedPipeline` can be replayed on validation or test rows.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
import re
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import CATEGORICAL, DATE, NUMERIC, TARGET, ColumnMeta, Dataset, SchemaError

PAPER_DROP_LIST = ("RISK_MM", "Sunshine", "Evaporation", "Cloud9am", "Cloud3pm")
PAPER_ONEHOT = ("Location", "WindGustDir", "WindDir9am", "WindDir3pm", "RainToday")
MISSING_SUFFIX = "nan"

_ISO_DATE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


class PipelineError(ValueError):
    pass


# -- structural stages ----------------------------------------------------
def drop_columns(ds: Dataset, names) -> Dataset:
    names = list(names)
    known = {c.name for c in ds.columns}
    unknown = [n for n in names if n not in known]
    if unknown:
        raise KeyError(f"unknown columns: {unknown}")
    gone = set(names)
    cols = [c for c in ds.columns if c.name not in gone]
    y = ds.y if ds.target_column is None or ds.target_column.name not in gone else None
    data = {k: v for k, v in ds.data.items() if k not in gone}
    return Dataset(cols, data, y)


def parse_month(value) -> int:
    if value is None or not _ISO_DATE.match(str(value)):
        raise ValueError(f"malformed date {value!r}; expected YYYY-MM-DD")
    try:
        return _dt.date.fromisoformat(str(value)).month
    except ValueError:
        raise ValueError(f"malformed date {value!r}; expected YYYY-MM-DD") from None


def extract_month(ds: Dataset, date_column: str = "Date", month_column: str = "Month") -> Dataset:
    """Replace the date column by a numeric month (1..12) appended at the end."""
    if date_column not in ds.data:
        raise KeyError(f"no date column {date_column!r}")
    if ds.kind_of(date_column) not in (DATE, CATEGORICAL):
        raise SchemaError(f"column {date_column!r} is not a date column")
    months = np.array([parse_month(v) for v in ds.data[date_column]], dtype=np.float64)
    cols = [c for c in ds.columns if c.name != date_column and c.kind != TARGET]
    cols.append(ColumnMeta(month_column, NUMERIC))
    cols += [c for c in ds.columns if c.kind == TARGET]
    data = {k: v for k, v in ds.data.items() if k != date_column}
    data[month_column] = months
    return Dataset(cols, data, ds.y)


def fit_one_hot(ds: Dataset, columns) -> dict[str, list[str]]:
    """Sorted category vocabulary per column, learned from ``ds``."""
    vocab = {}
    for name in columns:
        if ds.kind_of(name) != CATEGORICAL:
            raise SchemaError(f"column {name!r} is not categorical")
        vocab[name] = sorted({v for v in ds.data[name] if v is not None})
    return vocab


def apply_one_hot(ds: Dataset, vocab: dict[str, list[str]], missing_indicator: bool = False) -> Dataset:
    """Replace each vocabulary column by 0/1 indicator columns, in place.

    Missing and unseen categories give all-zero indicators. With
    ``missing_indicator`` an extra ``<col>_nan`` column flags missing cells,
    the way ``pandas.get_dummies(dummy_na=True)`` does.
    """
    cols, data = [], {}
    for col in ds.columns:
        if col.name not in vocab:
            cols.append(col)
            if col.kind != TARGET:
                data[col.name] = ds.data[col.name]
            continue
        if col.kind != CATEGORICAL:
            raise SchemaError(f"column {col.name!r} is not categorical")
        values = ds.data[col.name]
        for cat in vocab[col.name]:
            name = f"{col.name}_{cat}"
            cols.append(ColumnMeta(name, NUMERIC))
            data[name] = (values == cat).astype(np.float64)
        if missing_indicator:
            name = f"{col.name}_{MISSING_SUFFIX}"
            cols.append(ColumnMeta(name, NUMERIC))
            data[name] = np.fromiter((v is None for v in values), dtype=np.float64, count=len(values))
    return Dataset(cols, data, ds.y)


def one_hot_encode(ds: Dataset, columns, missing_indicator: bool = False) -> Dataset:
    return apply_one_hot(ds, fit_one_hot(ds, columns), missing_indicator)


# -- numeric stages -------------------------------------------------------
def fit_means(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    present = ~np.isnan(X)
    counts = present.sum(axis=0)
    if (counts == 0).any():
        raise PipelineError(f"all-missing columns at fit time: {np.flatnonzero(counts == 0).tolist()}")
    return np.where(present, X, 0.0).sum(axis=0) / counts


def apply_means(X: np.ndarray, means: np.ndarray) -> np.ndarray:
    X = np.array(X, dtype=np.float64)
    rows, cols = np.nonzero(np.isnan(X))
    X[rows, cols] = means[cols]
    return X


def fit_iqr_fences(X: np.ndarray, whisker: float = 1.5) -> tuple[np.ndarray, np.ndarray]:
    """Per-column ``[Q1 - w*IQR, Q3 + w*IQR]`` with type-7 quantiles."""
    if whisker <= 0:
        raise ValueError("whisker must be positive")
    X = np.asarray(X, dtype=np.float64)
    if np.isnan(X).any():
        raise PipelineError("impute missing cells before outlier capping")
    if X.shape[0] == 0:
        raise PipelineError("cannot fit fences on zero rows")
    q1, q3 = np.quantile(X, [0.25, 0.75], axis=0, method="linear")
    iqr = q3 - q1
    return q1 - whisker * iqr, q3 + whisker * iqr


def apply_fences(X: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    return np.clip(X, lower, upper)


def cap_outliers_iqr(X: np.ndarray, whisker: float = 1.5) -> np.ndarray:
    """Clamp every column of ``X`` to its own IQR fences."""
    lower, upper = fit_iqr_fences(X, whisker)
    return apply_fences(np.asarray(X, dtype=np.float64), lower, upper)


def fit_minmax(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    if np.isnan(X).any():
        raise PipelineError("impute missing cells before scaling")
    if X.shape[0] == 0:
        raise PipelineError("cannot fit a scaler on zero rows")
    return X.min(axis=0), X.max(axis=0)


def apply_minmax(X: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    # constant columns map to 0; out-of-range values pass through
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    out = (np.asarray(X, dtype=np.float64) - lo) / safe
    return np.where(span > 0, out, 0.0)


def minmax_scale(X: np.ndarray) -> np.ndarray:
    lo, hi = fit_minmax(X)
    return apply_minmax(X, lo, hi)


# -- chi-square selection -------------------------------------------------
def chi2_sf_1dof(stat):
    """Survival function of the chi-square distribution with one dof."""
    stat = np.asarray(stat, dtype=np.float64)
    return np.vectorize(lambda s: math.erfc(math.sqrt(s / 2.0)) if s > 0 else 1.0, otypes=[float])(stat)


def chi2_scores(X, y) -> tuple[np.ndarray, np.ndarray]:
    """Chi-square statistic and p-value of every feature against ``y``.

    The observed counts are the class-wise sums of each feature; the expected
    counts split the feature total by class prior. A feature whose total is
    zero scores 0 with p = 1.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if np.isnan(X).any():
        raise PipelineError("chi2 needs complete data")
    if (X < 0).any():
        raise ValueError("chi2 requires non-negative feature values")
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y lengths differ")
    n = X.shape[0]
    observed = np.vstack([X[y == 0].sum(axis=0), X[y == 1].sum(axis=0)])
    priors = np.array([np.count_nonzero(y == 0), np.count_nonzero(y == 1)], dtype=np.float64) / max(n, 1)
    expected = priors[:, None] * X.sum(axis=0)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(expected > 0, (observed - expected) ** 2 / expected, 0.0)
    stat = terms.sum(axis=0)
    return stat, chi2_sf_1dof(stat)


def select_k_best(scores, k: int) -> np.ndarray:
    """Indices of the ``k`` highest scores, ties to the lower index, ascending."""
    scores = np.asarray(scores, dtype=np.float64)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > scores.shape[0]:
        raise ValueError(f"k={k} exceeds feature count {scores.shape[0]}")
    order = np.lexsort((np.arange(scores.shape[0]), -scores))
    return np.sort(order[:k])


def select_fwe(p_values, alpha: float = 0.05) -> np.ndarray:
    """Bonferroni family-wise selection: keep ``p < alpha / n_features``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    p = np.asarray(p_values, dtype=np.float64)
    if p.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    return np.flatnonzero(p < alpha / p.shape[0])


# -- pipeline -------------------------------------------------------------
@dataclass(frozen=True)
class PipelineSpec:
    """What the preprocessing pipeline does, independent of any data.

    ``selector`` is ``"none"``, ``"k_best"`` (uses ``k``) or ``"fwe"`` (uses
    ``alpha``). ``cap_outliers`` is the IQR whisker, or None to skip capping.
    Capping only touches columns that were numeric before encoding.
    """

    drop_list: tuple = ()
    extract_month: bool = False
    date_column: str = "Date"
    onehot_columns: tuple = ()
    onehot_missing_indicator: bool = False
    impute: str = "mean"
    cap_outliers: float | None = None
    scale: str = "minmax"
    selector: str = "none"
    k: int = 10
    alpha: float = 0.05
    paper_compat_full_fit: bool = False

    def __post_init__(self):
        object.__setattr__(self, "drop_list", tuple(self.drop_list))
        object.__setattr__(self, "onehot_columns", tuple(self.onehot_columns))
        if self.impute != "mean":
            raise ValueError("impute must be 'mean'")
        if self.scale not in ("minmax", "none"):
            raise ValueError("scale must be 'minmax' or 'none'")
        if self.selector not in ("none", "k_best", "fwe"):
            raise ValueError(f"unknown selector {self.selector!r}")
        if self.selector == "k_best" and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.selector == "fwe" and not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.cap_outliers is not None and self.cap_outliers <= 0:
            raise ValueError("whisker must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["drop_list"] = list(self.drop_list)
        d["onehot_columns"] = list(self.onehot_columns)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineSpec":
        return cls(**d)


def paper_pipeline_spec(selector: str = "none", **overrides) -> PipelineSpec:
    """The Rain-in-Australia preprocessing used for the benchmark tables.

    One-hot encoding keeps a missing-value indicator per encoded column,
    which is what yields 117 encoded features on the Kaggle file.
    """
    params = dict(
        drop_list=PAPER_DROP_LIST,
        extract_month=True,
        onehot_columns=PAPER_ONEHOT,
        onehot_missing_indicator=True,
        scale="minmax",
        selector=selector,
    )
    params.update(overrides)
    return PipelineSpec(**params)


@dataclass
class FittedPipeline:
    spec: PipelineSpec
    vocab: dict = field(default_factory=dict)
    encoded_names: list = field(default_factory=list)
    means: np.ndarray | None = None
    capped: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    mins: np.ndarray | None = None
    maxs: np.ndarray | None = None
    selected: np.ndarray | None = None

    @property
    def feature_names(self) -> list[str]:
        return [self.encoded_names[i] for i in self.selected]

    def encode(self, ds: Dataset) -> Dataset:
        """Structural stages only (drops, Month, one-hot)."""
        spec = self.spec
        if spec.drop_list:
            ds = drop_columns(ds, spec.drop_list)
        if spec.extract_month:
            ds = extract_month(ds, spec.date_column)
        if self.vocab:
            ds = apply_one_hot(ds, self.vocab, spec.onehot_missing_indicator)
        return ds

    def transform(self, ds: Dataset) -> tuple[np.ndarray, np.ndarray | None]:
        """Feature matrix and labels of ``ds`` using only fitted statistics."""
        enc = self.encode(ds)
        if enc.feature_names != self.encoded_names:
            raise SchemaError("columns after encoding differ from those seen at fit time")
        X = apply_means(enc.X, self.means)
        if self.capped is not None and len(self.capped):
            X[:, self.capped] = apply_fences(X[:, self.capped], self.lower, self.upper)
        if self.mins is not None:
            X = apply_minmax(X, self.mins, self.maxs)
        return np.ascontiguousarray(X[:, self.selected]), enc.y

    def transform_dataset(self, ds: Dataset) -> Dataset:
        from .data import from_arrays

        X, y = self.transform(ds)
        target = ds.target_column.name if ds.target_column is not None else "target"
        return from_arrays(X, y, names=self.feature_names, target=target)

    def to_dict(self) -> dict:
        def arr(a):
            return None if a is None else np.asarray(a).tolist()

        return {
            "spec": self.spec.to_dict(),
            "vocab": self.vocab,
            "encoded_names": list(self.encoded_names),
            "means": arr(self.means),
            "capped": arr(self.capped),
            "lower": arr(self.lower),
            "upper": arr(self.upper),
            "mins": arr(self.mins),
            "maxs": arr(self.maxs),
            "selected": arr(self.selected),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FittedPipeline":
        def arr(a, dtype=np.float64):
            return None if a is None else np.asarray(a, dtype=dtype)

        return cls(
            spec=PipelineSpec.from_dict(d["spec"]),
            vocab={k: list(v) for k, v in d["vocab"].items()},
            encoded_names=list(d["encoded_names"]),
            means=arr(d["means"]),
            capped=arr(d["capped"], np.int64),
            lower=arr(d["lower"]),
            upper=arr(d["upper"]),
            mins=arr(d["mins"]),
            maxs=arr(d["maxs"]),
            selected=arr(d["selected"], np.int64),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "FittedPipeline":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit_pipeline(spec: PipelineSpec, ds: Dataset) -> FittedPipeline:
    """Learn every statistic of ``spec`` from the rows of ``ds``."""
    fitted = FittedPipeline(spec)
    staged = ds
    if spec.drop_list:
        staged = drop_columns(staged, spec.drop_list)
    if spec.extract_month:
        staged = extract_month(staged, spec.date_column)
    numeric_before = {c.name for c in staged.feature_columns if c.kind == NUMERIC}
    if spec.onehot_columns:
        fitted.vocab = fit_one_hot(staged, spec.onehot_columns)
        staged = apply_one_hot(staged, fitted.vocab, spec.onehot_missing_indicator)
    fitted.encoded_names = staged.feature_names

    X = staged.X
    fitted.means = fit_means(X)
    X = apply_means(X, fitted.means)

    if spec.cap_outliers is not None:
        fitted.capped = np.array(
            [j for j, n in enumerate(fitted.encoded_names) if n in numeric_before], dtype=np.int64
        )
        fitted.lower, fitted.upper = fit_iqr_fences(X[:, fitted.capped], spec.cap_outliers)
        X[:, fitted.capped] = apply_fences(X[:, fitted.capped], fitted.lower, fitted.upper)

    if spec.scale == "minmax":
        fitted.mins, fitted.maxs = fit_minmax(X)
        X = apply_minmax(X, fitted.mins, fitted.maxs)

    n_features = X.shape[1]
    if spec.selector == "none":
        fitted.selected = np.arange(n_features, dtype=np.int64)
    else:
        if staged.y is None:
            raise PipelineError("feature selection needs labels")
        stat, p = chi2_scores(X, staged.y)
        if spec.selector == "k_best":
            fitted.selected = select_k_best(stat, spec.k)
        else:
            fitted.selected = select_fwe(p, spec.alpha)
        if fitted.selected.size == 0:
            raise PipelineError("feature selection kept no features")
    return fitted

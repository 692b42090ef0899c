"""Metrics, stratified splitting, leakage-safe cross-validation, grid search
and the sampler x model benchmark runner."""

from __future__ import annotations

import csv
import io
import itertools
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from ._seeding import mix_seed
from .data import Dataset, from_arrays
from .models import ModelSpec, fit_model
from .preprocess import PipelineSpec, fit_pipeline
from .samplers import ResampleResult, SamplerConfig, resample

REPORT_HEADER = ("model", "sampler", "fold", "f1", "precision", "recall")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float


def confusion(y_true, y_pred) -> ConfusionMatrix:
    t = np.asarray(y_true)
    p = np.asarray(y_pred)
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.shape} vs {p.shape}")
    return ConfusionMatrix(
        tp=int(np.count_nonzero((t == 1) & (p == 1))),
        fp=int(np.count_nonzero((t == 0) & (p == 1))),
        fn=int(np.count_nonzero((t == 1) & (p == 0))),
        tn=int(np.count_nonzero((t == 0) & (p == 0))),
    )


def _ratio(a, b) -> float:
    return a / b if b else 0.0


def metrics(cm: ConfusionMatrix) -> Metrics:
    """Positive-class precision, recall and F1; any 0/0 yields 0."""
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    f1 = _ratio(2 * precision * recall, precision + recall)
    return Metrics(precision, recall, f1)


def score(y_true, y_pred) -> Metrics:
    return metrics(confusion(y_true, y_pred))


# -- splitting ---------------------------------------------------------------
def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def stratified_split(y, test_fraction: float, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Per-class proportional train/test split; both index arrays sorted.

    The test side holds ``round(test_fraction * n)`` rows (half up). Each
    class gets the floor of its proportional share and the leftover rows go
    to the largest remainders, ties to the positive class.

    Raises
    ------
    ValueError
        If a class with two or more rows would land entirely on one side, or
        either side would be empty.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    y = np.asarray(y)
    groups = [np.flatnonzero(y == label) for label in (0, 1)]
    shares = np.array([test_fraction * g.shape[0] for g in groups])
    alloc = np.floor(shares).astype(np.int64)
    leftover = _round_half_up(test_fraction * y.shape[0]) - int(alloc.sum())
    for label in sorted((1, 0), key=lambda c: -(shares[c] - alloc[c]))[:max(leftover, 0)]:
        alloc[label] += 1
    for label, g in enumerate(groups):
        if g.shape[0] >= 2 and alloc[label] in (0, g.shape[0]):
            raise ValueError(f"class {label} would be absent from one side of the split")
    if alloc.sum() in (0, y.shape[0]):
        raise ValueError("one side of the split would be empty")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for label, g in enumerate(groups):
        perm = rng.permutation(g)
        test.append(perm[: alloc[label]])
        train.append(perm[alloc[label]:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: np.ndarray
    seed: int

    def folds(self):
        """Yield ``(train_indices, validation_indices)`` for each fold."""
        for f in range(self.k):
            yield np.flatnonzero(self.assignment != f), np.flatnonzero(self.assignment == f)


def stratified_kfold(y, k: int, seed: int = 0) -> FoldPlan:
    """Shuffle each class, then deal its rows round-robin over the folds.

    The second class continues dealing where the first stopped, so fold
    sizes as well as per-fold class counts differ by at most one.
    """
    y = np.asarray(y)
    n = y.shape[0]
    if k < 2 or k > n:
        raise ValueError(f"k={k} must lie in [2, {n}]")
    n_pos = int(np.count_nonzero(y == 1))
    if k > min(n_pos, n - n_pos):
        warnings.warn(f"k={k} exceeds the minority count; some folds lack that class", stacklevel=2)
    rng = np.random.default_rng(seed)
    assignment = np.empty(n, dtype=np.int64)
    offset = 0
    for label in (0, 1):
        idx = rng.permutation(np.flatnonzero(y == label))
        assignment[idx] = (offset + np.arange(idx.shape[0])) % k
        offset = (offset + idx.shape[0]) % k
    return FoldPlan(k, assignment, seed)


# -- cross-validation -------------------------------------------------------
Sampler = SamplerConfig | Callable[[np.ndarray, np.ndarray, int], ResampleResult]


def _resample(sampler: Sampler, X, y, seed: int) -> ResampleResult:
    if isinstance(sampler, SamplerConfig):
        return resample(X, y, replace(sampler, seed=seed))
    return sampler(X, y, seed)


def _prepare(pipeline: PipelineSpec | None, fit_rows: Dataset, *apply_to: Dataset):
    if pipeline is None:
        return [(d.X, d.y) for d in apply_to]
    fitted = fit_pipeline(pipeline, fit_rows)
    return [fitted.transform(d) for d in apply_to]


def _full_fit(pipeline: PipelineSpec | None) -> bool:
    return pipeline is not None and pipeline.paper_compat_full_fit


def _fit_and_score(model_spec, sampler, X_tr, y_tr, X_te, y_te, seed):
    res = _resample(sampler, X_tr, y_tr, seed)
    model = fit_model(res.X, res.y, replace(model_spec, seed=mix_seed(seed, 1)))
    return metrics(confusion(y_te, model.predict(X_te)))


@dataclass
class CVResult:
    folds: list
    seed: int

    @property
    def f1(self) -> list[float]:
        return [m.f1 for m in self.folds]

    @property
    def mean_f1(self) -> float:
        return float(np.mean(self.f1))


def cross_validate(
    model_spec: ModelSpec,
    sampler: Sampler,
    pipeline: PipelineSpec | None,
    ds: Dataset,
    plan: FoldPlan,
    seed: int = 0,
    jobs: int = 1,
) -> CVResult:
    """K-fold CV where only training rows reach the pipeline fit and sampler.

    Fold ``f`` uses seed ``mix_seed(seed, f)`` for its sampler and
    ``mix_seed(that, 1)`` for its model. With
    ``pipeline.paper_compat_full_fit`` the pipeline is instead fitted once on
    every row of ``ds`` (reproducing the leaky protocol).
    """
    if plan.assignment.shape[0] != ds.n_rows:
        raise ValueError("fold plan and dataset sizes differ")
    full = None
    if _full_fit(pipeline):
        full = _prepare(pipeline, ds, ds)[0]

    def run(f):
        tr, va = np.flatnonzero(plan.assignment != f), np.flatnonzero(plan.assignment == f)
        if full is not None:
            X, y = full
            (X_tr, y_tr), (X_va, y_va) = (X[tr], y[tr]), (X[va], y[va])
        else:
            train_ds = ds.take(tr)
            (X_tr, y_tr), (X_va, y_va) = _prepare(pipeline, train_ds, train_ds, ds.take(va))
        return _fit_and_score(model_spec, sampler, X_tr, y_tr, X_va, y_va, mix_seed(seed, f))

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            folds = list(pool.map(run, range(plan.k)))
    else:
        folds = [run(f) for f in range(plan.k)]
    return CVResult(folds, seed)


def expand_grid(param_grid: dict) -> list[dict]:
    if not param_grid or any(len(v) == 0 for v in param_grid.values()):
        raise ValueError("empty parameter grid")
    keys = list(param_grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(param_grid[k] for k in keys))]


def grid_search(
    base: ModelSpec,
    param_grid: dict,
    ds: Dataset,
    plan: FoldPlan,
    sampler: Sampler = SamplerConfig(),
    pipeline: PipelineSpec | None = None,
    seed: int = 0,
    jobs: int = 1,
) -> tuple[ModelSpec, list[tuple[dict, float]]]:
    """Score every grid point by mean CV F1; ties keep the earlier point."""
    table = []
    best, best_score = None, -np.inf
    for params in expand_grid(param_grid):
        spec = replace(base, **params)
        s = cross_validate(spec, sampler, pipeline, ds, plan, seed, jobs).mean_f1
        table.append((params, s))
        if s > best_score:
            best, best_score = spec, s
    return best, table


# -- benchmark --------------------------------------------------------------
@dataclass
class Cell:
    model: str
    sampler: str
    folds: list
    test: Metrics
    all_rows: Metrics | None = None

    @property
    def cv_mean_f1(self) -> float:
        return float(np.mean([m.f1 for m in self.folds]))

    def csv_rows(self) -> list[tuple]:
        rows = [(self.model, self.sampler, str(i), m.f1, m.precision, m.recall) for i, m in enumerate(self.folds)]
        mean = [float(np.mean([getattr(m, a) for m in self.folds])) for a in ("f1", "precision", "recall")]
        rows.append((self.model, self.sampler, "mean", *mean))
        rows.append((self.model, self.sampler, "test", self.test.f1, self.test.precision, self.test.recall))
        return [tuple(repr(float(v)) if isinstance(v, float) else v for v in r) for r in rows]

    def to_dict(self) -> dict:
        d = {
            "model": self.model,
            "sampler": self.sampler,
            "fold_f1": [m.f1 for m in self.folds],
            "fold_precision": [m.precision for m in self.folds],
            "fold_recall": [m.recall for m in self.folds],
            "cv_mean_f1": self.cv_mean_f1,
            "test_f1": self.test.f1,
            "test_precision": self.test.precision,
            "test_recall": self.test.recall,
        }
        if self.all_rows is not None:
            d["all_rows_f1"] = self.all_rows.f1
        return d


@dataclass
class ExperimentReport:
    cells: list
    k: int
    seed: int
    test_fraction: float
    pipeline: dict | None = None
    models: list = field(default_factory=list)

    def cell(self, model: str, sampler: str) -> Cell:
        for c in self.cells:
            if c.model == model and c.sampler == sampler:
                return c
        raise KeyError((model, sampler))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for c in self.cells:
            w.writerows(c.csv_rows())
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "test_fraction": self.test_fraction,
            "pipeline": self.pipeline,
            "models": self.models,
            "cells": [c.to_dict() for c in self.cells],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def summary(self) -> str:
        """Model x sampler table of CV mean and test F1."""
        lines = [f"{'model':<16}{'sampler':<20}{'cv_f1':>9}{'test_f1':>9}"]
        for c in self.cells:
            lines.append(f"{c.model:<16}{c.sampler:<20}{c.cv_mean_f1:>9.4f}{c.test.f1:>9.4f}")
        return "\n".join(lines)


def run_experiment(
    models: list[ModelSpec],
    samplers: list[SamplerConfig],
    pipeline: PipelineSpec | None,
    ds: Dataset,
    k: int = 10,
    test_fraction: float = 0.2,
    seed: int = 0,
    jobs: int = 1,
    evaluate_all_rows: bool = False,
    on_cell: Callable[[Cell], None] | None = None,
) -> ExperimentReport:
    """Cross-validate every (model, sampler) pair on the training portion and
    score a model refitted on that whole portion against the held-out rows.

    Seeds: the split uses ``mix_seed(seed, 0)``, the fold plan
    ``mix_seed(seed, 1)``, CV folds ``mix_seed(seed, 2)`` as their base and the
    held-out refit ``mix_seed(seed, 3)``.
    """
    train_idx, test_idx = stratified_split(ds.y, test_fraction, mix_seed(seed, 0))
    plan = stratified_kfold(ds.y[train_idx], k, mix_seed(seed, 1))

    if _full_fit(pipeline):
        X_all, y_all = _prepare(pipeline, ds, ds)[0]
        train_ds = from_arrays(X_all[train_idx], y_all[train_idx])
        cv_pipeline = None
        X_tr, y_tr = X_all[train_idx], y_all[train_idx]
        X_te, y_te = X_all[test_idx], y_all[test_idx]
    else:
        train_ds = ds.take(train_idx)
        cv_pipeline = pipeline
        targets = [train_ds, ds.take(test_idx)] + ([ds] if evaluate_all_rows else [])
        prepared = _prepare(pipeline, train_ds, *targets)
        (X_tr, y_tr), (X_te, y_te) = prepared[:2]
        if evaluate_all_rows:
            X_all, y_all = prepared[2]

    cells = []
    for spec in models:
        for cfg in samplers:
            cv = cross_validate(spec, cfg, cv_pipeline, train_ds, plan, mix_seed(seed, 2), jobs)
            refit_seed = mix_seed(seed, 3)
            res = _resample(cfg, X_tr, y_tr, refit_seed)
            model = fit_model(res.X, res.y, replace(spec, seed=mix_seed(refit_seed, 1)))
            test = score(y_te, model.predict(X_te))
            all_rows = score(y_all, model.predict(X_all)) if evaluate_all_rows else None
            cell = Cell(spec.kind, cfg.kind, cv.folds, test, all_rows)
            cells.append(cell)
            if on_cell is not None:
                on_cell(cell)
    return ExperimentReport(
        cells=cells,
        k=k,
        seed=seed,
        test_fraction=test_fraction,
        pipeline=None if pipeline is None else pipeline.to_dict(),
        models=[m.to_dict() for m in models],
    )

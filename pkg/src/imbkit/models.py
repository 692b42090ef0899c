"""From-scratch binary classifiers behind one fit / predict interface.

All ties (votes, posteriors, leaf majorities) break toward class 0: a row is
labelled 1 only when its probability is strictly above 0.5.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _cart
from ._seeding import mix_seed

MODEL_KINDS = ("logistic", "gaussian_nb", "decision_tree", "random_forest")


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    C: float = 1.0
    tol: float = 1e-4
    max_iter: int = 1000
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_features: str | int = "all"
    n_estimators: int = 100
    bootstrap: bool = True
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.tol <= 0 or self.max_iter < 1:
            raise ValueError("tol must be positive and max_iter >= 1")
        if self.min_samples_leaf < 1 or self.min_samples_split < 2:
            raise ValueError("min_samples_leaf >= 1 and min_samples_split >= 2 required")
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if not (self.max_features in ("all", "sqrt") or (isinstance(self.max_features, int) and self.max_features >= 1)):
            raise ValueError("max_features must be 'all', 'sqrt' or a positive int")

    def to_dict(self) -> dict:
        """Result-relevant fields; ``n_jobs`` is left out since it never changes a fit."""
        d = asdict(self)
        del d["n_jobs"]
        return d


def paper_models(n_estimators: int = 300, seed: int = 0, n_jobs: int = 1) -> list[ModelSpec]:
    """The two tuned models carried through the resampling comparison."""
    return [
        ModelSpec(
            "random_forest",
            max_features="sqrt",
            min_samples_split=4,
            min_samples_leaf=2,
            n_estimators=n_estimators,
            seed=seed,
            n_jobs=n_jobs,
        ),
        ModelSpec("logistic", C=100.0, max_iter=2000, tol=1e-3, seed=seed),
    ]


MODEL_LABELS = {
    "random_forest": "RandomForestClassifier",
    "logistic": "LogisticRegression",
    "decision_tree": "DecisionTreeClassifier",
    "gaussian_nb": "GaussianNB",
}


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, d) and y (n,)")
    if not np.isfinite(X).all():
        raise ValueError("X must be finite (impute missing cells first)")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    return X, y


def _both_classes(y):
    if y.shape[0] == 0 or y.min() == y.max():
        raise ValueError("both classes must be present")


class _Model:
    kind: str
    n_features: int

    def _check(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got shape {X.shape}")
        return X

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) > 0.5).astype(np.int64)


# -- logistic regression -------------------------------------------------
def _sigmoid(s):
    out = np.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    e = np.exp(s[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logistic_objective(w, b, X, y, C) -> float:
    """Mean log-loss plus ``|w|^2 / (2 C n)``; the intercept is not penalised."""
    n = X.shape[0]
    s = X @ w + b
    return float(np.mean(np.logaddexp(0.0, s) - y * s) + (w @ w) / (2.0 * C * n))


def logistic_gradient(w, b, X, y, C):
    n = X.shape[0]
    resid = _sigmoid(X @ w + b) - y
    return X.T @ resid / n + w / (C * n), float(resid.mean())


@dataclass
class LogisticModel(_Model):
    coef: np.ndarray
    intercept: float
    converged: bool = False
    n_iter: int = 0
    history: list = field(default_factory=list, repr=False)
    kind: str = "logistic"

    @property
    def n_features(self) -> int:
        return self.coef.shape[0]

    def decision_function(self, X) -> np.ndarray:
        return self._check(X) @ self.coef + self.intercept

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.decision_function(X))


def fit_logistic(X, y, spec: ModelSpec) -> LogisticModel:
    """L2 logistic regression by full-batch gradient descent.

    Each step backtracks (halving) from twice the previous accepted step
    until the Armijo condition holds, so the objective never increases.
    Stops when the gradient's infinity norm drops below ``spec.tol``.
    """
    X, y = _check_xy(X, y)
    _both_classes(y)
    w = np.zeros(X.shape[1])
    b = 0.0
    f = logistic_objective(w, b, X, y, spec.C)
    history = [f]
    step = 1.0
    converged = False
    it = 0
    for it in range(1, spec.max_iter + 1):
        gw, gb = logistic_gradient(w, b, X, y, spec.C)
        gnorm2 = gw @ gw + gb * gb
        if max(np.abs(gw).max(initial=0.0), abs(gb)) < spec.tol:
            converged = True
            it -= 1
            break
        step = min(step * 2.0, 1e6)
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            f_new = logistic_objective(w_new, b_new, X, y, spec.C)
            if f_new <= f - 1e-4 * step * gnorm2:
                break
            step *= 0.5
            if step < 1e-20:
                break
        if f_new > f:
            break
        w, b, f = w_new, b_new, f_new
        history.append(f)
    return LogisticModel(coef=w, intercept=b, converged=converged, n_iter=it, history=history)


# -- Gaussian naive Bayes ------------------------------------------------
@dataclass
class GaussianNBModel(_Model):
    priors: np.ndarray  # (2,)
    means: np.ndarray  # (2, d)
    variances: np.ndarray  # (2, d)
    kind: str = "gaussian_nb"

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def joint_log_likelihood(self, X) -> np.ndarray:
        X = self._check(X)
        out = np.empty((X.shape[0], 2))
        for c in range(2):
            var = self.variances[c]
            out[:, c] = (
                math.log(self.priors[c])
                - 0.5 * np.sum(np.log(2.0 * np.pi * var))
                - 0.5 * np.sum((X - self.means[c]) ** 2 / var, axis=1)
            )
        return out

    def predict_proba(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        return _sigmoid(jll[:, 1] - jll[:, 0])


def fit_gaussian_nb(X, y, var_smoothing: float = 1e-9) -> GaussianNBModel:
    X, y = _check_xy(X, y)
    _both_classes(y)
    eps = var_smoothing * float(X.var(axis=0).max(initial=0.0))
    priors = np.array([np.mean(y == 0), np.mean(y == 1)])
    means = np.vstack([X[y == c].mean(axis=0) for c in (0, 1)])
    variances = np.vstack([X[y == c].var(axis=0) for c in (0, 1)]) + eps
    if (variances <= 0).any():
        # every feature constant across the whole set
        variances = np.where(variances > 0, variances, np.finfo(np.float64).tiny)
    return GaussianNBModel(priors=priors, means=means, variances=variances)


# -- CART tree -------------------------------------------------------------
@dataclass
class TreeModel(_Model):
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    count0: np.ndarray
    count1: np.ndarray
    n_features: int = 0
    kind: str = "decision_tree"

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def leaves(self, X) -> np.ndarray:
        X = np.ascontiguousarray(self._check(X))
        return _cart.apply(X, self.feature, self.threshold, self.left, self.right)

    def predict_proba(self, X) -> np.ndarray:
        leaf = self.leaves(X)
        c1 = self.count1[leaf]
        return c1 / (self.count0[leaf] + c1)

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())


def _resolve_max_features(spec: ModelSpec, d: int) -> int:
    if spec.max_features == "all":
        return d
    if spec.max_features == "sqrt":
        return max(1, int(math.sqrt(d)))
    return min(int(spec.max_features), d)


def fit_tree(X, y, spec: ModelSpec, seed: int | None = None) -> TreeModel:
    """CART with Gini impurity.

    Thresholds are midpoints between consecutive distinct sorted values.
    With ``max_features`` below the feature count, each node inspects
    features in a random order until that many non-constant ones have been
    scored.
    """
    X, y = _check_xy(X, y)
    if X.shape[0] == 0:
        raise ValueError("cannot fit a tree on zero rows")
    seed = spec.seed if seed is None else seed
    arrays = _cart.grow(
        np.ascontiguousarray(X),
        y,
        spec.min_samples_split,
        spec.min_samples_leaf,
        _resolve_max_features(spec, X.shape[1]),
        np.uint64(seed & ((1 << 64) - 1)),
    )
    return TreeModel(*arrays, n_features=X.shape[1])


# -- random forest ----------------------------------------------------------
@dataclass
class ForestModel(_Model):
    trees: list
    n_features: int = 0
    kind: str = "random_forest"

    def votes(self, X) -> np.ndarray:
        X = np.ascontiguousarray(self._check(X))
        return np.vstack([t.predict(X) for t in self.trees])

    def predict_proba(self, X) -> np.ndarray:
        return self.votes(X).mean(axis=0)


def fit_forest(X, y, spec: ModelSpec) -> ForestModel:
    """Bagged CART trees; tree ``i`` uses seed ``mix_seed(spec.seed, i)`` for
    both its bootstrap draw and its feature sampling, so any ``n_jobs`` gives
    the same forest."""
    X, y = _check_xy(X, y)
    if X.shape[0] == 0:
        raise ValueError("cannot fit a forest on zero rows")
    n = X.shape[0]
    X = np.ascontiguousarray(X)

    def one(i):
        seed = mix_seed(spec.seed, i)
        if spec.bootstrap:
            rows = np.random.default_rng(seed).integers(n, size=n)
            return fit_tree(X[rows], y[rows], spec, seed)
        return fit_tree(X, y, spec, seed)

    if spec.n_jobs > 1:
        with ThreadPoolExecutor(spec.n_jobs) as pool:
            trees = list(pool.map(one, range(spec.n_estimators)))
    else:
        trees = [one(i) for i in range(spec.n_estimators)]
    return ForestModel(trees=trees, n_features=X.shape[1])


# -- dispatch / persistence ----------------------------------------------
def fit_model(X, y, spec: ModelSpec):
    if spec.kind == "logistic":
        return fit_logistic(X, y, spec)
    if spec.kind == "gaussian_nb":
        return fit_gaussian_nb(X, y)
    if spec.kind == "decision_tree":
        return fit_tree(X, y, spec)
    return fit_forest(X, y, spec)


def predict(model, X) -> np.ndarray:
    return model.predict(X)


def predict_proba(model, X) -> np.ndarray:
    return model.predict_proba(X)


_TREE_FIELDS = ("feature", "threshold", "left", "right", "count0", "count1")


def save_model(model, path) -> None:
    """Write a model to a ``.npz`` archive.

    The archive holds ``meta`` (a JSON string with ``kind`` and
    ``n_features``) plus the kind's arrays: ``coef``/``intercept`` for
    logistic, ``priors``/``means``/``variances`` for naive Bayes, and the
    node arrays (prefixed ``t<i>_`` per tree for forests).
    """
    meta = {"kind": model.kind, "n_features": int(model.n_features)}
    arrays = {}
    if model.kind == "logistic":
        arrays = {"coef": model.coef, "intercept": np.array([model.intercept])}
        meta["converged"] = bool(model.converged)
        meta["n_iter"] = int(model.n_iter)
    elif model.kind == "gaussian_nb":
        arrays = {"priors": model.priors, "means": model.means, "variances": model.variances}
    elif model.kind == "decision_tree":
        arrays = {f: getattr(model, f) for f in _TREE_FIELDS}
    else:
        meta["n_trees"] = len(model.trees)
        for i, t in enumerate(model.trees):
            for f in _TREE_FIELDS:
                arrays[f"t{i}_{f}"] = getattr(t, f)
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta, sort_keys=True)), **arrays)


def load_model(path):
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["meta"]))
        kind, d = meta["kind"], meta["n_features"]
        if kind == "logistic":
            return LogisticModel(
                coef=z["coef"], intercept=float(z["intercept"][0]),
                converged=meta["converged"], n_iter=meta["n_iter"],
            )
        if kind == "gaussian_nb":
            return GaussianNBModel(priors=z["priors"], means=z["means"], variances=z["variances"])
        if kind == "decision_tree":
            return TreeModel(*(z[f] for f in _TREE_FIELDS), n_features=d)
        if kind == "random_forest":
            trees = [
                TreeModel(*(z[f"t{i}_{f}"] for f in _TREE_FIELDS), n_features=d)
                for i in range(meta["n_trees"])
            ]
            return ForestModel(trees=trees, n_features=d)
    raise ValueError(f"unknown model kind {kind!r} in {path}")

"""Data-level resampling for binary classification.

Every sampler is a pure function of ``(X, y, config)``: randomness comes from
``numpy.random.default_rng(config.seed)`` only, consumed in the order given in
each function's docstring. The minority class is the label with fewer rows
(label 1 when the counts are equal, in which case oversamplers add nothing).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .neighbors import NeighborIndex

ORIGINAL = 0
DUPLICATED = 1
SYNTHETIC = 2
ORIGIN_NAMES = {ORIGINAL: "original", DUPLICATED: "duplicated", SYNTHETIC: "synthetic"}

NOISE, DANGER, SAFE = "noise", "danger", "safe"

KINDS = (
    "none",
    "random_over",
    "random_under",
    "smote",
    "borderline_smote",
    "adasyn",
    "tomek",
    "enn",
    "smote_tomek",
    "smote_enn",
)

# balancer_sel codes of the benchmark program
BALANCER_CODES = {
    0: "none",
    1: "smote",
    2: "smote_tomek",
    3: "smote_enn",
    4: "adasyn",
    5: "borderline_smote",
    6: "random_over",
    7: "random_under",
}
BALANCER_LABELS = {
    "none": "0: Imbalance",
    "smote": "1: SMOTE",
    "smote_tomek": "2: SMOTETomek",
    "smote_enn": "3: SMOTEENN",
    "adasyn": "4: ADASYN",
    "borderline_smote": "5: BorderlineSMOTE",
    "random_over": "6: RandomOverSampling",
    "random_under": "7: RandomUnderSampling",
}


class SamplerWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    kind: str = "none"
    k_neighbors: int = 5
    m_neighbors: int = 5
    enn_k: int = 3
    beta: float = 1.0
    seed: int = 0
    tomek_mode: str = "clean_both"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}")
        if self.k_neighbors < 1 or self.m_neighbors < 1:
            raise ValueError("neighbor counts must be >= 1")
        if self.enn_k < 1 or self.enn_k % 2 == 0:
            raise ValueError("enn_k must be a positive odd number")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if self.tomek_mode not in ("undersample_majority", "clean_both"):
            raise ValueError(f"unknown tomek mode {self.tomek_mode!r}")

    @classmethod
    def from_code(cls, code: int, **kwargs) -> "SamplerConfig":
        try:
            return cls(kind=BALANCER_CODES[int(code)], **kwargs)
        except KeyError:
            raise ValueError(f"balancer_sel must be one of {sorted(BALANCER_CODES)}") from None


@dataclass
class ResampleResult:
    """Resampled training rows with per-row provenance.

    ``origin`` holds ORIGINAL / DUPLICATED / SYNTHETIC per output row.
    ``source`` is the input row an original or duplicated row came from, or
    the base row of a synthetic; ``partner`` is a synthetic's neighbor row and
    ``gap`` its interpolation weight (``-1`` / NaN elsewhere). ``removed``
    lists input rows dropped by cleaning; ``n_removed`` also counts synthetic
    rows that were generated and then cleaned away.
    """

    X: np.ndarray
    y: np.ndarray
    origin: np.ndarray
    source: np.ndarray
    partner: np.ndarray
    gap: np.ndarray
    removed: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    n_removed: int = 0
    warning: str | None = None

    def __len__(self) -> int:
        return self.y.shape[0]

    def take(self, keep: np.ndarray) -> "ResampleResult":
        keep = np.asarray(keep)
        return replace(
            self,
            X=self.X[keep],
            y=self.y[keep],
            origin=self.origin[keep],
            source=self.source[keep],
            partner=self.partner[keep],
            gap=self.gap[keep],
        )


# -- helpers ----------------------------------------------------------------
def _check(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, d) and y (n,)")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    if np.isnan(X).any():
        raise ValueError("X contains missing cells")
    return X, y


def _classes(y) -> tuple[int, int]:
    """(minority label, majority label)."""
    pos = int(np.count_nonzero(y == 1))
    neg = y.shape[0] - pos
    if pos == 0 or neg == 0:
        raise ValueError("both classes must be present")
    return (1, 0) if pos <= neg else (0, 1)


def _identity(X, y) -> ResampleResult:
    n = y.shape[0]
    return ResampleResult(
        X=X.copy(),
        y=y.copy(),
        origin=np.full(n, ORIGINAL, dtype=np.int8),
        source=np.arange(n, dtype=np.int64),
        partner=np.full(n, -1, dtype=np.int64),
        gap=np.full(n, np.nan),
    )


def _append(base: ResampleResult, X_new, label, origin, source, partner, gap) -> ResampleResult:
    m = X_new.shape[0]
    return replace(
        base,
        X=np.vstack([base.X, X_new]),
        y=np.concatenate([base.y, np.full(m, label, dtype=np.int64)]),
        origin=np.concatenate([base.origin, np.full(m, origin, dtype=np.int8)]),
        source=np.concatenate([base.source, source]),
        partner=np.concatenate([base.partner, partner]),
        gap=np.concatenate([base.gap, gap]),
    )


def interpolate(base_rows: np.ndarray, neighbor_rows: np.ndarray, gaps: np.ndarray) -> np.ndarray:
    """``base + gap * (neighbor - base)`` row by row."""
    return base_rows + np.asarray(gaps)[:, None] * (neighbor_rows - base_rows)


def _cycle(rng, pool_size: int, quota: int) -> np.ndarray:
    """Visit ``range(pool_size)`` in fresh random orders until ``quota`` picks."""
    rounds = -(-quota // pool_size) if quota else 0
    if rounds == 0:
        return np.empty(0, dtype=np.int64)
    return np.concatenate([rng.permutation(pool_size) for _ in range(rounds)])[:quota]


def _minority_neighbors(X_min: np.ndarray, k: int) -> tuple[np.ndarray, int]:
    k_eff = min(k, X_min.shape[0] - 1)
    return NeighborIndex(X_min).query_rows(np.arange(X_min.shape[0]), k_eff), k_eff


def _synthesize(X, y, min_idx, bases, nn, k_eff, rng, minority) -> ResampleResult:
    """Emit one synthetic per entry of ``bases`` (positions within ``min_idx``).

    Consumes ``rng.integers(k_eff, size=len(bases))`` then
    ``rng.random(len(bases))``.
    """
    m = bases.shape[0]
    choice = rng.integers(k_eff, size=m)
    gaps = rng.random(m)
    partners = nn[bases, choice]
    X_min = X[min_idx]
    X_new = interpolate(X_min[bases], X_min[partners], gaps)
    return _append(
        _identity(X, y), X_new, minority, SYNTHETIC, min_idx[bases], min_idx[partners], gaps
    )


def _require_two_minority(n_min: int):
    if n_min < 2:
        raise ValueError("interpolating samplers need at least 2 minority rows")


# -- random samplers ------------------------------------------------------
def random_oversample(X, y, seed: int = 0) -> ResampleResult:
    """Duplicate random minority rows (with replacement) up to parity.

    Consumes ``rng.integers(n_min, size=quota)``.
    """
    X, y = _check(X, y)
    minority, majority = _classes(y)
    min_idx = np.flatnonzero(y == minority)
    quota = int(np.count_nonzero(y == majority)) - min_idx.shape[0]
    rng = np.random.default_rng(seed)
    picks = min_idx[rng.integers(min_idx.shape[0], size=quota)]
    return _append(
        _identity(X, y), X[picks], minority, DUPLICATED, picks,
        np.full(quota, -1, dtype=np.int64), np.full(quota, np.nan),
    )


def random_undersample(X, y, seed: int = 0) -> ResampleResult:
    """Keep a uniform random subset of majority rows the size of the minority.

    Consumes one ``rng.permutation(n_maj)``. Kept rows stay in input order.
    """
    X, y = _check(X, y)
    minority, majority = _classes(y)
    maj_idx = np.flatnonzero(y == majority)
    n_min = int(np.count_nonzero(y == minority))
    rng = np.random.default_rng(seed)
    dropped = np.sort(maj_idx[rng.permutation(maj_idx.shape[0])[n_min:]])
    keep = np.setdiff1d(np.arange(y.shape[0]), dropped)
    out = _identity(X, y).take(keep)
    out.removed = dropped
    out.n_removed = int(dropped.shape[0])
    return out


# -- SMOTE family -----------------------------------------------------------
def smote(X, y, cfg: SamplerConfig = SamplerConfig(kind="smote")) -> ResampleResult:
    """Interpolate new minority rows until the classes balance.

    Bases cycle through the minority rows in shuffled rounds (one
    ``rng.permutation`` per round), each paired with one of its
    ``min(k_neighbors, n_min - 1)`` minority neighbors.
    """
    X, y = _check(X, y)
    minority, majority = _classes(y)
    min_idx = np.flatnonzero(y == minority)
    _require_two_minority(min_idx.shape[0])
    quota = int(np.count_nonzero(y == majority)) - min_idx.shape[0]
    rng = np.random.default_rng(cfg.seed)
    if quota == 0:
        return _identity(X, y)
    nn, k_eff = _minority_neighbors(X[min_idx], cfg.k_neighbors)
    bases = _cycle(rng, min_idx.shape[0], quota)
    return _synthesize(X, y, min_idx, bases, nn, k_eff, rng, minority)


def majority_neighbor_counts(X, y, rows, k: int, minority: int) -> np.ndarray:
    """How many of each row's ``k`` nearest neighbors (whole set) are majority."""
    nn = NeighborIndex(X).query_rows(rows, k)
    return (y[nn] != minority).sum(axis=1)


def borderline_categories(X, y, m_neighbors: int = 5) -> np.ndarray:
    """NOISE / DANGER / SAFE label of each minority row (in index order)."""
    X, y = _check(X, y)
    minority, _ = _classes(y)
    min_idx = np.flatnonzero(y == minority)
    m = min(m_neighbors, y.shape[0] - 1)
    m_prime = majority_neighbor_counts(X, y, min_idx, m, minority)
    cats = np.full(min_idx.shape[0], SAFE, dtype=object)
    cats[(2 * m_prime >= m) & (m_prime < m)] = DANGER
    cats[m_prime == m] = NOISE
    return cats


def borderline_smote(X, y, cfg: SamplerConfig = SamplerConfig(kind="borderline_smote")) -> ResampleResult:
    """SMOTE seeded only from DANGER minority rows (variant 1).

    A minority row is DANGER when ``m/2 <= m' < m`` of its ``m_neighbors``
    nearest rows in the whole set are majority, NOISE when ``m' = m``.
    Without DANGER rows the input comes back unchanged with a warning.
    """
    X, y = _check(X, y)
    minority, majority = _classes(y)
    min_idx = np.flatnonzero(y == minority)
    _require_two_minority(min_idx.shape[0])
    quota = int(np.count_nonzero(y == majority)) - min_idx.shape[0]
    rng = np.random.default_rng(cfg.seed)
    if quota == 0:
        return _identity(X, y)
    danger = np.flatnonzero(borderline_categories(X, y, cfg.m_neighbors) == DANGER)
    if danger.shape[0] == 0:
        msg = "no DANGER minority rows; input returned unchanged"
        warnings.warn(msg, SamplerWarning, stacklevel=2)
        out = _identity(X, y)
        out.warning = msg
        return out
    nn, k_eff = _minority_neighbors(X[min_idx], cfg.k_neighbors)
    bases = danger[_cycle(rng, danger.shape[0], quota)]
    return _synthesize(X, y, min_idx, bases, nn, k_eff, rng, minority)


def round_half_up(values) -> np.ndarray:
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5).astype(np.int64)


def adasyn_allocation(ratios, G: float) -> np.ndarray:
    """Synthetic count per minority row from its majority-neighbor ratio.

    Ratios are normalised to sum to one and scaled by ``G``; each count is
    rounded half up independently. A zero ratio sum spreads ``G`` uniformly.
    """
    r = np.asarray(ratios, dtype=np.float64)
    total = r.sum()
    weights = r / total if total > 0 else np.full(r.shape[0], 1.0 / r.shape[0])
    return round_half_up(weights * G)


def adasyn(X, y, cfg: SamplerConfig = SamplerConfig(kind="adasyn")) -> ResampleResult:
    """Adaptive synthetic sampling.

    ``G = (n_maj - n_min) * beta``. Each minority row gets a share of ``G``
    proportional to the fraction of majority rows among its ``k_neighbors``
    nearest rows in the whole set. If no minority row has a majority
    neighbor the allocation degenerates to plain SMOTE with ``round(G)``
    synthetics. Synthetics are emitted row by row in minority index order.
    """
    X, y = _check(X, y)
    minority, majority = _classes(y)
    min_idx = np.flatnonzero(y == minority)
    _require_two_minority(min_idx.shape[0])
    G = (int(np.count_nonzero(y == majority)) - min_idx.shape[0]) * cfg.beta
    rng = np.random.default_rng(cfg.seed)
    k = min(cfg.k_neighbors, y.shape[0] - 1)
    ratios = majority_neighbor_counts(X, y, min_idx, k, minority) / k
    nn, k_eff = _minority_neighbors(X[min_idx], cfg.k_neighbors)
    if ratios.sum() == 0:
        bases = _cycle(rng, min_idx.shape[0], int(round_half_up(G)))
    else:
        counts = adasyn_allocation(ratios, G)
        bases = np.repeat(np.arange(min_idx.shape[0]), counts)
    if bases.shape[0] == 0:
        return _identity(X, y)
    return _synthesize(X, y, min_idx, bases, nn, k_eff, rng, minority)


# -- cleaning ----------------------------------------------------------------
def tomek_pairs(X, y) -> np.ndarray:
    """All Tomek links as ``(i, j)`` rows with ``i < j``."""
    n = y.shape[0]
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    nn = NeighborIndex(X).query_rows(np.arange(n), 1)[:, 0]
    i = np.arange(n)
    linked = (nn[nn] == i) & (y[nn] != y) & (i < nn)
    return np.column_stack([i[linked], nn[linked]])


def _drop(out: ResampleResult, rows: np.ndarray) -> ResampleResult:
    rows = np.unique(rows)
    keep = np.setdiff1d(np.arange(len(out)), rows)
    was_input = out.origin[rows] == ORIGINAL
    removed = np.sort(np.concatenate([out.removed, out.source[rows][was_input]]))
    res = out.take(keep)
    res.removed = removed
    res.n_removed = out.n_removed + int(rows.shape[0])
    return res


def _tomek_clean(out: ResampleResult, mode: str, majority: int) -> ResampleResult:
    pairs = tomek_pairs(out.X, out.y)
    if pairs.shape[0] == 0:
        return out
    rows = pairs.ravel()
    if mode == "undersample_majority":
        rows = rows[out.y[rows] == majority]
    return _drop(out, rows)


def tomek_links(X, y, mode: str = "undersample_majority") -> ResampleResult:
    """Remove Tomek links: mutual 1-NN pairs with opposite labels.

    ``undersample_majority`` drops only each link's majority member;
    ``clean_both`` drops both members.
    """
    if mode not in ("undersample_majority", "clean_both"):
        raise ValueError(f"unknown mode {mode!r}")
    X, y = _check(X, y)
    _, majority = _classes(y)
    return _tomek_clean(_identity(X, y), mode, majority)


def enn_flags(X, y, k: int = 3) -> np.ndarray:
    """True where a row's label disagrees with the vote of its k neighbors."""
    nn = NeighborIndex(X).query_rows(np.arange(y.shape[0]), k)
    votes = y[nn].sum(axis=1)
    majority_label = (2 * votes > k).astype(np.int64)
    return majority_label != y


def _enn_clean(out: ResampleResult, k: int) -> ResampleResult:
    if np.unique(out.y).shape[0] < 2:
        return out
    flags = enn_flags(out.X, out.y, k)
    return _drop(out, np.flatnonzero(flags)) if flags.any() else out


def enn(X, y, enn_k: int = 3) -> ResampleResult:
    """Wilson's edited nearest neighbor rule, one simultaneous pass.

    Rows misclassified by the majority vote of their ``enn_k`` nearest
    neighbors are removed from both classes.
    """
    X, y = _check(X, y)
    if y.shape[0] <= enn_k:
        raise ValueError(f"need more than enn_k={enn_k} rows")
    if enn_k % 2 == 0:
        raise ValueError("enn_k must be odd")
    return _enn_clean(_identity(X, y), enn_k)


def smote_tomek(X, y, cfg: SamplerConfig = SamplerConfig(kind="smote_tomek")) -> ResampleResult:
    """SMOTE, then remove both members of every Tomek link in the result."""
    out = smote(X, y, cfg)
    _, majority = _classes(np.asarray(y))
    return _tomek_clean(out, "clean_both", majority)


def smote_enn(X, y, cfg: SamplerConfig = SamplerConfig(kind="smote_enn")) -> ResampleResult:
    """SMOTE, then ENN over the combined rows, removing from both classes."""
    out = smote(X, y, cfg)
    if len(out) <= cfg.enn_k:
        raise ValueError(f"need more than enn_k={cfg.enn_k} rows")
    return _enn_clean(out, cfg.enn_k)


def resample(X, y, cfg: SamplerConfig) -> ResampleResult:
    """Dispatch on ``cfg.kind``."""
    kind = cfg.kind
    if kind == "none":
        X, y = _check(X, y)
        return _identity(X, y)
    if kind == "random_over":
        return random_oversample(X, y, cfg.seed)
    if kind == "random_under":
        return random_undersample(X, y, cfg.seed)
    if kind == "tomek":
        return tomek_links(X, y, cfg.tomek_mode)
    if kind == "enn":
        return enn(X, y, cfg.enn_k)
    return {
        "smote": smote,
        "borderline_smote": borderline_smote,
        "adasyn": adasyn,
        "smote_tomek": smote_tomek,
        "smote_enn": smote_enn,
    }[kind](X, y, cfg)

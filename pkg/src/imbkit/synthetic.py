"""Synthetic benchmark data."""

import numpy as np


def two_gaussians(n: int = 2000, minority_fraction: float = 0.1, shift: float = 1.0, seed: int = 0):
    """Two overlapping unit-variance 2-D Gaussians.

    The majority (label 0) is centred at the origin and the minority
    (label 1) at ``(shift, shift)``. Exactly ``round(n * minority_fraction)``
    rows are minority; rows come out shuffled.
    """
    rng = np.random.default_rng(seed)
    n_pos = int(round(n * minority_fraction))
    y = np.zeros(n, dtype=np.int64)
    y[:n_pos] = 1
    X = rng.standard_normal((n, 2))
    X[:n_pos] += shift
    order = rng.permutation(n)
    return X[order], y[order]

"""Slow, obviously-correct reference implementations used by the tests."""

import numpy as np


def all_pairs_sq(X):
    X = np.asarray(X, dtype=np.float64)
    diff = X[:, None, :] - X[None, :, :]
    return (diff * diff).sum(axis=2)


def nearest(X, i, k):
    """k nearest rows of row i (self excluded), ties to lower index."""
    d = all_pairs_sq(X)[i]
    order = [j for j in sorted(range(len(d)), key=lambda j: (d[j], j)) if j != i]
    return order[:k]


def tomek_pairs(X, y):
    links = set()
    for i in range(len(y)):
        j = nearest(X, i, 1)[0]
        if y[i] != y[j] and nearest(X, j, 1)[0] == i:
            links.add((min(i, j), max(i, j)))
    return sorted(links)


def enn_removed(X, y, k=3):
    out = []
    for i in range(len(y)):
        votes = sum(int(y[j]) for j in nearest(X, i, k))
        if int(2 * votes > k) != y[i]:
            out.append(i)
    return out


def on_segment_residual(p, a, b):
    """Distance from p to the closed segment [a, b]."""
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0 else min(1.0, max(0.0, float((p - a) @ ab) / denom))
    return float(np.linalg.norm(p - (a + t * ab)))

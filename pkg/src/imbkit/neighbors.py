"""Exact Euclidean k-nearest-neighbor search.

Distances are compared as squared Euclidean values computed by
:func:`sq_distances`; ties go to the lower row index. The batched path
screens candidates with the ``|q|^2 + |p|^2 - 2 q.p`` expansion (BLAS), then
recomputes exact distances for every candidate inside a provable rounding
margin, so its output is identical to the O(n) scan in :func:`brute_force`.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_EPS = np.finfo(np.float64).eps
_CHUNK_CELLS = 1 << 24


def sq_distances(points: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance from ``query`` to every row of ``points``."""
    diff = points - query
    return (diff * diff).sum(axis=1)


def _rank(cand: np.ndarray, dist: np.ndarray, k: int) -> np.ndarray:
    return cand[np.lexsort((cand, dist))[:k]]


def brute_force(points: np.ndarray, query: np.ndarray, k: int, exclude: int | None = None) -> np.ndarray:
    """Reference scan: the ``k`` closest rows, ascending, ties to lower index."""
    points = np.asarray(points, dtype=np.float64)
    idx = np.arange(points.shape[0])
    if exclude is not None:
        idx = idx[idx != exclude]
    if k > idx.shape[0]:
        raise ValueError(f"k={k} exceeds the {idx.shape[0]} eligible points")
    return _rank(idx, sq_distances(points[idx], np.asarray(query, dtype=np.float64)), k)


@njit(cache=True, nogil=True)
def _screen(G, qnorms, pnorms, exclude, k, slack, max_norm):
    """Candidate rows per query from the Gram block ``G = Q @ P.T``.

    A row is a candidate when its expanded distance is within twice the
    rounding margin of the k-th smallest one. Returns CSR ``(offsets, idx)``.
    """
    m, n = G.shape
    limit = np.empty(m)
    buf = np.empty(k)
    for r in range(m):
        for t in range(k):
            buf[t] = np.inf
        for j in range(n):
            if j == exclude[r]:
                continue
            a = qnorms[r] + pnorms[j] - 2.0 * G[r, j]
            if a < buf[k - 1]:
                t = k - 1
                while t > 0 and buf[t - 1] > a:
                    buf[t] = buf[t - 1]
                    t -= 1
                buf[t] = a
        limit[r] = buf[k - 1] + 2.0 * slack * (qnorms[r] + max_norm)
    offsets = np.zeros(m + 1, dtype=np.int64)
    for r in range(m):
        c = 0
        for j in range(n):
            if j != exclude[r] and qnorms[r] + pnorms[j] - 2.0 * G[r, j] <= limit[r]:
                c += 1
        offsets[r + 1] = offsets[r] + c
    idx = np.empty(offsets[m], dtype=np.int64)
    for r in range(m):
        c = offsets[r]
        for j in range(n):
            if j != exclude[r] and qnorms[r] + pnorms[j] - 2.0 * G[r, j] <= limit[r]:
                idx[c] = j
                c += 1
    return offsets, idx


class NeighborIndex:
    """Immutable exact k-NN index over the rows of ``points``.

    Parameters
    ----------
    points : array-like of shape (n_samples, n_features)
        Must be free of missing (NaN) cells and hold at least one row.
    """

    def __init__(self, points):
        P = np.array(points, dtype=np.float64, order="C")
        if P.ndim != 2:
            raise ValueError("points must be 2-D")
        if P.shape[0] < 1:
            raise ValueError("an index needs at least one point")
        if np.isnan(P).any():
            raise ValueError("points contain missing cells")
        P.flags.writeable = False
        self.points = P
        self._norms = (P * P).sum(axis=1)
        self._max_norm = float(self._norms.max())

    def __len__(self) -> int:
        return self.points.shape[0]

    def kneighbors(self, query, k: int, exclude: int | None = None) -> np.ndarray:
        """Single-query search; ``exclude`` names a row to skip (self)."""
        return brute_force(self.points, query, k, exclude)

    def query_rows(self, rows, k: int, exclude_self: bool = True) -> np.ndarray:
        """Neighbors of the stored rows ``rows``; shape ``(len(rows), k)``.

        With ``exclude_self`` each row is skipped in its own result by row
        identity, so an exact duplicate elsewhere still counts as a neighbor.
        """
        rows = np.asarray(rows, dtype=np.int64)
        exclude = rows if exclude_self else np.full(rows.shape[0], -1, dtype=np.int64)
        return self._search(self.points[rows], self._norms[rows], k, exclude)

    def query(self, Q, k: int) -> np.ndarray:
        """Neighbors of arbitrary query points (nothing excluded)."""
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        if Q.shape[1] != self.points.shape[1]:
            raise ValueError("query dimension mismatch")
        return self._search(Q, (Q * Q).sum(axis=1), k, np.full(Q.shape[0], -1, dtype=np.int64))

    def _search(self, Q, qnorms, k, exclude) -> np.ndarray:
        n, d = self.points.shape
        eligible = n - (1 if (exclude >= 0).any() else 0)
        if k < 1 or k > eligible:
            raise ValueError(f"k={k} must lie in [1, {eligible}]")
        out = np.empty((Q.shape[0], k), dtype=np.int64)
        if Q.shape[0] == 0:
            return out
        # rounding bound of the expanded distance, generous by a constant factor
        slack = 4.0 * (d + 8) * _EPS
        step = max(1, _CHUNK_CELLS // n)
        for lo in range(0, Q.shape[0], step):
            hi = min(lo + step, Q.shape[0])
            G = Q[lo:hi] @ self.points.T
            offsets, cand = _screen(G, qnorms[lo:hi], self._norms, exclude[lo:hi], k, slack, self._max_norm)
            for r in range(hi - lo):
                c = cand[offsets[r]:offsets[r + 1]]
                out[lo + r] = _rank(c, sq_distances(self.points[c], Q[lo + r]), k)
        return out


def build(points) -> NeighborIndex:
    return NeighborIndex(points)

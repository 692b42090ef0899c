"""Compiled CART (Gini) tree growth and traversal.

Nodes live in flat arrays; ``feature[i] == -1`` marks a leaf. Samples go left
when ``x[feature] <= threshold``. Feature sampling uses a SplitMix64 stream
seeded per tree, so the grown tree depends only on (data, params, seed).
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def _next(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _randbelow(state, bound):
    u = (_next(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)
    r = int(u * bound)
    return r if r < bound else bound - 1


@njit(cache=True, nogil=True)
def grow(X, y, min_samples_split, min_samples_leaf, max_features, seed):
    n, d = X.shape
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    count0 = np.zeros(cap, dtype=np.int64)
    count1 = np.zeros(cap, dtype=np.int64)

    state = np.empty(1, dtype=np.uint64)
    state[0] = np.uint64(seed)
    idx = np.arange(n)
    feats = np.arange(d)
    vals = np.empty(n, dtype=np.float64)
    labs = np.empty(n, dtype=np.int64)

    # stack of (node, start, end)
    stack = np.empty((cap, 3), dtype=np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        m = end - start
        c1 = 0
        for t in range(start, end):
            c1 += y[idx[t]]
        c0 = m - c1
        count0[node] = c0
        count1[node] = c1
        if c0 == 0 or c1 == 0 or m < min_samples_split or m < 2 * min_samples_leaf:
            continue

        best_score = np.inf
        best_f = -1
        best_thr = 0.0
        visited = 0
        # partial Fisher-Yates: position j draws from feats[j:]
        for j in range(d):
            if visited >= max_features:
                break
            if max_features < d:
                r = j + _randbelow(state, d - j)
                tmp = feats[j]
                feats[j] = feats[r]
                feats[r] = tmp
                f = feats[j]
            else:
                f = j
            for t in range(m):
                vals[t] = X[idx[start + t], f]
            order = np.argsort(vals[:m], kind="mergesort")
            lo_v = vals[order[0]]
            hi_v = vals[order[m - 1]]
            if lo_v == hi_v:
                continue
            visited += 1
            for t in range(m):
                labs[t] = y[idx[start + order[t]]]
            l1 = 0
            for t in range(m - 1):
                l1 += labs[t]
                nl = t + 1
                nr = m - nl
                if nl < min_samples_leaf:
                    continue
                if nr < min_samples_leaf:
                    break
                a = vals[order[t]]
                b = vals[order[t + 1]]
                if a == b:
                    continue
                l0 = nl - l1
                r1 = c1 - l1
                r0 = nr - r1
                # n_l*gini_l + n_r*gini_r, dropped constant m
                score = -(l0 * l0 + l1 * l1) / nl - (r0 * r0 + r1 * r1) / nr
                if score < best_score:
                    best_score = score
                    best_f = f
                    thr = 0.5 * (a + b)
                    if thr >= b:
                        thr = a
                    best_thr = thr

        if best_f < 0:
            continue

        # partition idx[start:end] in place
        i = start
        k = end - 1
        while i <= k:
            if X[idx[i], best_f] <= best_thr:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[k]
                idx[k] = tmp
                k -= 1
        feature[node] = best_f
        threshold[node] = best_thr
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode
        # right first so the left subtree is expanded first
        stack[top, 0] = rnode
        stack[top, 1] = i
        stack[top, 2] = end
        top += 1
        stack[top, 0] = lnode
        stack[top, 1] = start
        stack[top, 2] = i
        top += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        count0[:n_nodes].copy(),
        count1[:n_nodes].copy(),
    )


@njit(cache=True, nogil=True)
def apply(X, feature, threshold, left, right):
    """Leaf index reached by every row of ``X``."""
    out = np.empty(X.shape[0], dtype=np.int64)
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out

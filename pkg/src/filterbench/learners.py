"""Classifiers for measuring predictive performance.

Gaussian naive Bayes and a random forest of unpruned CART trees.  Tree
induction and prediction are compiled with numba; each tree draws its
bootstrap sample from the pinned PCG64 generator and its per-node feature
subsets from a splitmix64 stream, both seeded from :func:`derive_seed`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numba import njit
from scipy.special import expit

from .core import LabeledDataset, derive_seed, make_rng
from .errors import SingleClass

VARIANCE_FLOOR = 1e-9


# --------------------------------------------------------------------------
# Gaussian naive Bayes
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NbModel:
    prior: np.ndarray      # (2,)
    mean: np.ndarray       # (2, p)
    var: np.ndarray        # (2, p)


def nb_fit(train: LabeledDataset | tuple) -> NbModel:
    X, y = _xy(train)
    if np.unique(y).size < 2:
        raise SingleClass("naive Bayes needs both classes in the training data")
    prior = np.array([(y == 0).mean(), (y == 1).mean()])
    mean = np.zeros((2, X.shape[1]))
    var = np.zeros((2, X.shape[1]))
    for c in (0, 1):
        Xc = X[y == c]
        mean[c] = Xc.mean(axis=0)
        if Xc.shape[0] > 1:
            var[c] = Xc.var(axis=0, ddof=1)
    return NbModel(prior, mean, np.maximum(var, VARIANCE_FLOOR))


def nb_log_joint(model: NbModel, features) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    out = np.empty((X.shape[0], 2))
    for c in (0, 1):
        ll = -0.5 * (np.log(2.0 * np.pi * model.var[c]) + (X - model.mean[c]) ** 2 / model.var[c])
        out[:, c] = np.log(model.prior[c]) + ll.sum(axis=1)
    return out


def nb_score(model: NbModel, features) -> np.ndarray:
    """Posterior probability of class 1."""
    lj = nb_log_joint(model, features)
    return expit(lj[:, 1] - lj[:, 0])


def _xy(data):
    if isinstance(data, LabeledDataset):
        return data.features, data.labels.astype(np.int64)
    X, y = data
    return np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.int64)


# --------------------------------------------------------------------------
# CART forest kernels
# --------------------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def _splitmix_next(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _rand_below(state, m):
    # 53 random bits scaled to [0, m)
    u = (_splitmix_next(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)
    r = int(u * m)
    return r if r < m else m - 1


@njit(cache=True)
def _gini(c0, c1):
    t = c0 + c1
    if t <= 0:
        return 0.0
    a = c0 / t
    b = c1 / t
    return 1.0 - a * a - b * b


@njit(cache=True)
def _grow_tree(X, y, rows, mtry, seed, feature, threshold, left, right, cnt0, cnt1, importance):
    """Grow one tree into the preallocated node arrays; returns the node count."""
    n_rows = rows.size
    p = X.shape[1]
    idx = rows.copy()
    buf = np.empty(n_rows, dtype=np.int64)
    state = np.empty(1, dtype=np.uint64)
    state[0] = np.uint64(seed)
    feats = np.arange(p)

    stack_node = np.empty(n_rows * 2 + 2, dtype=np.int64)
    stack_lo = np.empty(n_rows * 2 + 2, dtype=np.int64)
    stack_hi = np.empty(n_rows * 2 + 2, dtype=np.int64)
    top = 0
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n_rows
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        c0 = 0.0
        c1 = 0.0
        for i in range(lo, hi):
            if y[idx[i]] == 1:
                c1 += 1.0
            else:
                c0 += 1.0
        cnt0[node] = c0
        cnt1[node] = c1
        feature[node] = -1
        m = hi - lo
        if c0 == 0.0 or c1 == 0.0 or m < 2 or p == 0:
            continue

        # partial Fisher-Yates: the first mtry entries become the candidates
        for i in range(mtry):
            j = i + _rand_below(state, p - i)
            tmp = feats[i]
            feats[i] = feats[j]
            feats[j] = tmp
        cand = np.sort(feats[:mtry].copy())

        parent = _gini(c0, c1)
        best_gain = -1.0
        best_f = -1
        best_thr = 0.0
        vals = np.empty(m)
        labs = np.empty(m, dtype=np.int64)
        for fi in range(mtry):
            f = cand[fi]
            for i in range(m):
                vals[i] = X[idx[lo + i], f]
            order = np.argsort(vals, kind="mergesort")
            for i in range(m):
                labs[i] = y[idx[lo + order[i]]]
            l0 = 0.0
            l1 = 0.0
            for i in range(m - 1):
                if labs[i] == 1:
                    l1 += 1.0
                else:
                    l0 += 1.0
                a = vals[order[i]]
                b = vals[order[i + 1]]
                if a < b:
                    nl = l0 + l1
                    nr = m - nl
                    gain = parent - (nl / m) * _gini(l0, l1) - (nr / m) * _gini(c0 - l0, c1 - l1)
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        thr = 0.5 * (a + b)
                        if not (thr > a and thr < b):
                            thr = a
                        best_thr = thr
        if best_f < 0:
            continue

        nl = 0
        nr = 0
        for i in range(lo, hi):
            r = idx[i]
            if X[r, best_f] <= best_thr:
                idx[lo + nl] = r
                nl += 1
            else:
                buf[nr] = r
                nr += 1
        for i in range(nr):
            idx[lo + nl + i] = buf[i]

        l0 = 0.0
        l1 = 0.0
        for i in range(lo, lo + nl):
            if y[idx[i]] == 1:
                l1 += 1.0
            else:
                l0 += 1.0
        importance[best_f] += m * parent - nl * _gini(l0, l1) - nr * _gini(c0 - l0, c1 - l1)

        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        # right child pushed first so the left subtree is grown first
        stack_node[top] = n_nodes + 1
        stack_lo[top] = lo + nl
        stack_hi[top] = hi
        top += 1
        stack_node[top] = n_nodes
        stack_lo[top] = lo
        stack_hi[top] = lo + nl
        top += 1
        n_nodes += 2
    return n_nodes


@njit(cache=True)
def _leaf_of(feature, threshold, left, right, root, x):
    node = root
    while feature[node] >= 0:
        if x[feature[node]] <= threshold[node]:
            node = left[node]
        else:
            node = right[node]
    return node


@njit(cache=True)
def _forest_votes(feature, threshold, left, right, cnt0, cnt1, roots, X):
    n = X.shape[0]
    T = roots.size
    votes = np.zeros(n)
    for t in range(T):
        for i in range(n):
            leaf = _leaf_of(feature, threshold, left, right, roots[t], X[i])
            if cnt1[leaf] > cnt0[leaf]:
                votes[i] += 1.0
    return votes


@njit(cache=True)
def _auc_kernel(s, y):
    n = s.size
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(n)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and s[order[j + 1]] == s[order[i]]:
            j += 1
        r = 0.5 * (i + j) + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = r
        i = j + 1
    n1 = 0.0
    rs = 0.0
    for k in range(n):
        if y[k] == 1:
            n1 += 1.0
            rs += ranks[k]
    n0 = n - n1
    if n1 == 0.0 or n0 == 0.0:
        return -1.0
    return (rs - n1 * (n1 + 1.0) / 2.0) / (n1 * n0)


@njit(cache=True)
def _permutation_importance(feature, threshold, left, right, cnt0, cnt1, roots, oob_ptr, oob_rows,
                            X, y, seeds):
    """Mean over trees of the drop in per-tree OOB AUC after permuting a feature."""
    p = X.shape[1]
    T = roots.size
    total = np.zeros(p)
    used_trees = 0
    for t in range(T):
        rows = oob_rows[oob_ptr[t]:oob_ptr[t + 1]]
        m = rows.size
        if m < 2:
            continue
        yy = np.empty(m, dtype=np.int64)
        base = np.empty(m)
        for i in range(m):
            yy[i] = y[rows[i]]
            leaf = _leaf_of(feature, threshold, left, right, roots[t], X[rows[i]])
            base[i] = cnt1[leaf] / (cnt0[leaf] + cnt1[leaf])
        a0 = _auc_kernel(base, yy)
        if a0 < 0:
            continue
        used_trees += 1
        end = roots[t + 1] if t + 1 < T else feature.size
        used = np.zeros(p, dtype=np.bool_)
        for nd in range(roots[t], end):
            if feature[nd] >= 0:
                used[feature[nd]] = True
        state = np.empty(1, dtype=np.uint64)
        state[0] = np.uint64(seeds[t])
        row = np.empty(X.shape[1])
        perm = np.arange(m)
        scores = np.empty(m)
        for f in range(p):
            if not used[f]:
                continue
            for i in range(m):
                perm[i] = i
            for i in range(m - 1, 0, -1):
                j = _rand_below(state, i + 1)
                tmp = perm[i]
                perm[i] = perm[j]
                perm[j] = tmp
            for i in range(m):
                for jj in range(X.shape[1]):
                    row[jj] = X[rows[i], jj]
                row[f] = X[rows[perm[i]], f]
                leaf = _leaf_of(feature, threshold, left, right, roots[t], row)
                scores[i] = cnt1[leaf] / (cnt0[leaf] + cnt1[leaf])
            total[f] += a0 - _auc_kernel(scores, yy)
    if used_trees > 0:
        total /= used_trees
    return total


# --------------------------------------------------------------------------
# Forest API
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ForestParams:
    trees: int = 500
    mtry: int | None = None  # None = ceil(sqrt(p))
    bootstrap: bool = True

    def resolved_mtry(self, p: int) -> int:
        if p == 0:
            return 0
        m = self.mtry if self.mtry is not None else math.ceil(math.sqrt(p))
        return max(1, min(int(m), p))


class ImportanceKind(str, Enum):
    IMPURITY = "impurity"
    PERMUTATION = "permutation"


@dataclass(frozen=True, eq=False)
class ForestModel:
    """Concatenated node arrays of all trees; ``roots[t]`` is tree t's first node."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    cnt0: np.ndarray
    cnt1: np.ndarray
    roots: np.ndarray
    oob_ptr: np.ndarray
    oob_rows: np.ndarray
    tree_seeds: np.ndarray
    impurity_decrease: np.ndarray
    params: ForestParams
    n_train: int

    @property
    def n_trees(self) -> int:
        return self.roots.size

    def oob_indices(self, t: int) -> np.ndarray:
        return self.oob_rows[self.oob_ptr[t]:self.oob_ptr[t + 1]]


def forest_fit(train, params: ForestParams = ForestParams(), seed: int = 0) -> ForestModel:
    X, y = _xy(train)
    X = np.ascontiguousarray(X)
    if np.unique(y).size < 2:
        raise SingleClass("forest needs both classes in the training data")
    n, p = X.shape
    mtry = params.resolved_mtry(p)
    T = params.trees
    cap = 2 * n + 1
    feature = np.full(T * cap, -1, dtype=np.int64)
    threshold = np.zeros(T * cap)
    left = np.full(T * cap, -1, dtype=np.int64)
    right = np.full(T * cap, -1, dtype=np.int64)
    cnt0 = np.zeros(T * cap)
    cnt1 = np.zeros(T * cap)
    importance = np.zeros(p)
    roots = np.zeros(T, dtype=np.int64)
    seeds = np.zeros(T, dtype=np.uint64)
    oob_parts = []
    used = 0
    for t in range(T):
        tseed = derive_seed(seed, ["tree", t])
        seeds[t] = np.uint64(tseed)
        if params.bootstrap:
            rows = make_rng(tseed).integers(0, n, size=n)
            in_bag = np.zeros(n, dtype=bool)
            in_bag[rows] = True
            oob_parts.append(np.flatnonzero(~in_bag))
        else:
            rows = np.arange(n)
            oob_parts.append(np.zeros(0, dtype=np.int64))
        sl = slice(used, used + cap)
        k = _grow_tree(X, y, rows.astype(np.int64), mtry, np.uint64(tseed), feature[sl], threshold[sl],
                       left[sl], right[sl], cnt0[sl], cnt1[sl], importance)
        # child pointers are tree-local until shifted here
        lt = left[used:used + k]
        rt = right[used:used + k]
        lt[lt >= 0] += used
        rt[rt >= 0] += used
        roots[t] = used
        used += k
    oob_ptr = np.zeros(T + 1, dtype=np.int64)
    oob_ptr[1:] = np.cumsum([o.size for o in oob_parts])
    oob_rows = np.concatenate(oob_parts).astype(np.int64) if oob_parts else np.zeros(0, np.int64)
    trim = slice(0, used)
    return ForestModel(
        feature[trim].copy(), threshold[trim].copy(), left[trim].copy(), right[trim].copy(),
        cnt0[trim].copy(), cnt1[trim].copy(), roots, oob_ptr, oob_rows, seeds,
        importance / (T * n), params, n,
    )


def forest_score(model: ForestModel, features) -> np.ndarray:
    """Fraction of trees voting for class 1."""
    X = np.ascontiguousarray(np.asarray(features, dtype=np.float64))
    votes = _forest_votes(model.feature, model.threshold, model.left, model.right,
                          model.cnt0, model.cnt1, model.roots, X)
    return votes / model.n_trees


def forest_importance(model: ForestModel, train, kind: ImportanceKind) -> np.ndarray:
    """Impurity: mean total Gini decrease per tree (per training row).
    Permutation: mean per-tree drop in out-of-bag AUC."""
    kind = ImportanceKind(kind)
    if kind is ImportanceKind.IMPURITY:
        return model.impurity_decrease.copy()
    X, y = _xy(train)
    X = np.ascontiguousarray(X)
    perm_seeds = np.array([derive_seed(int(s), ["permute"]) for s in model.tree_seeds],
                          dtype=np.uint64)
    return _permutation_importance(model.feature, model.threshold, model.left, model.right,
                                   model.cnt0, model.cnt1, model.roots, model.oob_ptr,
                                   model.oob_rows, X, y, perm_seeds)

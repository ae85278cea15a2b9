"""Independent brute-force reference implementations used by the tests.

Written for clarity with plain loops and dictionaries; none of them import
the code under test except for plain data containers.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter

import numpy as np


# --------------------------------------------------------------------------
# AUC
# --------------------------------------------------------------------------

def auc_pairs(scores, labels) -> float:
    """P(s+ > s-) + 0.5 P(s+ == s-) by counting every positive/negative pair."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = 0.0
    for a in pos:
        for b in neg:
            if a > b:
                wins += 1.0
            elif a == b:
                wins += 0.5
    return wins / (len(pos) * len(neg))


# --------------------------------------------------------------------------
# Entropy and mutual information from raw symbol sequences
# --------------------------------------------------------------------------

def H(*columns) -> float:
    """Plug-in joint entropy (bits) of one or more aligned symbol sequences."""
    rows = list(zip(*columns))
    n = len(rows)
    total = 0.0
    for c in Counter(rows).values():
        p = c / n
        total -= p * math.log2(p)
    return total


def I(x, y) -> float:
    return H(x) + H(y) - H(x, y)


def I_joint(x, z, y) -> float:
    """I(X, Z; Y)."""
    return H(x, z) + H(y) - H(x, z, y)


def I_cond(x, y, z) -> float:
    """I(X; Y | Z)."""
    return H(x, z) + H(y, z) - H(x, y, z) - H(z)


def gini_gain_joint(x, z, y) -> float:
    n = len(y)

    def gini(labels):
        c = Counter(labels)
        m = len(labels)
        return 1.0 - sum((v / m) ** 2 for v in c.values())

    groups: dict = {}
    for a, b, t in zip(x, z, y):
        groups.setdefault((a, b), []).append(t)
    return gini(list(y)) - sum(len(g) / n * gini(g) for g in groups.values())


def greedy_oracle(X, y, criterion: str, k: int, tol: float = 1e-9) -> list[int]:
    """Forward selection re-evaluating every objective from raw tables each step."""
    cols = [list(X[:, j]) for j in range(X.shape[1])]
    y = list(y)
    p = len(cols)

    def objective(j, S):
        x = cols[j]
        if not S or criterion == "mim":
            return I(x, y)
        if criterion == "jmi":
            return sum(I_joint(x, cols[s], y) for s in S)
        if criterion == "jmim":
            return min(I_joint(x, cols[s], y) for s in S)
        if criterion == "njmim":
            return min(I_joint(x, cols[s], y) / H(x, cols[s], y) for s in S)
        if criterion == "disr":
            return sum(I_joint(x, cols[s], y) / H(x, cols[s], y) for s in S)
        if criterion == "cmim":
            return min(I_cond(x, y, cols[s]) for s in S)
        if criterion == "mrmr":
            return I(x, y) - sum(I(x, cols[s]) for s in S) / len(S)
        if criterion == "jim":
            return sum(gini_gain_joint(x, cols[s], y) for s in S)
        raise ValueError(criterion)

    S: list[int] = []
    while len(S) < k:
        cand = [j for j in range(p) if j not in S]
        vals = {j: objective(j, S) for j in cand}
        top = max(vals.values())
        S.append(min(j for j in cand if vals[j] >= top - tol))
    return S


# --------------------------------------------------------------------------
# Relief family (direct double loop)
# --------------------------------------------------------------------------

def relief_oracle(X, y, variant: str, k: int = 10, sigma: float = 20.0, sample=None,
                  rel_cost=(1.0, 1.0)) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    lo = X.min(axis=0)
    hi = X.max(axis=0)

    def diff(f, a, b):
        if hi[f] == lo[f]:
            return 0.0
        return abs(X[a, f] - X[b, f]) / (hi[f] - lo[f])

    euclid = variant in ("relief", "relief_kukar")
    kk = 1 if euclid else k

    def dist(a, b):
        ds = [diff(f, a, b) for f in range(p)]
        if euclid:
            return math.sqrt(sum(d * d for d in ds))
        return sum(ds)

    def nearest(i, cls):
        cands = sorted((dist(i, j), j) for j in range(n) if j != i and y[j] == cls)
        return cands[:kk]

    def rank_weights(neigh):
        if variant == "relieff_exp_rank":
            w = [math.exp(-((r + 1) / sigma) ** 2) for r in range(len(neigh))]
        elif variant == "relieff_distance":
            w = [1.0 / max(d, 1e-12) for d, _ in neigh]
        elif variant == "relieff_sqr_distance":
            w = [1.0 / max(d, 1e-12) ** 2 for d, _ in neigh]
        else:
            w = [1.0] * len(neigh)
        s = sum(w)
        return [v / s for v in w]

    def diffs(i, j):
        d = [diff(f, i, j) for f in range(p)]
        if variant == "relieff_merit":
            s = sum(d)
            d = [v / s if s > 0 else 0.0 for v in d]
        return d

    class_factor = rel_cost if variant in ("relieff_exp_c", "relieff_avg_c", "relief_kukar") else (1.0, 1.0)
    inst_factor = rel_cost if variant in ("relieff_pe", "relieff_pa") else (1.0, 1.0)

    if sample is None:
        sample = range(n)
    total = 0.0
    if variant == "relieff_best_k":
        acc = [[0.0] * p for _ in range(kk)]
    else:
        acc = [0.0] * p
    for i in sample:
        c = int(y[i])
        hits = nearest(i, c)
        misses = nearest(i, 1 - c)
        omega = inst_factor[c]
        total += omega
        if variant == "relieff_best_k":
            for m in range(1, kk + 1):
                h = hits[:m]
                ms = misses[:m]
                for f in range(p):
                    mh = sum(diff(f, i, j) for _, j in h) / len(h)
                    mm = sum(diff(f, i, j) for _, j in ms) / len(ms)
                    acc[m - 1][f] += omega * (mm - mh)
            continue
        wh = rank_weights(hits)
        wm = rank_weights(misses)
        for (_, j), w in zip(hits, wh):
            d = diffs(i, j)
            for f in range(p):
                acc[f] -= omega * w * d[f]
        for (_, j), w in zip(misses, wm):
            d = diffs(i, j)
            for f in range(p):
                acc[f] += omega * class_factor[c] * w * d[f]
    if variant == "relieff_best_k":
        return np.array([max(acc[m][f] / total for m in range(kk)) for f in range(p)])
    return np.array(acc) / total


# --------------------------------------------------------------------------
# OLS sandwich
# --------------------------------------------------------------------------

def sandwich_oracle(X, y, hc1: bool = False):
    """beta and HC0/HC1 standard errors with explicit inverses."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    XtX_inv = np.linalg.inv(X.T @ X)
    beta = XtX_inv @ X.T @ y
    e = y - X @ beta
    meat = X.T @ np.diag(e ** 2) @ X
    cov = XtX_inv @ meat @ XtX_inv
    if hc1:
        n, q = X.shape
        cov = cov * n / (n - q)
    return beta, np.sqrt(np.diag(cov))


# --------------------------------------------------------------------------
# Stability and subset searches
# --------------------------------------------------------------------------

def stability_oracle(sets, p: int) -> float:
    m = len(sets)
    h = [sum(1 for s in sets if j in s) for j in range(p)]
    q = sum(h)
    num = sum((m / (m - 1)) * (hj / m) * (1 - hj / m) for hj in h) / p
    kbar = q / (m * p)
    return 1.0 - num / (kbar * (1 - kbar))


def su(x, y) -> float:
    hx, hy = H(x), H(y)
    if hx + hy == 0:
        return 0.0
    return 2.0 * I(x, y) / (hx + hy)


def cfs_merit_oracle(Xd, y, subset) -> float:
    k = len(subset)
    if k == 0:
        return 0.0
    cols = [list(Xd[:, j]) for j in range(Xd.shape[1])]
    rcf = sum(su(cols[j], list(y)) for j in subset)
    rff = sum(su(cols[a], cols[b]) for a, b in itertools.combinations(subset, 2))
    return rcf / math.sqrt(k + 2 * rff)


def consistency_oracle(Xd, y, subset) -> float:
    groups: dict = {}
    for i in range(len(y)):
        key = tuple(Xd[i, j] for j in subset)
        groups.setdefault(key, Counter())[int(y[i])] += 1
    return sum(max(c.values()) for c in groups.values()) / len(y)


def minimal_consistent_subsets(Xd, y) -> list[tuple[int, ...]]:
    """All smallest subsets whose consistency equals the full set's."""
    p = Xd.shape[1]
    target = consistency_oracle(Xd, y, tuple(range(p)))
    for size in range(0, p + 1):
        hits = [s for s in itertools.combinations(range(p), size)
                if abs(consistency_oracle(Xd, y, s) - target) < 1e-12]
        if hits:
            return hits
    return []

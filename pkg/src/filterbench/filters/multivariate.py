"""Multivariate filters: greedy mutual-information selectors, CFS,
consistency-based subset search and random-forest importances."""

from __future__ import annotations

import heapq
import itertools
from enum import Enum

import numpy as np

from ..core import LabeledDataset
from ..errors import KOutOfRange
from ..infotheory import (
    DEFAULT_DISC,
    DiscretizationSpec,
    batched_joint_counts,
    discretize_matrix,
    entropy_rows,
    mi_with_target,
    symmetrical_uncertainty_pairs,
)
from ..learners import ForestParams, ImportanceKind, forest_fit, forest_importance
from .base import FeatureSet, FeatureWeights, select_top_k


class MiCriterion(str, Enum):
    MIM = "mim"
    JMI = "jmi"
    JMIM = "jmim"
    NJMIM = "njmim"
    DISR = "disr"
    CMIM = "cmim"
    MRMR = "mrmr"
    JIM = "jim"


_SUMMED = {MiCriterion.JMI, MiCriterion.DISR, MiCriterion.JIM, MiCriterion.MRMR}

# scores within this distance of the maximum count as tied (lowest index wins),
# so rounding differences between equal information terms cannot flip a pick
TIE_TOLERANCE = 1e-12


def tie_argmax(values: np.ndarray, tol: float = TIE_TOLERANCE) -> int:
    top = values.max()
    return int(np.flatnonzero(values >= top - tol)[0])


def _pair_terms(criterion: MiCriterion, Xd, y, s: int, bins: int, hy: float, mi_y: np.ndarray,
                gini_y: float) -> np.ndarray:
    """The per-candidate term each criterion accumulates for selected feature ``s``."""
    n, p = Xd.shape
    if criterion is MiCriterion.MRMR:
        joint = batched_joint_counts(Xd, Xd[:, s], bins, bins)
        hx = entropy_rows(joint.sum(axis=2))
        hs = entropy_rows(joint[:1].sum(axis=1))[0]
        return np.maximum(hx + hs - entropy_rows(joint), 0.0)

    # joint variable (X, X_s) coded as X * bins + X_s, crossed with Y
    pair = Xd * bins + Xd[:, s][:, None]
    joint = batched_joint_counts(pair, y, bins * bins, 2)      # (p, bins^2, 2)
    h_pair = entropy_rows(joint.sum(axis=2))
    h_pair_y = entropy_rows(joint)
    i_pair_y = np.maximum(h_pair + hy - h_pair_y, 0.0)          # I(X, X_s; Y)

    if criterion in (MiCriterion.JMI, MiCriterion.JMIM):
        return i_pair_y
    if criterion in (MiCriterion.DISR, MiCriterion.NJMIM):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(h_pair_y > 0, i_pair_y / np.where(h_pair_y > 0, h_pair_y, 1.0), 0.0)
    if criterion is MiCriterion.CMIM:
        # I(X; Y | X_s) = I(X, X_s; Y) - I(X_s; Y)
        return np.maximum(i_pair_y - mi_y[s], 0.0)
    if criterion is MiCriterion.JIM:
        cells = joint.sum(axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            P = np.where(cells[..., None] > 0, joint / np.where(cells > 0, cells, 1.0)[..., None], 0.0)
        child = 1.0 - (P * P).sum(axis=2)
        return gini_y - (cells / n * child).sum(axis=1)
    raise ValueError(criterion)


def greedy_mi_select(ds: LabeledDataset, criterion: MiCriterion, k: int,
                     disc: DiscretizationSpec = DEFAULT_DISC) -> FeatureSet:
    """Forward selection of ``k`` features; the first pick is always argmax I(X; Y)."""
    criterion = MiCriterion(criterion)
    p = ds.p
    if not 1 <= k <= p:
        raise KOutOfRange(f"k={k} outside [1, {p}]")
    bins = disc.bins
    Xd = discretize_matrix(ds.features, disc)
    y = ds.labels.astype(np.int64)
    mi_y = mi_with_target(Xd, y, bins)
    py = np.bincount(y, minlength=2) / y.size
    hy = float(-(py[py > 0] * np.log2(py[py > 0])).sum())
    gini_y = float(1.0 - (py * py).sum())

    available = np.ones(p, dtype=bool)
    selected: list[int] = []
    scores: list[float] = []

    def take(objective):
        best = tie_argmax(np.where(available, objective, -np.inf))
        selected.append(best)
        scores.append(float(objective[best]))
        available[best] = False

    # the first pick, and every MIM pick, is the exact top-k ranking of I(X; Y)
    if criterion is MiCriterion.MIM:
        return select_top_k(FeatureWeights(criterion.value, mi_y), k)
    first = int(np.argmax(mi_y))
    selected.append(first)
    scores.append(float(mi_y[first]))
    available[first] = False

    acc = np.zeros(p) if criterion in _SUMMED else np.full(p, np.inf)
    while len(selected) < k:
        term = _pair_terms(criterion, Xd, y, selected[-1], bins, hy, mi_y, gini_y)
        if criterion in _SUMMED:
            acc += term
        else:
            acc = np.minimum(acc, term)
        if criterion is MiCriterion.MRMR:
            take(mi_y - acc / len(selected))
        else:
            take(acc)
    return FeatureSet(tuple(selected), tuple(scores), criterion.value)


# --------------------------------------------------------------------------
# Best-first subset search
# --------------------------------------------------------------------------

def _best_first(p: int, merit, max_stale: int = 5) -> tuple[tuple[int, ...], float]:
    """Forward best-first search over subsets of range(p).

    The open list is ordered by (merit desc, size asc, lexicographic); the
    search stops after ``max_stale`` consecutive expansions that fail to beat
    the best merit so far.  Returns the best subset seen, preferring the
    smaller one on equal merit.
    """
    start: tuple[int, ...] = ()
    best, best_merit = start, merit(start, None, None)
    open_heap = [(-best_merit, 0, start)]
    visited = {start}
    stale = 0
    while open_heap and stale < max_stale:
        _, _, subset = heapq.heappop(open_heap)
        improved = False
        members = set(subset)
        for f in range(p):
            if f in members:
                continue
            child = tuple(sorted(subset + (f,)))
            if child in visited:
                continue
            visited.add(child)
            m = merit(child, subset, f)
            heapq.heappush(open_heap, (-m, len(child), child))
            if m > best_merit or (m == best_merit and len(child) < len(best)):
                if m > best_merit:
                    improved = True
                best, best_merit = child, m
        stale = 0 if improved else stale + 1
    return best, best_merit


class _SuCache:
    """Lazily computed symmetrical uncertainties between features and the label."""

    def __init__(self, Xd, y, bins):
        self.Xd = Xd
        self.bins = bins
        self.su_y = symmetrical_uncertainty_pairs(Xd, y, bins, 2)
        self._cols: dict[int, np.ndarray] = {}

    def ff(self, s: int) -> np.ndarray:
        col = self._cols.get(s)
        if col is None:
            col = symmetrical_uncertainty_pairs(self.Xd, self.Xd[:, s], self.bins, self.bins)
            self._cols[s] = col
        return col


def cfs_merit(subset, su_y: np.ndarray, su_ff) -> float:
    """k * mean r_cf / sqrt(k + k (k - 1) * mean r_ff); 0 for the empty set."""
    k = len(subset)
    if k == 0:
        return 0.0
    rcf = float(sum(su_y[f] for f in subset))
    rff = 0.0
    for a, b in itertools.combinations(subset, 2):
        rff += float(su_ff(a)[b])
    denom = k + 2.0 * rff
    return rcf / np.sqrt(denom) if denom > 0 else 0.0


def cfs_select(ds: LabeledDataset, disc: DiscretizationSpec = DEFAULT_DISC,
               max_stale: int = 5) -> FeatureSet:
    """Correlation-based feature subset selection with best-first search."""
    Xd = discretize_matrix(ds.features, disc)
    cache = _SuCache(Xd, ds.labels.astype(np.int64), disc.bins)
    sums: dict[tuple, tuple[float, float]] = {(): (0.0, 0.0)}

    def merit(subset, parent, added):
        # running (sum r_cf, sum over pairs r_ff), extended from the parent
        if parent is None or parent not in sums:
            rcf = float(sum(cache.su_y[f] for f in subset))
            rff = sum(float(cache.ff(a)[b]) for a, b in itertools.combinations(subset, 2))
        else:
            prcf, prff = sums[parent]
            rcf = prcf + float(cache.su_y[added])
            col = cache.ff(added)
            rff = prff + float(sum(col[s] for s in parent))
        sums[subset] = (rcf, rff)
        k = len(subset)
        denom = k + 2.0 * rff
        return rcf / np.sqrt(denom) if denom > 0 else 0.0

    best, m = _best_first(ds.p, merit, max_stale)
    return FeatureSet(best, (m,) * len(best), "cfs")


def consistency_rate(Xd_subset: np.ndarray, y: np.ndarray) -> float:
    """1 - inconsistency: share of instances agreeing with their pattern's majority class."""
    n = y.size
    if Xd_subset.shape[1] == 0:
        counts = np.bincount(y, minlength=2)
        return counts.max() / n
    _, group = np.unique(Xd_subset, axis=0, return_inverse=True)
    group = group.ravel()
    table = np.zeros((group.max() + 1, 2), dtype=np.int64)
    np.add.at(table, (group, y), 1)
    return table.max(axis=1).sum() / n


def consistency_select(ds: LabeledDataset, disc: DiscretizationSpec = DEFAULT_DISC,
                       max_stale: int = 5) -> FeatureSet:
    """Best-first search for the most consistent subset; the smallest wins among equals."""
    Xd = discretize_matrix(ds.features, disc)
    y = ds.labels.astype(np.int64)

    def merit(subset, parent=None, added=None):
        return consistency_rate(Xd[:, list(subset)], y)

    best, m = _best_first(ds.p, merit, max_stale)
    return FeatureSet(best, (m,) * len(best), "consistency")


# --------------------------------------------------------------------------
# Random forest importances
# --------------------------------------------------------------------------

def rf_importance(ds: LabeledDataset, kind: ImportanceKind, trees: int = 500,
                  seed: int = 0, mtry: int | None = None) -> FeatureWeights:
    kind = ImportanceKind(kind)
    model = forest_fit(ds, ForestParams(trees=trees, mtry=mtry), seed)
    w = forest_importance(model, ds, kind)
    return FeatureWeights(f"rf_{kind.value}", w + 0.0)

"""Per-feature scoring filters.

Split-based measures treat every discretization bin as one branch of a
multiway split and compare the class distribution before and after the
split.  ``Equal*`` variants weight occupied branches equally instead of by
branch probability; ``Uniform*`` variants reweight the class counts so both
classes carry the same total mass (a uniform class prior).

Several measures (the ``Dist*``/``Impurity*`` families, ``DistAngle`` and the
equal/uniform variants) are only described by name in the package
documentation they come from; the forms implemented here are fixed
reconstructions, documented per function and frozen by golden tests.
"""

from __future__ import annotations

from enum import Enum

import numpy as np
from scipy.special import gammaln
from scipy.stats import rankdata

from ..core import LabeledDataset
from ..infotheory import DEFAULT_DISC, DiscretizationSpec, Strategy, discretize_matrix
from .base import CostMatrix, FeatureWeights, systematic_sample

LN2 = np.log(2.0)


class SplitScoreMethod(str, Enum):
    ACCURACY = "accuracy"
    DIST_ANGLE = "dist_angle"
    DIST_AUC = "dist_auc"
    DIST_EUCLID = "dist_euclid"
    DIST_HELLINGER = "dist_hellinger"
    DKM = "dkm"
    EQUAL_DKM = "equal_dkm"
    EQUAL_GINI = "equal_gini"
    EQUAL_HELLINGER = "equal_hellinger"
    EQUAL_INF = "equal_inf"
    GAIN_RATIO = "gain_ratio"
    GINI = "gini"
    IMPURITY_EUCLID = "impurity_euclid"
    IMPURITY_HELLINGER = "impurity_hellinger"
    INF_GAIN = "inf_gain"
    MDL = "mdl"
    MYOPIC_RELIEFF = "myopic_relieff"
    UNIFORM_ACCURACY = "uniform_accuracy"
    UNIFORM_DKM = "uniform_dkm"
    UNIFORM_GINI = "uniform_gini"
    UNIFORM_INF = "uniform_inf"


class StatScoreMethod(str, Enum):
    CHI_SQUARED = "chi_squared"
    ANOVA_F = "anova_f"
    KRUSKAL_WALLIS = "kruskal_wallis"
    PER_FEATURE_AUC = "per_feature_auc"
    SYMMETRICAL_UNCERTAINTY = "symmetrical_uncertainty"
    ONE_R = "one_r"
    GAIN_RATIO_ALT = "gain_ratio_alt"


class CostSensitiveMethod(str, Enum):
    DKM_COST = "dkm_cost"
    GAIN_RATIO_COST = "gain_ratio_cost"
    MDL_SMP = "mdl_smp"


# discretizer used to emulate the second gain-ratio implementation
ALT_GAIN_RATIO_DISC = DiscretizationSpec(Strategy.EQUAL_WIDTH, 10)


# --------------------------------------------------------------------------
# Impurity functions on class-probability arrays (last axis = class)
# --------------------------------------------------------------------------

def _xlog2x(p):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)


def _imp_entropy(P):
    return -_xlog2x(P).sum(axis=-1)


def _imp_gini(P):
    return 1.0 - (P * P).sum(axis=-1)


def _imp_dkm(P):
    return 2.0 * np.sqrt(P[..., 0] * P[..., 1])


def _imp_misclass(P):
    return 1.0 - P.max(axis=-1)


def _imp_euclid(P):
    # Euclidean distance to the nearest pure class distribution
    top = P.max(axis=-1)
    return np.sqrt((1.0 - top) ** 2 + (P * P).sum(axis=-1) - top * top)


def _imp_hellinger(P):
    # Hellinger distance to the nearest pure class distribution
    return np.sqrt(np.maximum(1.0 - np.sqrt(P.max(axis=-1)), 0.0))


# --------------------------------------------------------------------------
# Count tables
# --------------------------------------------------------------------------

def class_counts(Xd: np.ndarray, y: np.ndarray, bins: int) -> np.ndarray:
    """Float counts of shape (p, bins, 2): rows = branch, columns = class."""
    n, p = Xd.shape
    cell = Xd * 2 + np.asarray(y, dtype=np.int64)[:, None]
    cell = cell + (np.arange(p, dtype=np.int64) * (bins * 2))[None, :]
    return np.bincount(cell.ravel(), minlength=p * bins * 2).reshape(p, bins, 2).astype(np.float64)


def _branch_probs(C):
    nv = C.sum(axis=2)
    n = nv.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        Pv = np.where(nv[..., None] > 0, C / np.where(nv > 0, nv, 1.0)[..., None], 0.0)
    prior = C.sum(axis=1) / n[:, None]
    return nv, n, Pv, prior


def _impurity_gain(C, imp, equal=False):
    nv, n, Pv, prior = _branch_probs(C)
    occupied = nv > 0
    if equal:
        w = occupied / occupied.sum(axis=1, keepdims=True)
    else:
        w = nv / n[:, None]
    child = np.where(occupied, imp(Pv), 0.0)
    return imp(prior) - (w * child).sum(axis=1)


def _uniform_prior(C):
    totals = C.sum(axis=1, keepdims=True)  # (p, 1, 2)
    grand = totals.sum(axis=2, keepdims=True)
    return C * (grand / 2.0) / totals


def _pairwise(C, dist, equal=False):
    """Weighted mean of ``dist`` over unordered pairs of occupied branches."""
    nv, n, Pv, _ = _branch_probs(C)
    occupied = nv > 0
    pv = nv / n[:, None]
    B = C.shape[1]
    upper = np.triu(np.ones((B, B), dtype=bool), k=1)
    mask = occupied[:, :, None] & occupied[:, None, :] & upper[None]
    if equal:
        W = mask.astype(np.float64)
    else:
        W = np.where(mask, pv[:, :, None] * pv[:, None, :], 0.0)
    D = dist(C, Pv)
    tot = W.sum(axis=(1, 2))
    num = (W * np.where(mask, D, 0.0)).sum(axis=(1, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(tot > 0, num / np.where(tot > 0, tot, 1.0), 0.0)


def _d_euclid(C, Pv):
    diff = Pv[:, :, None, :] - Pv[:, None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def _d_hellinger(C, Pv):
    S = np.sqrt(Pv)
    diff = S[:, :, None, :] - S[:, None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1) / 2.0)


def _d_angle(C, Pv):
    dot = (Pv[:, :, None, :] * Pv[:, None, :, :]).sum(axis=-1)
    norm = np.sqrt((Pv * Pv).sum(axis=-1))
    denom = norm[:, :, None] * norm[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.where(denom > 0, dot / np.where(denom > 0, denom, 1.0), 1.0)
    return np.clip(1.0 - cos, 0.0, 1.0)


def _d_auc(C, Pv):
    # |TPR - FPR| of "branch v vs branch w" inside the two-branch subpopulation,
    # i.e. twice the distance of that split's AUC from 0.5
    c0, c1 = C[..., 0], C[..., 1]
    s1 = c1[:, :, None] + c1[:, None, :]
    s0 = c0[:, :, None] + c0[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        tpr = c1[:, :, None] / np.where(s1 > 0, s1, 1.0)
        fpr = c0[:, :, None] / np.where(s0 > 0, s0, 1.0)
    return np.where((s1 > 0) & (s0 > 0), np.abs(tpr - fpr), 0.0)


def _log2_multinomial(total, parts):
    return (gammaln(total + 1.0) - gammaln(parts + 1.0).sum(axis=-1)) / LN2


def _mdl(C):
    """Kononenko's MDL gain per instance (two classes)."""
    nv = C.sum(axis=2)
    n = nv.sum(axis=1)
    classes = C.sum(axis=1)
    n_classes = C.shape[2]
    prior = _log2_multinomial(n, classes) + _log2_multinomial(
        n + n_classes - 1, np.stack([n, np.full_like(n, n_classes - 1)], axis=-1))
    post_branch = _log2_multinomial(nv, C) + _log2_multinomial(
        nv + n_classes - 1, np.stack([nv, np.full_like(nv, n_classes - 1)], axis=-1))
    return (prior - post_branch.sum(axis=1)) / n


def _myopic_relieff(C):
    nv, n, Pv, prior = _branch_probs(C)
    pv = nv / n[:, None]
    sum_pv2 = (pv * pv).sum(axis=1)
    sum_pc2 = (prior * prior).sum(axis=1)
    gini_prime = ((pv * pv) / sum_pv2[:, None] * (Pv * Pv).sum(axis=2)).sum(axis=1) - sum_pc2
    return sum_pv2 * gini_prime / (sum_pc2 * (1.0 - sum_pc2))


def _branch_entropy(C):
    nv = C.sum(axis=2)
    P = nv / nv.sum(axis=1, keepdims=True)
    return -_xlog2x(P).sum(axis=1)


def _gain_ratio(C):
    gain = _impurity_gain(C, _imp_entropy)
    hx = _branch_entropy(C)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(hx > 0, gain / np.where(hx > 0, hx, 1.0), 0.0)


_SPLIT = {
    SplitScoreMethod.ACCURACY: lambda C: _impurity_gain(C, _imp_misclass),
    SplitScoreMethod.DIST_ANGLE: lambda C: _pairwise(C, _d_angle),
    SplitScoreMethod.DIST_AUC: lambda C: _pairwise(C, _d_auc),
    SplitScoreMethod.DIST_EUCLID: lambda C: _pairwise(C, _d_euclid),
    SplitScoreMethod.DIST_HELLINGER: lambda C: _pairwise(C, _d_hellinger),
    SplitScoreMethod.DKM: lambda C: _impurity_gain(C, _imp_dkm),
    SplitScoreMethod.EQUAL_DKM: lambda C: _impurity_gain(C, _imp_dkm, equal=True),
    SplitScoreMethod.EQUAL_GINI: lambda C: _impurity_gain(C, _imp_gini, equal=True),
    SplitScoreMethod.EQUAL_HELLINGER: lambda C: _pairwise(C, _d_hellinger, equal=True),
    SplitScoreMethod.EQUAL_INF: lambda C: _impurity_gain(C, _imp_entropy, equal=True),
    SplitScoreMethod.GAIN_RATIO: _gain_ratio,
    SplitScoreMethod.GINI: lambda C: _impurity_gain(C, _imp_gini),
    SplitScoreMethod.IMPURITY_EUCLID: lambda C: _impurity_gain(C, _imp_euclid),
    SplitScoreMethod.IMPURITY_HELLINGER: lambda C: _impurity_gain(C, _imp_hellinger),
    SplitScoreMethod.INF_GAIN: lambda C: _impurity_gain(C, _imp_entropy),
    SplitScoreMethod.MDL: _mdl,
    SplitScoreMethod.MYOPIC_RELIEFF: _myopic_relieff,
    SplitScoreMethod.UNIFORM_ACCURACY: lambda C: _impurity_gain(_uniform_prior(C), _imp_misclass),
    SplitScoreMethod.UNIFORM_DKM: lambda C: _impurity_gain(_uniform_prior(C), _imp_dkm),
    SplitScoreMethod.UNIFORM_GINI: lambda C: _impurity_gain(_uniform_prior(C), _imp_gini),
    SplitScoreMethod.UNIFORM_INF: lambda C: _impurity_gain(_uniform_prior(C), _imp_entropy),
}


def constant_columns(X: np.ndarray) -> np.ndarray:
    return X.max(axis=0) == X.min(axis=0)


def _finish(name, w, X):
    w = np.where(constant_columns(X), 0.0, w)
    # rounding can leave -0.0 or 1e-17 noise on exact-zero gains
    return FeatureWeights(name, w + 0.0)


def score_split_counts(C: np.ndarray, method: SplitScoreMethod) -> np.ndarray:
    """Raw split scores from a (p, branches, 2) count array."""
    return _SPLIT[SplitScoreMethod(method)](np.asarray(C, dtype=np.float64))


def score_split(ds: LabeledDataset, method: SplitScoreMethod,
                disc: DiscretizationSpec = DEFAULT_DISC) -> FeatureWeights:
    method = SplitScoreMethod(method)
    C = class_counts(discretize_matrix(ds.features, disc), ds.labels, disc.bins)
    return _finish(method.value, score_split_counts(C, method), ds.features)


# --------------------------------------------------------------------------
# Statistical scores
# --------------------------------------------------------------------------

def chi_squared_counts(C: np.ndarray) -> np.ndarray:
    nv = C.sum(axis=2)
    n = nv.sum(axis=1)
    cls = C.sum(axis=1)
    E = nv[:, :, None] * cls[:, None, :] / n[:, None, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(E > 0, (C - E) ** 2 / np.where(E > 0, E, 1.0), 0.0)
    return terms.sum(axis=(1, 2))


def anova_f(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """One-way ANOVA F statistic (two groups) per column."""
    n = X.shape[0]
    grand = X.mean(axis=0)
    ssb = np.zeros(X.shape[1])
    ssw = np.zeros(X.shape[1])
    for g in (0, 1):
        Xg = X[y == g]
        mg = Xg.mean(axis=0)
        ssb += Xg.shape[0] * (mg - grand) ** 2
        ssw += ((Xg - mg) ** 2).sum(axis=0)
    sst = ssb + ssw
    # zero within-group spread would give F = inf; floor relative to the total
    ssw = np.maximum(ssw, 1e-12 * sst)
    with np.errstate(divide="ignore", invalid="ignore"):
        F = np.where(ssw > 0, ssb / np.where(ssw > 0, ssw, 1.0) * (n - 2), 0.0)
    return F


def kruskal_wallis(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Kruskal-Wallis H with tie correction, per column."""
    n = X.shape[0]
    R = rankdata(X, axis=0)
    H = np.zeros(X.shape[1])
    for g in (0, 1):
        mask = y == g
        H += R[mask].sum(axis=0) ** 2 / mask.sum()
    H = 12.0 / (n * (n + 1)) * H - 3.0 * (n + 1)
    for j in range(X.shape[1]):
        _, t = np.unique(X[:, j], return_counts=True)
        corr = 1.0 - (t.astype(np.float64) ** 3 - t).sum() / (n ** 3 - n)
        H[j] = H[j] / corr if corr > 0 else 0.0
    return np.maximum(H, 0.0)


def per_feature_auc(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    R = rankdata(X, axis=0)
    pos = y == 1
    n1 = pos.sum()
    n0 = y.size - n1
    a = (R[pos].sum(axis=0) - n1 * (n1 + 1) / 2.0) / (n1 * n0)
    return np.maximum(a, 1.0 - a)


def symmetrical_uncertainty_counts(C: np.ndarray) -> np.ndarray:
    hx = _branch_entropy(C)
    cls = C.sum(axis=1)
    hy = -_xlog2x(cls / cls.sum(axis=1, keepdims=True)).sum(axis=1)
    hxy = -_xlog2x(C / C.sum(axis=(1, 2), keepdims=True)).sum(axis=(1, 2))
    mi = np.maximum(hx + hy - hxy, 0.0)
    denom = hx + hy
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(denom > 0, 2.0 * mi / np.where(denom > 0, denom, 1.0), 0.0)


def one_r_counts(C: np.ndarray) -> np.ndarray:
    return C.max(axis=2).sum(axis=1) / C.sum(axis=(1, 2))


def score_stat(ds: LabeledDataset, method: StatScoreMethod,
               disc: DiscretizationSpec = DEFAULT_DISC) -> FeatureWeights:
    method = StatScoreMethod(method)
    X, y = ds.features, ds.labels
    if method is StatScoreMethod.ANOVA_F:
        w = anova_f(X, y)
    elif method is StatScoreMethod.KRUSKAL_WALLIS:
        w = kruskal_wallis(X, y)
    elif method is StatScoreMethod.PER_FEATURE_AUC:
        w = per_feature_auc(X, y)
    else:
        d = ALT_GAIN_RATIO_DISC if method is StatScoreMethod.GAIN_RATIO_ALT else disc
        C = class_counts(discretize_matrix(X, d), y, d.bins)
        if method is StatScoreMethod.CHI_SQUARED:
            w = chi_squared_counts(C)
        elif method is StatScoreMethod.SYMMETRICAL_UNCERTAINTY:
            w = symmetrical_uncertainty_counts(C)
        elif method is StatScoreMethod.ONE_R:
            w = one_r_counts(C)
        else:
            w = _gain_ratio(C)
    return _finish(method.value, w, X)


# --------------------------------------------------------------------------
# Cost-sensitive variants
# --------------------------------------------------------------------------

def score_cost_sensitive(ds: LabeledDataset, method: CostSensitiveMethod, cost: CostMatrix,
                         disc: DiscretizationSpec = DEFAULT_DISC,
                         rng: np.random.Generator | None = None) -> FeatureWeights:
    """Cost-sensitive split measures.

    DKMcost and GainRatioCost scale the class-``c`` counts by the class's
    expected misclassification cost (relative to the largest), which alters the
    class priors.  MDLsmp draws a systematic PPS resample of the instances
    with probabilities proportional to their class cost and scores MDL on it.
    """
    method = CostSensitiveMethod(method)
    X, y = ds.features, ds.labels
    Xd = discretize_matrix(X, disc)
    factor = cost.relative_class_cost()
    if method is CostSensitiveMethod.MDL_SMP:
        if rng is None:
            raise ValueError("mdl_smp needs an rng")
        rows = systematic_sample(factor[y], ds.n, rng)
        C = class_counts(Xd[rows], y[rows], disc.bins)
        w = _mdl(C) if np.unique(y[rows]).size == 2 else np.zeros(ds.p)
        return _finish(method.value, w, X)
    C = class_counts(Xd, y, disc.bins) * factor[None, None, :]
    if method is CostSensitiveMethod.DKM_COST:
        w = _impurity_gain(C, _imp_dkm)
    else:
        w = _gain_ratio(C)
    return _finish(method.value, w, X)

"""Relief and ReliefF feature weighting, including cost-sensitive variants.

Feature differences are range-normalised, ``diff_j(a, b) = |x_aj - x_bj| /
(max_j - min_j)``, and the same normalised values drive neighbour distances
(Euclidean for the original Relief and Kukar's variant, Manhattan for
ReliefF).  Neighbour ties are broken by instance index.

Cost-sensitive variants (two classes; ``c`` is the class of the sampled
instance and ``cost_c`` its misclassification cost relative to the largest):

* ``ReliefFpe`` / ``ReliefFpa``: each instance's update is weighted by
  ``p'_c / p_c``, the ratio of the cost-altered prior to the class prior, with
  the expected-cost / average-cost priors respectively;
* ``ReliefFexpC`` / ``ReliefFavgC``: the miss term of each update is scaled by
  the expected / average cost of the instance's class;
* ``ReliefFsmp``: instances are drawn by cost-proportional systematic sampling;
* ``ReliefKukar``: original Relief with the nearest-miss term scaled by cost.

With two classes the expected and average costs coincide, so ``pe``/``pa``
and ``expC``/``avgC`` produce identical weights.  Every variant reduces to its
base method (ReliefFequalK, or Relief for Kukar) when the costs are equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist

from ..core import LabeledDataset
from ..errors import ClassTooSmall
from .base import CostMatrix, FeatureWeights, systematic_sample


class ReliefVariant(str, Enum):
    RELIEF = "relief"
    EQUAL_K = "relieff_equal_k"
    EXP_RANK = "relieff_exp_rank"
    BEST_K = "relieff_best_k"
    DISTANCE = "relieff_distance"
    SQR_DISTANCE = "relieff_sqr_distance"
    MERIT = "relieff_merit"
    AVG_C = "relieff_avg_c"
    EXP_C = "relieff_exp_c"
    PA = "relieff_pa"
    PE = "relieff_pe"
    SMP = "relieff_smp"
    KUKAR = "relief_kukar"


COST_SENSITIVE = frozenset({
    ReliefVariant.AVG_C, ReliefVariant.EXP_C, ReliefVariant.PA,
    ReliefVariant.PE, ReliefVariant.SMP, ReliefVariant.KUKAR,
})

EUCLIDEAN_VARIANTS = frozenset({ReliefVariant.RELIEF, ReliefVariant.KUKAR})

# guards 1/d for duplicate instances in the inverse-distance variants
MIN_DISTANCE = 1e-12


@dataclass(frozen=True)
class ReliefParams:
    variant: ReliefVariant = ReliefVariant.EQUAL_K
    k_neighbors: int = 10
    sample_size: int | None = None  # None = use every instance once
    sigma: float = 20.0
    cost: CostMatrix | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", ReliefVariant(self.variant))
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.sample_size is not None and self.sample_size < 1:
            raise ValueError("sample_size must be positive")
        needs_cost = self.variant in COST_SENSITIVE
        if needs_cost and self.cost is None:
            raise ValueError(f"{self.variant.value} needs a cost matrix")
        if not needs_cost and self.cost is not None:
            raise ValueError(f"{self.variant.value} does not take a cost matrix")

    @property
    def neighbours(self) -> int:
        if self.variant in EUCLIDEAN_VARIANTS:
            return 1
        return self.k_neighbors


def normalised_features(X: np.ndarray) -> np.ndarray:
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (X - lo) / safe, 0.0)


def _sample(ds: LabeledDataset, params: ReliefParams, rng) -> np.ndarray:
    n = ds.n
    if params.variant is ReliefVariant.SMP:
        if rng is None:
            raise ValueError("relieff_smp needs an rng")
        size = params.sample_size or n
        return systematic_sample(params.cost.relative_class_cost()[ds.labels], size, rng)
    if params.sample_size is None or params.sample_size >= n:
        return np.arange(n)
    if rng is None:
        raise ValueError("sampling a subset of instances needs an rng")
    return np.sort(rng.choice(n, size=params.sample_size, replace=False))


def _rank_weights(params: ReliefParams, dist: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Per-neighbour weights (rows normalised to sum to one over valid slots)."""
    v = params.variant
    if v is ReliefVariant.EXP_RANK:
        r = np.arange(1, dist.shape[1] + 1, dtype=np.float64)
        w = np.broadcast_to(np.exp(-(r / params.sigma) ** 2), dist.shape).copy()
    elif v is ReliefVariant.DISTANCE:
        w = 1.0 / np.maximum(dist, MIN_DISTANCE)
    elif v is ReliefVariant.SQR_DISTANCE:
        w = 1.0 / np.maximum(dist, MIN_DISTANCE) ** 2
    else:
        w = np.ones(dist.shape)
    w = np.where(valid, w, 0.0)
    s = w.sum(axis=1, keepdims=True)
    return np.where(s > 0, w / np.where(s > 0, s, 1.0), 0.0)


def _nearest(D: np.ndarray, candidates: np.ndarray, k: int):
    """k nearest candidate columns per row, ties by index; returns (idx, dist, valid)."""
    sub = D[:, candidates]
    if candidates.size < k:
        pad = k - candidates.size
        sub = np.hstack([sub, np.full((sub.shape[0], pad), np.inf)])
        candidates = np.concatenate([candidates, np.zeros(pad, dtype=candidates.dtype)])
    order = np.argsort(sub, axis=1, kind="stable")[:, :k]
    idx = candidates[order]
    dist = np.take_along_axis(sub, order, axis=1)
    valid = np.isfinite(dist)
    return idx, np.where(valid, dist, 0.0), valid


def relief_score(ds: LabeledDataset, params: ReliefParams = ReliefParams(),
                 rng: np.random.Generator | None = None, chunk: int = 256) -> FeatureWeights:
    """Relief-family feature weights, averaged over the sampled instances."""
    X = normalised_features(ds.features)
    y = ds.labels.astype(np.int64)
    n, p = X.shape
    v = params.variant
    members = [np.flatnonzero(y == c) for c in (0, 1)]
    if v not in EUCLIDEAN_VARIANTS and min(m.size for m in members) < 2:
        raise ClassTooSmall("ReliefF variants need at least two instances per class")

    sample = _sample(ds, params, rng)
    k = params.neighbours
    metric = "euclidean" if v in EUCLIDEAN_VARIANTS else "cityblock"

    class_factor = np.ones(2)
    inst_factor = np.ones(2)
    if params.cost is not None:
        rel = params.cost.relative_class_cost()
        if v in (ReliefVariant.EXP_C, ReliefVariant.AVG_C, ReliefVariant.KUKAR):
            class_factor = rel
        elif v in (ReliefVariant.PE, ReliefVariant.PA):
            inst_factor = rel

    best_k = v is ReliefVariant.BEST_K
    acc = np.zeros((k, p)) if best_k else np.zeros(p)
    total_weight = 0.0

    for start in range(0, sample.size, chunk):
        rows = sample[start:start + chunk]
        D = cdist(X[rows], X, metric=metric)
        D[np.arange(rows.size), rows] = np.inf  # an instance is never its own neighbour
        for c in (0, 1):
            sel = y[rows] == c
            if not sel.any():
                continue
            R = rows[sel]
            Dc = D[sel]
            hit_idx, hit_d, hit_ok = _nearest(Dc, members[c], k)
            miss_idx, miss_d, miss_ok = _nearest(Dc, members[1 - c], k)
            dh = np.abs(X[R][:, None, :] - X[hit_idx])
            dm = np.abs(X[R][:, None, :] - X[miss_idx])
            omega = inst_factor[c]
            total_weight += omega * R.size
            if best_k:
                ch = np.cumsum(np.where(hit_ok[..., None], dh, 0.0), axis=1)
                cm = np.cumsum(np.where(miss_ok[..., None], dm, 0.0), axis=1)
                nh = np.maximum(np.cumsum(hit_ok, axis=1), 1)[..., None]
                nm = np.maximum(np.cumsum(miss_ok, axis=1), 1)[..., None]
                acc += omega * (cm / nm - ch / nh).sum(axis=0)
                continue
            if v is ReliefVariant.MERIT:
                sh = dh.sum(axis=2, keepdims=True)
                sm = dm.sum(axis=2, keepdims=True)
                dh = np.where(sh > 0, dh / np.where(sh > 0, sh, 1.0), 0.0)
                dm = np.where(sm > 0, dm / np.where(sm > 0, sm, 1.0), 0.0)
            wh = _rank_weights(params, hit_d, hit_ok)
            wm = _rank_weights(params, miss_d, miss_ok)
            hit_term = (wh[..., None] * dh).sum(axis=1)
            miss_term = (wm[..., None] * dm).sum(axis=1)
            acc += omega * (class_factor[c] * miss_term - hit_term).sum(axis=0)

    if best_k:
        w = (acc / total_weight).max(axis=0)
    else:
        w = acc / total_weight
    return FeatureWeights(v.value, w + 0.0)

"""Discretization, contingency tables and plug-in entropy estimators (bits)."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Strategy(str, Enum):
    EQUAL_FREQUENCY = "equal_frequency"
    EQUAL_WIDTH = "equal_width"


@dataclass(frozen=True)
class DiscretizationSpec:
    strategy: Strategy = Strategy.EQUAL_FREQUENCY
    bins: int = 10

    def __post_init__(self):
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        object.__setattr__(self, "strategy", Strategy(self.strategy))


DEFAULT_DISC = DiscretizationSpec()

# precision to which ranked information values are reported
INFO_DECIMALS = 12


def discretize(values, spec: DiscretizationSpec = DEFAULT_DISC) -> np.ndarray:
    """Map real values to bin indices in ``[0, bins)``.

    Equal-frequency bins are cut on the rank of each value's first occurrence
    in sorted order, so tied values always share a bin.
    """
    x = np.asarray(values, dtype=np.float64)
    n = x.size
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if spec.strategy is Strategy.EQUAL_FREQUENCY:
        first_rank = np.searchsorted(np.sort(x), x, side="left")
        return (first_rank * spec.bins) // n
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros(n, dtype=np.int64)
    idx = np.floor((x - lo) / (hi - lo) * spec.bins).astype(np.int64)
    return np.minimum(idx, spec.bins - 1)


def discretize_matrix(X, spec: DiscretizationSpec = DEFAULT_DISC) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if spec.strategy is Strategy.EQUAL_FREQUENCY:
        n = X.shape[0]
        S = np.sort(X, axis=0)
        out = np.empty(X.shape, dtype=np.int64)
        for j in range(X.shape[1]):
            out[:, j] = np.searchsorted(S[:, j], X[:, j], side="left")
        return (out * spec.bins) // n
    return np.column_stack([discretize(X[:, j], spec) for j in range(X.shape[1])]) \
        if X.shape[1] else np.zeros(X.shape, dtype=np.int64)


@dataclass(frozen=True)
class ContingencyTable:
    """Joint counts of two or three discrete variables (one axis each)."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.float64)
        if c.ndim < 1 or np.any(c < 0):
            raise ValueError("counts must be a non-negative array")
        if c.sum() <= 0:
            raise ValueError("table must hold at least one observation")
        object.__setattr__(self, "counts", c)

    @property
    def n(self) -> float:
        return float(self.counts.sum())

    @classmethod
    def from_codes(cls, *codes, sizes=None) -> "ContingencyTable":
        codes = [np.asarray(c, dtype=np.int64) for c in codes]
        if sizes is None:
            sizes = [int(c.max()) + 1 if c.size else 1 for c in codes]
        flat = np.ravel_multi_index(codes, sizes)
        counts = np.bincount(flat, minlength=int(np.prod(sizes))).reshape(sizes)
        return cls(counts)


def _entropy_of_counts(c: np.ndarray) -> float:
    c = c[c > 0]
    total = c.sum()
    if total <= 0:
        return 0.0
    p = c / total
    return float(-(p * np.log2(p)).sum())


def entropy(table: ContingencyTable, axis=None) -> float:
    """Plug-in entropy of the marginal over ``axis`` (int or tuple; None = joint)."""
    c = table.counts
    if axis is None:
        return _entropy_of_counts(c.ravel())
    keep = (axis,) if isinstance(axis, int) else tuple(axis)
    drop = tuple(a for a in range(c.ndim) if a not in keep)
    return _entropy_of_counts(c.sum(axis=drop).ravel())


def mutual_information(table: ContingencyTable) -> float:
    """I(X;Y) = H(X) + H(Y) - H(X,Y) for a 2-way table."""
    if table.counts.ndim != 2:
        raise ValueError("mutual_information expects a 2-way table")
    return max(0.0, entropy(table, 0) + entropy(table, 1) - entropy(table))


def conditional_mutual_information(table: ContingencyTable) -> float:
    """I(X;Y|Z) on a table with axes (X, Y, Z)."""
    if table.counts.ndim != 3:
        raise ValueError("expects a 3-way table (X, Y, Z)")
    v = entropy(table, (0, 2)) + entropy(table, (1, 2)) - entropy(table) - entropy(table, 2)
    return max(0.0, v)


def joint_mutual_information(table: ContingencyTable) -> float:
    """I(X,Z;Y) on a table with axes (X, Y, Z)."""
    if table.counts.ndim != 3:
        raise ValueError("expects a 3-way table (X, Y, Z)")
    return max(0.0, entropy(table, (0, 2)) + entropy(table, 1) - entropy(table))


# --------------------------------------------------------------------------
# Batched estimators over many features at once (used by the filters)
# --------------------------------------------------------------------------

def entropy_rows(counts: np.ndarray) -> np.ndarray:
    """Entropy in bits of each leading-axis slice of a count array."""
    c = counts.reshape(counts.shape[0], -1).astype(np.float64)
    tot = c.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(c > 0, c / tot, 0.0)
        logs = np.where(p > 0, np.log2(np.where(p > 0, p, 1.0)), 0.0)
    # summing sorted terms makes the result exact under relabelling of cells,
    # so equivalent tables give bitwise equal entropies
    return -np.sort(p * logs, axis=1).sum(axis=1)


def batched_joint_counts(A: np.ndarray, b: np.ndarray, size_a: int, size_b: int) -> np.ndarray:
    """Counts of (A[:, j], b) for every column j: shape (p, size_a, size_b)."""
    n, p = A.shape
    cell = A * size_b + np.asarray(b, dtype=np.int64)[:, None]
    cell = cell + (np.arange(p, dtype=np.int64) * (size_a * size_b))[None, :]
    return np.bincount(cell.ravel(), minlength=p * size_a * size_b).reshape(p, size_a, size_b)


def mi_with_target(Xd: np.ndarray, y: np.ndarray, bins: int) -> np.ndarray:
    """I(X_j; Y) for every discretized column of ``Xd``."""
    joint = batched_joint_counts(Xd, y, bins, 2)
    hx = entropy_rows(joint.sum(axis=2))
    hy = entropy_rows(joint.sum(axis=1)[:1])[0]
    hxy = entropy_rows(joint)
    # rounded so mathematically equal values (often exact zeros) compare equal
    return np.round(np.maximum(hx + hy - hxy, 0.0), INFO_DECIMALS)


def symmetrical_uncertainty_pairs(Xd: np.ndarray, z: np.ndarray, bins_x: int, bins_z: int) -> np.ndarray:
    """SU(X_j, Z) = 2 I / (H(X_j) + H(Z)) for every column; 0 when both are constant."""
    joint = batched_joint_counts(Xd, z, bins_x, bins_z)
    hx = entropy_rows(joint.sum(axis=2))
    hz = entropy_rows(joint.sum(axis=1))
    hxz = entropy_rows(joint)
    denom = hx + hz
    mi = np.maximum(hx + hz - hxz, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        su = np.where(denom > 0, 2.0 * mi / np.where(denom > 0, denom, 1.0), 0.0)
    return np.clip(su, 0.0, 1.0)

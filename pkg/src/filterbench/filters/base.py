"""Result types shared by every filter, plus the cost matrix."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import KOutOfRange


@dataclass(frozen=True, eq=False)
class FeatureWeights:
    method: str
    weights: np.ndarray
    higher_is_better: bool = True

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True)
        if w.ndim != 1:
            raise ValueError("weights must be 1-D")
        if not np.all(np.isfinite(w)):
            raise ValueError(f"{self.method}: non-finite weights")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """Selected feature indices in selection order, with optional per-step scores."""

    indices: tuple[int, ...]
    scores: tuple[float, ...] = field(default=())
    method: str = ""

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise ValueError("duplicate indices in feature set")
        if any(i < 0 for i in idx):
            raise ValueError("negative feature index")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def as_set(self) -> frozenset[int]:
        return frozenset(self.indices)


def select_top_k(w: FeatureWeights, k: int) -> FeatureSet:
    """The k best-scoring features; ties go to the lowest index."""
    p = len(w)
    if not 1 <= k <= p:
        raise KOutOfRange(f"k={k} outside [1, {p}]")
    key = -w.weights if w.higher_is_better else w.weights
    order = np.lexsort((np.arange(p), key))[:k]
    return FeatureSet(tuple(order.tolist()), tuple(w.weights[order].tolist()), w.method)


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """2x2 misclassification costs indexed ``[true_class][predicted_class]``."""

    cost: np.ndarray

    def __post_init__(self):
        c = np.array(self.cost, dtype=np.float64, copy=True)
        if c.shape != (2, 2):
            raise ValueError("cost matrix must be 2x2")
        if c[0, 0] != 0 or c[1, 1] != 0:
            raise ValueError("cost matrix diagonal must be zero")
        if c[0, 1] <= 0 or c[1, 0] <= 0:
            raise ValueError("off-diagonal costs must be positive")
        c.flags.writeable = False
        object.__setattr__(self, "cost", c)

    @classmethod
    def symmetric(cls, value: float = 1.0) -> "CostMatrix":
        return cls([[0.0, value], [value, 0.0]])

    @classmethod
    def minority_weighted(cls, labels, factor: float = 20.0) -> "CostMatrix":
        """Misclassifying the minority class costs ``factor``, the majority 1."""
        y = np.asarray(labels)
        n1 = int((y == 1).sum())
        minority = 1 if n1 <= y.size - n1 else 0
        c = np.zeros((2, 2))
        c[minority, 1 - minority] = factor
        c[1 - minority, minority] = 1.0
        return cls(c)

    def class_cost(self) -> np.ndarray:
        """Expected misclassification cost per true class (two classes: the off-diagonal)."""
        return np.array([self.cost[0, 1], self.cost[1, 0]])

    def relative_class_cost(self) -> np.ndarray:
        """Per-class cost divided by the largest; exactly 1.0 for equal costs."""
        c = self.class_cost()
        return c / c.max()


def systematic_sample(weights, size: int, rng: np.random.Generator) -> np.ndarray:
    """Probability-proportional-to-size systematic sampling with replacement.

    Returns ``size`` row indices (ascending, repeats allowed) whose expected
    multiplicities are proportional to ``weights``.  Uniform weights with
    ``size == len(weights)`` return every index exactly once.
    """
    w = np.asarray(weights, dtype=np.float64)
    expected = w * (size / w.sum())
    upper = np.floor(np.cumsum(expected) + rng.random())
    # floor(0 + u) == 0 for u in [0, 1)
    lower = np.concatenate(([0.0], upper[:-1]))
    return np.repeat(np.arange(w.size), (upper - lower).astype(np.int64))

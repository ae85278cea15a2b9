import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import make_dataset
from filterbench.core import derive_seed, make_rng
from filterbench.datagen import ScenarioSpec, generate
from filterbench.errors import KOutOfRange
from filterbench.filters.base import CostMatrix, FeatureWeights, select_top_k
from filterbench.filters.univariate import (
    CostSensitiveMethod,
    SplitScoreMethod,
    StatScoreMethod,
    class_counts,
    score_cost_sensitive,
    score_split,
    score_split_counts,
    score_stat,
)
from filterbench.infotheory import DiscretizationSpec, discretize_matrix
from oracles import H, I, su

GOLDEN = json.loads((Path(__file__).parent / "golden" / "golden.json").read_text())
TWO = DiscretizationSpec(bins=2)

# every univariate scorer keyed by a readable name
SCORERS = {m.value: (lambda ds, m=m: score_split(ds, m)) for m in SplitScoreMethod}
SCORERS.update({m.value: (lambda ds, m=m: score_stat(ds, m)) for m in StatScoreMethod})

# equal-frequency scores depend on ranks only; the equal-width duplicate does not
RANK_ONLY = [k for k in SCORERS if k not in ("anova_f", "gain_ratio_alt")]


def test_split_examples():
    ds = make_dataset([0, 0, 1, 1], [0, 0, 1, 1])
    assert score_split(ds, "gini", TWO).weights[0] == pytest.approx(0.5)
    assert score_split(ds, "inf_gain", TWO).weights[0] == pytest.approx(1.0)
    for m in SplitScoreMethod:
        assert score_split(make_dataset([3, 3, 3, 3], [0, 1, 0, 1]), m).weights[0] == 0.0


def test_stat_examples():
    assert score_stat(make_dataset([1, 2, 3, 4], [0, 0, 1, 1]), "anova_f").weights[0] == pytest.approx(8.0, abs=1e-6)
    ds = make_dataset([0, 1, 0, 1, 1, 0], [0, 1, 0, 1, 1, 0])
    assert score_stat(ds, "symmetrical_uncertainty", TWO).weights[0] == pytest.approx(1.0)
    assert score_stat(ds, "one_r", TWO).weights[0] == pytest.approx(1.0)
    assert score_stat(ds, "per_feature_auc").weights[0] == pytest.approx(1.0)
    # product table: bins (0,0,1,1) x labels (0,1,0,1)
    prod = make_dataset([0, 0, 1, 1], [0, 1, 0, 1])
    assert score_stat(prod, "chi_squared", TWO).weights[0] == pytest.approx(0.0, abs=1e-12)
    for m in StatScoreMethod:
        assert score_stat(make_dataset([2, 2, 2, 2], [0, 1, 0, 1]), m).weights[0] == 0.0


def test_split_golden_and_hand_values():
    g = GOLDEN["split_measures"]
    C = np.array([g["counts"]], dtype=float)
    for name, value in g["values"].items():
        assert score_split_counts(C, name)[0] == pytest.approx(value, abs=1e-12), name
    # recompute the textbook measures from the expanded symbol sequences
    xs, ys = [], []
    for v, (c0, c1) in enumerate(g["counts"]):
        xs += [v] * int(c0 + c1)
        ys += [0] * int(c0) + [1] * int(c1)
    n = len(ys)
    assert g["values"]["inf_gain"] == pytest.approx(I(xs, ys), abs=1e-12)
    assert g["values"]["gain_ratio"] == pytest.approx(I(xs, ys) / H(xs), abs=1e-12)

    def gini(lab):
        q = sum(lab) / len(lab)
        return 1 - q * q - (1 - q) ** 2

    def dkm(lab):
        q = sum(lab) / len(lab)
        return 2 * np.sqrt(q * (1 - q))

    def acc(lab):
        q = sum(lab) / len(lab)
        return min(q, 1 - q)

    for name, f in (("gini", gini), ("dkm", dkm), ("accuracy", acc)):
        child = 0.0
        for v in set(xs):
            lab = [t for x, t in zip(xs, ys) if x == v]
            child += len(lab) / n * f(lab)
        assert g["values"][name] == pytest.approx(f(ys) - child, abs=1e-12), name


@given(st.integers(0, 2 ** 32))
def test_permutation_equivariance(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(30, 4))
    y = np.array([0, 1] * 15)
    perm = rng.permutation(4)
    ds, dsp = make_dataset(X, y), make_dataset(X[:, perm], y)
    for name, f in SCORERS.items():
        np.testing.assert_allclose(f(dsp).weights, f(ds).weights[perm], rtol=0, atol=1e-12, err_msg=name)


@given(st.integers(0, 2 ** 32))
def test_monotone_invariance(seed):
    rng = np.random.default_rng(seed)
    n = 24
    X = rng.permutation(np.arange(n * 3, dtype=float).reshape(n, 3))
    y = rng.permutation(np.array([0] * 12 + [1] * 12))
    ds = make_dataset(X, y)
    # strictly increasing and tie-preserving
    dst = make_dataset(np.exp(X / 20.0) * 3 - 1, y)
    for name in RANK_ONLY:
        np.testing.assert_allclose(SCORERS[name](dst).weights, SCORERS[name](ds).weights,
                                   rtol=1e-9, atol=1e-12, err_msg=name)
    # anova is invariant under positive affine maps
    np.testing.assert_allclose(score_stat(make_dataset(5 * X + 2, y), "anova_f").weights,
                               score_stat(ds, "anova_f").weights, rtol=1e-9)


@given(st.integers(0, 2 ** 32))
def test_nonnegativity_and_bounds(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(25, 3))
    X[:, 2] = np.round(X[:, 2])
    y = rng.integers(0, 2, size=25)
    y[:2] = [0, 1]
    ds = make_dataset(X, y)
    for name in ("inf_gain", "gini", "dkm", "chi_squared", "symmetrical_uncertainty", "gain_ratio"):
        assert np.all(SCORERS[name](ds).weights >= -1e-12), name
    s = score_stat(ds, "symmetrical_uncertainty").weights
    assert np.all((0 <= s) & (s <= 1))
    assert np.all(score_split(ds, "gain_ratio").weights <= 1 + 1e-12)
    Xd = discretize_matrix(X)
    for j in range(3):
        assert s[j] == pytest.approx(su(list(Xd[:, j]), list(y)), abs=1e-10)


def test_independent_product_table_scores_zero():
    # each bin holds the same class mix
    X = np.repeat(np.arange(5.0), 4)
    y = np.tile([0, 1, 0, 1], 5)
    ds = make_dataset(X, y)
    disc = DiscretizationSpec(bins=5)
    for m in ("inf_gain", "gini", "dkm"):
        assert score_split(ds, m, disc).weights[0] == pytest.approx(0.0, abs=1e-12)
    for m in ("chi_squared", "symmetrical_uncertainty"):
        assert score_stat(ds, m, disc).weights[0] == pytest.approx(0.0, abs=1e-12)


# ---- cost-sensitive -------------------------------------------------------

def _balanced(seed):
    return generate(ScenarioSpec("bal", 200, 8, 3, 0), make_rng(seed))


@pytest.mark.parametrize("value", [1.0, 7.5])
def test_cost_symmetry(value):
    ds = _balanced(1)
    cost = CostMatrix.symmetric(value)
    pairs = (("dkm_cost", "dkm"), ("gain_ratio_cost", "gain_ratio"), ("mdl_smp", "mdl"))
    for cs, base in pairs:
        a = score_cost_sensitive(ds, cs, cost, rng=make_rng(3)).weights
        b = score_split(ds, base).weights
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-9)


def test_dkm_cost_golden_ranks():
    g = GOLDEN["dkm_cost_ranks"]
    ds = generate(ScenarioSpec("golden", 400, 12, 4, 0), make_rng(derive_seed(0, ["golden", "dkm_cost"])))
    w = score_split(ds, "dkm")
    wc = score_cost_sensitive(ds, "dkm_cost", CostMatrix(g["cost"]))
    assert list(select_top_k(w, 12).indices) == g["dkm"]
    assert list(select_top_k(wc, 12).indices) == g["dkm_cost"]
    again = score_cost_sensitive(ds, "dkm_cost", CostMatrix(g["cost"]))
    np.testing.assert_array_equal(wc.weights, again.weights)


def test_mdl_smp_determinism_and_rng_required():
    ds = _balanced(2)
    cost = CostMatrix([[0, 1], [20, 0]])
    a = score_cost_sensitive(ds, "mdl_smp", cost, rng=make_rng(5)).weights
    b = score_cost_sensitive(ds, "mdl_smp", cost, rng=make_rng(5)).weights
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError):
        score_cost_sensitive(ds, CostSensitiveMethod.MDL_SMP, cost)


def test_cost_matrix_validation():
    with pytest.raises(ValueError):
        CostMatrix([[1, 1], [1, 0]])
    with pytest.raises(ValueError):
        CostMatrix([[0, 0], [1, 0]])
    c = CostMatrix.minority_weighted([0, 0, 0, 1], 20.0)
    assert c.cost[1, 0] == 20.0 and c.cost[0, 1] == 1.0
    np.testing.assert_array_equal(c.relative_class_cost(), [0.05, 1.0])


def test_class_counts_shape():
    Xd = np.array([[0, 1], [1, 1], [1, 0]])
    C = class_counts(Xd, np.array([0, 1, 1]), 2)
    assert C.shape == (2, 2, 2)
    assert C[0].tolist() == [[1, 0], [0, 2]]


# ---- select_top_k ---------------------------------------------------------

def test_top_k_examples():
    assert select_top_k(FeatureWeights("m", [3, 1, 2]), 2).as_set() == {0, 2}
    assert select_top_k(FeatureWeights("m", [1, 1, 1]), 2).as_set() == {0, 1}
    assert select_top_k(FeatureWeights("m", [1, 5, 5, 0]), 2).indices == (1, 2)
    assert select_top_k(FeatureWeights("m", [3, 1, 2], higher_is_better=False), 1).indices == (1,)
    with pytest.raises(KOutOfRange):
        select_top_k(FeatureWeights("m", [1, 2]), 3)
    with pytest.raises(KOutOfRange):
        select_top_k(FeatureWeights("m", [1, 2]), 0)


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=30), st.data())
def test_top_k_properties(weights, data):
    k = data.draw(st.integers(1, len(weights)))
    fs = select_top_k(FeatureWeights("m", weights), k)
    assert len(fs) == k
    chosen = set(fs.indices)
    worst_in = min(weights[i] for i in chosen)
    for j in range(len(weights)):
        if j not in chosen:
            assert weights[j] < worst_in or (weights[j] == worst_in and j > max(
                i for i in chosen if weights[i] == worst_in))
    # equals a plain stable sort by descending weight
    ref = sorted(range(len(weights)), key=lambda i: (-weights[i], i))[:k]
    assert list(fs.indices) == ref

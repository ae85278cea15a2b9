import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_dataset
from filterbench.core import make_rng
from filterbench.errors import ClassTooSmall
from filterbench.filters.base import CostMatrix, systematic_sample
from filterbench.filters.relief import COST_SENSITIVE, ReliefParams, ReliefVariant, relief_score
from oracles import relief_oracle

COST = CostMatrix([[0.0, 1.0], [4.0, 0.0]])


def params_for(variant, **kw):
    variant = ReliefVariant(variant)
    cost = COST if variant in COST_SENSITIVE else None
    return ReliefParams(variant=variant, cost=cost, **kw)


def oracle_for(X, y, variant, k=10, sample=None):
    rel = tuple(COST.relative_class_cost()) if ReliefVariant(variant) in COST_SENSITIVE else (1.0, 1.0)
    return relief_oracle(X, y, variant, k=k, sample=sample, rel_cost=rel)


def toy(seed, n=30, p=4):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = np.array([0, 1] * (n // 2))
    rng.shuffle(y)
    X[:, 0] += 1.5 * y
    return X, y


@pytest.mark.parametrize("variant", [v.value for v in ReliefVariant])
def test_matches_direct_loop_oracle(variant):
    for seed in range(3):
        X, y = toy(seed, n=40 + seed * 4)
        ds = make_dataset(X, y)
        p = params_for(variant, k_neighbors=4)
        if variant == "relieff_smp":
            sample = systematic_sample(COST.relative_class_cost()[y], len(y), make_rng(seed))
            got = relief_score(ds, p, make_rng(seed)).weights
            want = oracle_for(X, y, variant, k=4, sample=list(sample))
        else:
            got = relief_score(ds, p).weights
            want = oracle_for(X, y, variant, k=4)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-9)


def test_sampled_subset_matches_oracle():
    X, y = toy(7, n=36)
    ds = make_dataset(X, y)
    got = relief_score(ds, params_for("relief", sample_size=10), make_rng(9)).weights
    sample = np.sort(make_rng(9).choice(36, size=10, replace=False))
    np.testing.assert_allclose(got, oracle_for(X, y, "relief", sample=list(sample)), atol=1e-9)


@pytest.mark.parametrize("variant", [v.value for v in ReliefVariant])
def test_constant_feature_scores_zero(variant):
    X, y = toy(1)
    X[:, 2] = 7.0
    w = relief_score(make_dataset(X, y), params_for(variant), make_rng(0)).weights
    assert w[2] == 0.0


@settings(max_examples=200)
@given(st.integers(0, 2 ** 32), st.sampled_from([v.value for v in ReliefVariant]),
       st.floats(0.01, 100), st.floats(-50, 50))
def test_affine_invariance_and_bounds(seed, variant, scale, shift):
    X, y = toy(seed, n=24, p=3)
    ds = make_dataset(X, y)
    Xt = X.copy()
    Xt[:, 1] = Xt[:, 1] * scale + shift
    p = params_for(variant, k_neighbors=3)
    a = relief_score(ds, p, make_rng(seed)).weights
    b = relief_score(make_dataset(Xt, y), p, make_rng(seed)).weights
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-9)
    assert np.all(a >= -1 - 1e-12) and np.all(a <= 1 + 1e-12)


@settings(max_examples=200)
@given(st.integers(0, 2 ** 32), st.sampled_from([v.value for v in ReliefVariant]))
def test_feature_permutation_equivariance(seed, variant):
    X, y = toy(seed, n=20, p=4)
    perm = np.random.default_rng(seed).permutation(4)
    p = params_for(variant, k_neighbors=3)
    a = relief_score(make_dataset(X, y), p, make_rng(1)).weights
    b = relief_score(make_dataset(X[:, perm], y), p, make_rng(1)).weights
    np.testing.assert_allclose(b, a[perm], rtol=0, atol=1e-12)


def test_xor_interaction_detected():
    rng = np.random.default_rng(2024)
    n = 200
    a = rng.integers(0, 2, size=n)
    b = rng.integers(0, 2, size=n)
    y = a ^ b
    X = np.column_stack([a + rng.normal(0, 0.1, n), b + rng.normal(0, 0.1, n), rng.normal(size=n)])
    w = relief_score(make_dataset(X, y), ReliefParams()).weights
    assert w[0] > w[2] and w[1] > w[2]


def test_duplicated_instances_are_hits():
    X, y = toy(3, n=20, p=3)
    X2 = np.vstack([X, X])
    y2 = np.concatenate([y, y])
    got = relief_score(make_dataset(X2, y2), ReliefParams(variant="relief")).weights
    np.testing.assert_allclose(got, relief_oracle(X2, y2, "relief"), atol=1e-9)
    # the nearest hit is always the duplicate, so only misses contribute: weights are positive
    assert np.all(got > 0)


def test_equal_costs_reduce_to_base():
    X, y = toy(5)
    ds = make_dataset(X, y)
    sym = CostMatrix.symmetric(3.0)
    base = relief_score(ds, ReliefParams()).weights
    for v in ("relieff_avg_c", "relieff_exp_c", "relieff_pa", "relieff_pe", "relieff_smp"):
        w = relief_score(ds, ReliefParams(variant=v, cost=sym), make_rng(0)).weights
        np.testing.assert_allclose(w, base, atol=1e-12)
    kuk = relief_score(ds, ReliefParams(variant="relief_kukar", cost=sym)).weights
    np.testing.assert_allclose(kuk, relief_score(ds, ReliefParams(variant="relief")).weights, atol=1e-12)


def test_params_validation_and_errors():
    with pytest.raises(ValueError):
        ReliefParams(variant="relieff_pe")
    with pytest.raises(ValueError):
        ReliefParams(variant="relief", cost=COST)
    with pytest.raises(ValueError):
        ReliefParams(k_neighbors=0)
    with pytest.raises(ValueError):
        ReliefParams(sigma=0)
    with pytest.raises(ClassTooSmall):
        relief_score(make_dataset([[1.0], [2.0], [3.0]], [0, 0, 1]), ReliefParams())
    with pytest.raises(ValueError):
        relief_score(make_dataset(*toy(0)), ReliefParams(sample_size=5))


def test_chunking_only_changes_rounding():
    X, y = toy(11, n=50)
    ds = make_dataset(X, y)
    np.testing.assert_allclose(relief_score(ds, chunk=7).weights, relief_score(ds, chunk=256).weights,
                               rtol=0, atol=1e-15)
    np.testing.assert_array_equal(relief_score(ds).weights, relief_score(ds).weights)

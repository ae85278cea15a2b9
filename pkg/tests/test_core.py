import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import make_dataset
from filterbench.core import (
    Criterion,
    LabeledDataset,
    Role,
    auc,
    derive_seed,
    make_rng,
    plan_cv,
    read_dataset,
    write_dataset,
)
from filterbench.errors import ClassTooSmall, InvalidDataset, SingleClass
from oracles import auc_pairs

GOLDEN = json.loads((Path(__file__).parent / "golden" / "golden.json").read_text())


# ---- LabeledDataset -------------------------------------------------------

def test_dataset_validation():
    with pytest.raises(InvalidDataset):
        make_dataset([[1.0], [np.nan]], [0, 1])
    with pytest.raises(InvalidDataset):
        make_dataset([[1.0], [2.0]], [1, 1])
    with pytest.raises(InvalidDataset):
        make_dataset([[1.0], [2.0]], [0, 2])
    with pytest.raises(InvalidDataset):
        LabeledDataset(np.ones((2, 2)), np.array([0, 1]), (Role.RELEVANT,))


def test_dataset_is_frozen():
    ds = make_dataset([[1.0], [2.0]], [0, 1])
    with pytest.raises(ValueError):
        ds.features[0, 0] = 5.0


def test_criterion_has_four_members():
    assert [c.value for c in Criterion] == ["auc", "relevant_fraction", "stability", "runtime"]


def test_dataset_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    ds = LabeledDataset(rng.normal(size=(7, 3)), np.array([0, 1, 0, 1, 1, 0, 0]),
                        (Role.RELEVANT, Role.REDUNDANT, Role.IRRELEVANT), "rt", {"k": 1})
    csv_path, json_path = write_dataset(ds, tmp_path)
    assert csv_path.read_text().splitlines()[0] == "f1,f2,f3,label"
    back = read_dataset(csv_path)
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.labels, ds.labels)
    assert back.roles == ds.roles and back.name == "rt" and back.meta == {"k": 1}


# ---- seeds ----------------------------------------------------------------

def test_derive_seed_golden():
    for entry in GOLDEN["derive_seed"]:
        assert derive_seed(entry["master"], entry["tags"]) == entry["value"]


def test_derive_seed_distinct_and_pure():
    assert derive_seed(7, ["a"]) == derive_seed(7, ["a"])
    assert derive_seed(7, ["a"]) != derive_seed(7, ["b"])
    # typed tags: the int 1 and the string "1" differ
    assert derive_seed(0, [1]) != derive_seed(0, ["1"])
    # concatenation cannot collide thanks to length prefixes
    assert derive_seed(0, ["ab", "c"]) != derive_seed(0, ["a", "bc"])


def test_pinned_generator_stream():
    g = GOLDEN["pcg64_first_draws"]
    draws = make_rng(g["seed"]).integers(0, 2 ** 63, size=4)
    assert [int(v) for v in draws] == g["uint64"]


# ---- plan_cv --------------------------------------------------------------

def test_plan_cv_small_example():
    labels = [0] * 5 + [1] * 5
    plan = plan_cv(labels, 5, 1, make_rng(0))
    for fold in plan:
        assert sorted(np.asarray(labels)[fold.test].tolist()) == [0, 1]


def test_plan_cv_counts_and_minority():
    labels = np.array([1] * 250 + [0] * 2250)
    plan = plan_cv(labels, 10, 5, make_rng(3))
    assert len(plan) == 50
    for fold in plan:
        assert labels[fold.test].sum() == 25


def test_plan_cv_too_small():
    with pytest.raises(ClassTooSmall):
        plan_cv([0, 0, 0, 1, 1], 3, 1, make_rng(0))


@given(st.integers(2, 6), st.integers(1, 3), st.integers(0, 2 ** 32),
       st.lists(st.integers(0, 1), min_size=12, max_size=60))
def test_plan_cv_invariants(folds, repeats, seed, labels):
    y = np.array(labels)
    if min((y == 0).sum(), (y == 1).sum()) < folds:
        with pytest.raises(ClassTooSmall):
            plan_cv(y, folds, repeats, make_rng(seed))
        return
    plan = plan_cv(y, folds, repeats, make_rng(seed))
    assert len(plan) == folds * repeats
    again = plan_cv(y, folds, repeats, make_rng(seed))
    for r in range(repeats):
        tests = [f.test for f in plan if f.repeat == r]
        allidx = np.sort(np.concatenate(tests))
        np.testing.assert_array_equal(allidx, np.arange(y.size))
        for f in (f for f in plan if f.repeat == r):
            assert np.intersect1d(f.train, f.test).size == 0
            assert f.train.size + f.test.size == y.size
            # stratification: class counts within one of the exact share
            for c in (0, 1):
                expected = (y == c).sum() / folds
                assert abs((y[f.test] == c).sum() - expected) < 1.0 + 1e-9
    for a, b in zip(plan, again):
        np.testing.assert_array_equal(a.test, b.test)


@given(st.integers(0, 2 ** 32), st.integers(2, 4))
def test_plan_cv_relabel_equivariance(seed, folds):
    # reorder instances while keeping each class's internal order: the
    # partition, mapped through the permutation, is unchanged
    rng = np.random.default_rng(seed)
    y = rng.permutation(np.array([0] * 9 + [1] * 7))
    order = np.argsort(rng.random(y.size))
    # new positions that keep each class's relative order
    new_pos = np.empty(y.size, dtype=int)
    for c in (0, 1):
        members = np.flatnonzero(y == c)
        new_pos[members] = np.sort(order[members])
    y2 = np.empty_like(y)
    y2[new_pos] = y
    p1 = plan_cv(y, folds, 1, make_rng(seed))
    p2 = plan_cv(y2, folds, 1, make_rng(seed))
    for a, b in zip(p1, p2):
        assert set(new_pos[a.test].tolist()) == set(b.test.tolist())


# ---- AUC ------------------------------------------------------------------

def test_auc_examples():
    assert auc([0.9, 0.8, 0.3, 0.2], [1, 1, 0, 0]) == 1.0
    assert auc([0.5] * 6, [0, 1, 0, 1, 1, 0]) == 0.5
    assert auc([0.9, 0.2, 0.6, 0.4], [1, 1, 0, 0]) == 0.5


def test_auc_single_class():
    with pytest.raises(SingleClass):
        auc([1.0, 2.0], [1, 1])


def test_auc_matches_pair_counting_1000_instances():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(2, 201))
        y = rng.integers(0, 2, size=n)
        y[0], y[1] = 0, 1
        # coarse grid so ties are common
        s = rng.integers(0, 12, size=n) / 4.0
        assert auc(s, y) == auc_pairs(s.tolist(), y.tolist())


labels_st = st.lists(st.integers(0, 1), min_size=2, max_size=40).filter(lambda v: 0 < sum(v) < len(v))


@given(labels_st, st.data())
def test_auc_complement_symmetry(labels, data):
    n = len(labels)
    scores = data.draw(st.lists(st.floats(-1e6, 1e6), min_size=n, max_size=n, unique=True))
    a = auc(scores, labels)
    b = auc([-s for s in scores], labels)
    assert a + b == pytest.approx(1.0, abs=1e-12)
    assert 0.0 <= a <= 1.0


@given(labels_st, st.data())
def test_auc_monotone_invariance(labels, data):
    n = len(labels)
    # integer scores keep the transformed values exactly distinct
    scores = np.array(data.draw(st.lists(st.integers(-50, 50), min_size=n, max_size=n)), dtype=float)
    assert auc(scores, labels) == auc(np.exp(scores / 10.0) * 3 + 1, labels)
    assert auc(scores, labels) == auc_pairs(scores.tolist(), labels)

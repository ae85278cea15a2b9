"""Data model, seeded randomness, stratified CV planning and the AUC metric.

Randomness is pinned to NumPy's ``PCG64`` bit generator wrapped in a
``numpy.random.Generator``.  Child streams are never spawned implicitly:
every consumer derives its own 64-bit seed with :func:`derive_seed`, which
hashes the master seed and a list of tags with BLAKE2b (8-byte digest).
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import ClassTooSmall, InvalidDataset, SingleClass

U64_MASK = (1 << 64) - 1


class Role(str, Enum):
    RELEVANT = "relevant"
    REDUNDANT = "redundant"
    IRRELEVANT = "irrelevant"


class Criterion(str, Enum):
    AUC = "auc"
    RELEVANT_FRACTION = "relevant_fraction"
    STABILITY = "stability"
    RUNTIME = "runtime"


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Numeric n x p feature matrix with binary labels and per-feature roles.

    Arrays are copied and frozen on construction, so instances can be shared
    freely between threads.
    """

    features: np.ndarray
    labels: np.ndarray
    roles: tuple[Role, ...]
    name: str = "dataset"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64, copy=True)
        y = np.array(self.labels, copy=True)
        if X.ndim != 2:
            raise InvalidDataset(f"features must be 2-D, got shape {X.shape}")
        n, p = X.shape
        if n < 2 or p < 1:
            raise InvalidDataset(f"need n >= 2 and p >= 1, got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise InvalidDataset("features contain NaN or infinite values")
        if y.shape != (n,):
            raise InvalidDataset(f"labels must have shape ({n},), got {y.shape}")
        if not np.all((y == 0) | (y == 1)):
            raise InvalidDataset("labels must be 0/1")
        y = y.astype(np.int8)
        if y.min() == y.max():
            raise InvalidDataset("both classes must be present")
        roles = tuple(Role(r) for r in self.roles)
        if len(roles) != p:
            raise InvalidDataset(f"roles has length {len(roles)}, expected {p}")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "roles", roles)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def indices_with_role(self, role: Role) -> np.ndarray:
        return np.array([j for j, r in enumerate(self.roles) if r == role], dtype=np.int64)

    def take_rows(self, rows) -> "LabeledDataset":
        rows = np.asarray(rows, dtype=np.int64)
        return LabeledDataset(
            self.features[rows], self.labels[rows], self.roles, self.name, dict(self.meta)
        )

    def take_columns(self, cols) -> "LabeledDataset":
        cols = np.asarray(cols, dtype=np.int64)
        return LabeledDataset(
            self.features[:, cols],
            self.labels,
            tuple(self.roles[c] for c in cols),
            self.name,
            dict(self.meta),
        )

    def replace(self, *, features=None, labels=None, name=None, meta=None) -> "LabeledDataset":
        return LabeledDataset(
            self.features if features is None else features,
            self.labels if labels is None else labels,
            self.roles,
            self.name if name is None else name,
            dict(self.meta) if meta is None else meta,
        )


# --------------------------------------------------------------------------
# Randomness
# --------------------------------------------------------------------------

def _encode_tag(tag) -> bytes:
    if isinstance(tag, bool):
        raise TypeError("bool tags are ambiguous; use int or str")
    if isinstance(tag, (int, np.integer)):
        raw = str(int(tag)).encode()
        return b"i" + struct.pack("<I", len(raw)) + raw
    if isinstance(tag, str):
        raw = tag.encode("utf-8")
        return b"s" + struct.pack("<I", len(raw)) + raw
    raise TypeError(f"unsupported seed tag type {type(tag).__name__}")


def derive_seed(master: int, tags: Iterable = ()) -> int:
    """Pure 64-bit seed derivation: BLAKE2b-64 over master and typed tags.

    Encoding: ``b"filterbench/v1"``, master as 8-byte little-endian, then for
    each tag a type byte (``i`` or ``s``), a 4-byte length and the UTF-8 text.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(b"filterbench/v1")
    h.update(struct.pack("<Q", int(master) & U64_MASK))
    for tag in tags:
        h.update(_encode_tag(tag))
    return int.from_bytes(h.digest(), "little")


def make_rng(seed: int) -> np.random.Generator:
    """The pinned generator: PCG64 seeded with a single 64-bit integer."""
    return np.random.Generator(np.random.PCG64(int(seed) & U64_MASK))


# --------------------------------------------------------------------------
# Cross-validation planning
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Fold:
    repeat: int
    fold: int
    train: np.ndarray
    test: np.ndarray


@dataclass(frozen=True)
class FoldPlan:
    assignments: tuple[Fold, ...]
    folds: int
    repeats: int

    def __iter__(self):
        return iter(self.assignments)

    def __len__(self):
        return len(self.assignments)


def plan_cv(labels, folds: int, repeats: int, rng: np.random.Generator) -> FoldPlan:
    """Repeated stratified k-fold plan.

    Within each repeat every class is shuffled and dealt round-robin into the
    folds; the deal continues where the previous class stopped so that total
    fold sizes also differ by at most one.
    """
    y = np.asarray(labels)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    # binary labels: a missing class counts as having zero members
    classes = np.array([0, 1])
    by_class = [np.flatnonzero(y == c) for c in classes]
    for c, idx in zip(classes, by_class):
        if idx.size < folds:
            raise ClassTooSmall(f"class {c} has {idx.size} members, fewer than {folds} folds")
    n = y.size
    out = []
    for r in range(repeats):
        fold_of = np.empty(n, dtype=np.int64)
        offset = 0
        for idx in by_class:
            shuffled = idx[rng.permutation(idx.size)]
            fold_of[shuffled] = (np.arange(idx.size) + offset) % folds
            offset = (offset + idx.size) % folds
        for f in range(folds):
            test = np.flatnonzero(fold_of == f)
            train = np.flatnonzero(fold_of != f)
            test.flags.writeable = False
            train.flags.writeable = False
            out.append(Fold(r, f, train, test))
    return FoldPlan(tuple(out), folds, repeats)


# --------------------------------------------------------------------------
# AUC
# --------------------------------------------------------------------------

def auc(scores, labels) -> float:
    """Mann-Whitney AUC: P(s+ > s-) + 0.5 P(s+ == s-), via average ranks."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    pos = y == 1
    n1 = int(pos.sum())
    n0 = y.size - n1
    if n1 == 0 or n0 == 0:
        raise SingleClass("AUC needs both classes")
    ranks = rankdata(s)
    # rank sums are multiples of 0.5, so U is exact in float64
    u = ranks[pos].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


# --------------------------------------------------------------------------
# On-disk format
# --------------------------------------------------------------------------

def write_dataset(ds: LabeledDataset, directory, stem: str | None = None) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` (header ``f1..fp,label``) and ``<stem>.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = stem or ds.name
    csv_path = directory / f"{stem}.csv"
    json_path = directory / f"{stem}.json"
    header = [f"f{j + 1}" for j in range(ds.p)] + ["label"]
    with open(csv_path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row, lab in zip(ds.features, ds.labels):
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write(f",{int(lab)}\n")
    sidecar = {"name": ds.name, "roles": [r.value for r in ds.roles], **ds.meta}
    with open(json_path, "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def read_dataset(csv_path) -> LabeledDataset:
    csv_path = Path(csv_path)
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "label":
            raise InvalidDataset(f"{csv_path}: last column must be 'label'")
        rows = [r for r in reader if r]
    data = np.array(rows, dtype=np.float64)
    meta = json.loads(csv_path.with_suffix(".json").read_text())
    name = meta.pop("name", csv_path.stem)
    roles = meta.pop("roles")
    return LabeledDataset(data[:, :-1], data[:, -1].astype(np.int8), roles, name, meta)


def as_index_array(values: Sequence[int]) -> np.ndarray:
    return np.asarray(list(values), dtype=np.int64)

"""Synthetic binary classification scenarios and noise injection.

The generator follows the hypercube-cluster construction: relevant features
are unit-variance Gaussian clusters around hypercube vertices (two clusters
per class), redundant features are noisy random linear combinations of the
relevant block, irrelevant features are standard normal.  Columns are then
rescaled and shifted per feature, and rows and columns are shuffled.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .core import LabeledDataset, Role, derive_seed, make_rng
from .errors import InvalidSpec, RateOutOfRange, UnknownScenario


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    observations: int
    features_total: int
    features_relevant: int
    features_redundant: int
    class_noise: float = 0.0
    attribute_noise: float = 0.0
    minority_fraction: float = 0.5

    def validate(self) -> None:
        if self.observations < 4:
            raise InvalidSpec(f"{self.name}: need at least 4 observations")
        if self.features_relevant < 1:
            raise InvalidSpec(f"{self.name}: need at least one relevant feature")
        if self.features_redundant < 0:
            raise InvalidSpec(f"{self.name}: negative redundant count")
        if self.features_relevant + self.features_redundant > self.features_total:
            raise InvalidSpec(f"{self.name}: relevant + redundant exceeds total features")
        for label, rate in (("class_noise", self.class_noise), ("attribute_noise", self.attribute_noise)):
            if not 0.0 <= rate <= 1.0:
                raise InvalidSpec(f"{self.name}: {label}={rate} outside [0, 1]")
        if not 0.0 < self.minority_fraction <= 0.5:
            raise InvalidSpec(f"{self.name}: minority_fraction must lie in (0, 0.5]")

    @property
    def features_irrelevant(self) -> int:
        return self.features_total - self.features_relevant - self.features_redundant

    @property
    def is_imbalanced(self) -> bool:
        return self.minority_fraction < 0.5

    def clean(self) -> "ScenarioSpec":
        """The same spec with both noise rates set to zero."""
        return replace(self, class_noise=0.0, attribute_noise=0.0)

    def with_observations(self, n: int) -> "ScenarioSpec":
        return replace(self, observations=int(n))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GeneratorParams:
    clusters_per_class: int = 2
    class_sep: float = 1.0
    redundant_noise_sd: float = 0.01
    scale_low: float = 1.0
    scale_high: float = 100.0
    shift_half_width: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)


_TABLE = (
    ScenarioSpec("Baseline", 2500, 100, 10, 0),
    ScenarioSpec("ClassNoise_1", 2500, 100, 10, 0, class_noise=0.1),
    ScenarioSpec("ClassNoise_2", 2500, 100, 10, 0, class_noise=0.2),
    ScenarioSpec("ClassNoise_3", 2500, 100, 10, 0, class_noise=0.3),
    ScenarioSpec("AttNoise_1", 2500, 100, 10, 0, attribute_noise=0.1),
    ScenarioSpec("AttNoise_2", 2500, 100, 10, 0, attribute_noise=0.2),
    ScenarioSpec("AttNoise_3", 2500, 100, 10, 0, attribute_noise=0.3),
    ScenarioSpec("Redundant_1", 2500, 100, 10, 10),
    ScenarioSpec("Redundant_2", 2500, 100, 10, 20),
    ScenarioSpec("Imbalanced_1", 2500, 100, 10, 10, minority_fraction=0.2),
    ScenarioSpec("Imbalanced_2", 2500, 100, 10, 10, minority_fraction=0.1),
    ScenarioSpec("Dimensionality_1", 2500, 500, 15, 0),
    ScenarioSpec("Dimensionality_2", 500, 1000, 30, 0),
)

# scenario families used to group the regression analyses
SCENARIO_GROUPS = {
    "noise": ("Baseline", "ClassNoise_1", "ClassNoise_2", "ClassNoise_3",
              "AttNoise_1", "AttNoise_2", "AttNoise_3"),
    "redundant": ("Baseline", "Redundant_1", "Redundant_2"),
    "imbalanced": ("Baseline", "Imbalanced_1", "Imbalanced_2"),
    "dimensionality": ("Baseline", "Dimensionality_1", "Dimensionality_2"),
}


def scenario_table() -> list[ScenarioSpec]:
    return list(_TABLE)


def get_scenario(name: str) -> ScenarioSpec:
    for spec in _TABLE:
        if spec.name == name:
            return spec
    raise UnknownScenario(name)


def _hypercube_vertices(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    """``count`` distinct vertices of {-1, 1}^dim, sampled uniformly."""
    if dim < 63 and count > 2 ** dim:
        raise InvalidSpec(f"{count} clusters need more than {2 ** dim} hypercube vertices")
    seen: set[tuple] = set()
    out = []
    while len(out) < count:
        v = tuple(rng.integers(0, 2, size=dim).tolist())
        if v not in seen:
            seen.add(v)
            out.append(v)
    return np.array(out, dtype=np.float64) * 2.0 - 1.0


def class_sizes(n: int, minority_fraction: float) -> tuple[int, int]:
    """(majority, minority) sizes; class 1 is the minority class."""
    n1 = int(round(n * minority_fraction))
    n1 = min(max(n1, 1), n - 1)
    return n - n1, n1


def generate(spec: ScenarioSpec, rng: np.random.Generator,
             params: GeneratorParams = GeneratorParams()) -> LabeledDataset:
    """Draw a clean dataset for ``spec``; the noise rates are not applied here."""
    spec.validate()
    n = spec.observations
    n_rel, n_red, n_irr = spec.features_relevant, spec.features_redundant, spec.features_irrelevant
    k = params.clusters_per_class

    sizes = class_sizes(n, spec.minority_fraction)
    centroids = _hypercube_vertices(rng, n_rel, 2 * k) * params.class_sep

    rel_blocks, labels = [], []
    for cls, size in enumerate(sizes):
        per_cluster = [size // k + (1 if i < size % k else 0) for i in range(k)]
        for i, m in enumerate(per_cluster):
            centre = centroids[cls * k + i]
            rel_blocks.append(rng.standard_normal((m, n_rel)) + centre)
            labels.append(np.full(m, cls, dtype=np.int8))
    X_rel = np.vstack(rel_blocks)
    y = np.concatenate(labels)

    blocks = [X_rel]
    if n_red:
        B = rng.uniform(-1.0, 1.0, size=(n_rel, n_red))
        blocks.append(X_rel @ B + rng.normal(0.0, params.redundant_noise_sd, size=(n, n_red)))
    if n_irr:
        blocks.append(rng.standard_normal((n, n_irr)))
    X = np.hstack(blocks)
    roles = [Role.RELEVANT] * n_rel + [Role.REDUNDANT] * n_red + [Role.IRRELEVANT] * n_irr

    p = X.shape[1]
    scale = np.exp(rng.uniform(math.log(params.scale_low), math.log(params.scale_high), size=p))
    shift = rng.uniform(-params.shift_half_width, params.shift_half_width, size=p)
    X = X * scale + shift

    rows = rng.permutation(n)
    cols = rng.permutation(p)
    X = X[rows][:, cols]
    y = y[rows]
    roles = [roles[c] for c in cols]

    meta = {"scenario": spec.to_dict(), "generator": params.to_dict()}
    return LabeledDataset(X, y, roles, spec.name, meta)


def inject_class_noise(ds: LabeledDataset, rate: float, rng: np.random.Generator) -> LabeledDataset:
    """Flip exactly ``round(rate * n)`` uniformly chosen labels."""
    if not 0.0 <= rate <= 1.0:
        raise RateOutOfRange(f"class noise rate {rate} outside [0, 1]")
    flips = int(round(rate * ds.n))
    y = ds.labels.copy()
    if flips:
        chosen = rng.choice(ds.n, size=flips, replace=False)
        y[chosen] = 1 - y[chosen]
    return ds.replace(labels=y)


def inject_attribute_noise(ds: LabeledDataset, rate: float, rng: np.random.Generator) -> LabeledDataset:
    """Add N(0, (rate * sd_j)^2) to every value of feature j (sd_j with ddof=1)."""
    if not 0.0 <= rate <= 1.0:
        raise RateOutOfRange(f"attribute noise rate {rate} outside [0, 1]")
    if rate == 0.0:
        return ds.replace()
    sd = ds.features.std(axis=0, ddof=1)
    noise = rng.standard_normal(ds.features.shape) * (rate * sd)
    return ds.replace(features=ds.features + noise)


def build_scenario(spec: ScenarioSpec, master_seed: int,
                   params: GeneratorParams = GeneratorParams()) -> tuple[LabeledDataset, LabeledDataset]:
    """Return ``(train, clean)`` for a scenario.

    The clean data is keyed on the noise-free spec parameters (not the name),
    so every noise scenario shares its instances with the matching clean
    dataset; ``train`` is ``clean`` with the scenario's noise injected.
    """
    spec.validate()
    base = spec.clean()
    key = ["dataset", base.observations, base.features_total, base.features_relevant,
           base.features_redundant, repr(base.minority_fraction)]
    clean = generate(base, make_rng(derive_seed(master_seed, key)), params)
    clean = clean.replace(name=spec.name, meta={**clean.meta, "scenario": spec.to_dict()})
    train = clean
    if spec.class_noise > 0:
        train = inject_class_noise(train, spec.class_noise,
                                   make_rng(derive_seed(master_seed, ["class_noise", spec.name])))
    if spec.attribute_noise > 0:
        train = inject_attribute_noise(train, spec.attribute_noise,
                                       make_rng(derive_seed(master_seed, ["attribute_noise", spec.name])))
    return train, clean

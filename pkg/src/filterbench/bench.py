"""Stability metric, benchmark grid runner and result persistence.

A grid cell is one (scenario, method, repeat, fold).  Feature selection runs
once per cell on the (possibly noisy) training fold; every classifier is then
trained on the selected columns of that fold and scored on the clean test
fold.  Records are sorted by grid key before they are returned, so the output
does not depend on the number of worker processes.
"""

from __future__ import annotations

import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import LabeledDataset, Role, auc, derive_seed, make_rng, plan_cv
from .datagen import GeneratorParams, ScenarioSpec, build_scenario, get_scenario
from .errors import CellFailure, DegenerateSelection, SchemaMismatch
from .filters.base import FeatureSet
from .filters.registry import (
    REFERENCE_METHOD,
    REGISTRY_VERSION,
    SelectionContext,
    get_method,
    resolve_methods,
)
from .learners import ForestParams, forest_fit, forest_score, nb_fit, nb_score

CLASSIFIERS = ("nb", "forest")

RESULTS_HEADER = (
    "scenario", "method", "classifier", "repeat", "fold", "auc", "relevant_fraction",
    "n_selected", "runtime_seconds", "seed", "selected_indices",
)


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------

def stability(sets, p: int) -> float:
    """Chance-corrected stability of ``m`` feature sets over ``p`` features.

    1 - mean_j s_j^2 / (q/(mp) (1 - q/(mp))), with s_j^2 the unbiased variance
    of feature j's selection indicator and q the total number of selections.
    """
    sets = [list(s) for s in sets]
    m = len(sets)
    if m < 2:
        raise ValueError("stability needs at least two feature sets")
    if p < 1:
        raise ValueError("p must be positive")
    Z = np.zeros((m, p))
    for i, s in enumerate(sets):
        idx = np.asarray(s, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= p):
            raise ValueError(f"feature index out of range for p={p}")
        Z[i, idx] = 1.0
    h = Z.sum(axis=0)
    q = h.sum()
    if q == 0 or q == m * p:
        raise DegenerateSelection("stability is undefined when every set is empty or every set is full")
    freq = h / m
    num = np.mean(m / (m - 1) * freq * (1.0 - freq))
    kbar = q / (m * p)
    return float(1.0 - num / (kbar * (1.0 - kbar)))


def relevant_fraction(selected, roles) -> float:
    relevant = {j for j, r in enumerate(roles) if Role(r) is Role.RELEVANT}
    if not relevant:
        return 0.0
    return len(relevant & set(int(j) for j in selected)) / len(relevant)


# --------------------------------------------------------------------------
# Records and configuration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RunRecord:
    scenario: str
    method: str
    classifier: str
    repeat: int
    fold: int
    auc: float
    relevant_fraction: float
    selected: tuple[int, ...]
    runtime_seconds: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.auc <= 1.0:
            raise ValueError(f"auc {self.auc} outside [0, 1]")
        if not 0.0 <= self.relevant_fraction <= 1.0:
            raise ValueError("relevant_fraction outside [0, 1]")
        if self.runtime_seconds < 0:
            raise ValueError("negative runtime")

    @property
    def n_selected(self) -> int:
        return len(self.selected)

    @property
    def key(self) -> tuple:
        return (self.scenario, self.method, self.classifier, self.repeat, self.fold)

    def to_row(self) -> list[str]:
        return [
            self.scenario, self.method, self.classifier, str(self.repeat), str(self.fold),
            repr(float(self.auc)), repr(float(self.relevant_fraction)), str(self.n_selected),
            repr(float(self.runtime_seconds)), str(self.seed),
            ";".join(str(j) for j in self.selected),
        ]


@dataclass(frozen=True)
class BenchConfig:
    scenarios: tuple[str, ...]
    methods: tuple[str, ...]
    classifiers: tuple[str, ...] = ("nb",)
    folds: int = 10
    repeats: int = 5
    master_seed: int = 0
    k_policy: str | int = "relevant"   # "relevant" or a fixed k
    observations: int | None = None    # rescale every scenario to this n
    filter_trees: int | None = None    # forest size inside forest-based filters
    classifier_trees: int = 500
    workers: int = 1
    timing: bool = True                # False writes runtime 0 for byte-stable output

    def __post_init__(self):
        for name in ("scenarios", "methods", "classifiers"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def validate(self) -> None:
        for s in self.scenarios:
            get_scenario(s)
        resolve_methods(self.methods)
        for c in self.classifiers:
            if c not in CLASSIFIERS:
                raise ValueError(f"unknown classifier {c!r}; choose from {', '.join(CLASSIFIERS)}")
        if not self.scenarios or not self.methods or not self.classifiers:
            raise ValueError("scenarios, methods and classifiers must be non-empty")
        if self.folds < 2 or self.repeats < 1:
            raise ValueError("need folds >= 2 and repeats >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.k_policy != "relevant" and (not isinstance(self.k_policy, int) or self.k_policy < 1):
            raise ValueError(f"k_policy must be 'relevant' or a positive integer, got {self.k_policy!r}")

    def scenario_spec(self, name: str) -> ScenarioSpec:
        spec = get_scenario(name)
        if self.observations is not None:
            spec = spec.with_observations(self.observations)
        return spec

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scenarios"] = list(self.scenarios)
        d["methods"] = list(self.methods)
        d["classifiers"] = list(self.classifiers)
        return d


def k_for(spec: ScenarioSpec, policy) -> int:
    if policy == "relevant":
        return spec.features_relevant
    return int(policy)


def method_applies(method: str, spec: ScenarioSpec) -> bool:
    """Cost-sensitive filters only run on imbalanced scenarios."""
    return not get_method(method).cost_sensitive or spec.is_imbalanced


def cv_seed(master_seed: int, spec: ScenarioSpec) -> int:
    # keyed like the clean data so noisy scenarios reuse the Baseline folds
    base = spec.clean()
    return derive_seed(master_seed, ["cv", base.observations, base.features_total,
                                     base.features_relevant, base.features_redundant,
                                     repr(base.minority_fraction)])


def cell_seed(master_seed: int, scenario: str, method: str, repeat: int, fold: int) -> int:
    return derive_seed(master_seed, ["cell", scenario, method, repeat, fold])


# --------------------------------------------------------------------------
# Grid execution
# --------------------------------------------------------------------------

@dataclass
class _Task:
    scenario: str
    method: str
    repeat: int
    fold: int
    train_rows: np.ndarray
    test_rows: np.ndarray
    k: int
    seed: int


# per-process dataset store, filled by the pool initializer (or directly when serial)
_DATA: dict[str, tuple[LabeledDataset, LabeledDataset]] = {}
_CONFIG: BenchConfig | None = None


def _init_worker(data, config):
    global _CONFIG
    _DATA.clear()
    _DATA.update(data)
    _CONFIG = config


def _fit_and_score(classifier: str, train: LabeledDataset, test: LabeledDataset,
                   seed: int, trees: int) -> float:
    if classifier == "nb":
        return auc(nb_score(nb_fit(train), test.features), test.labels)
    model = forest_fit(train, ForestParams(trees=trees), derive_seed(seed, ["classifier", "forest"]))
    return auc(forest_score(model, test.features), test.labels)


def _run_task(task: _Task) -> list[RunRecord]:
    config = _CONFIG
    try:
        noisy, clean = _DATA[task.scenario]
        train = noisy.take_rows(task.train_rows)
        test = clean.take_rows(task.test_rows)
        ctx = SelectionContext(k=task.k, seed=task.seed, trees=config.filter_trees)
        info = get_method(task.method)
        start = time.perf_counter()
        fs: FeatureSet = info.select(train, ctx)
        elapsed = time.perf_counter() - start
        runtime = elapsed if config.timing else 0.0
        cols = np.asarray(fs.indices, dtype=np.int64)
        rel = relevant_fraction(fs.indices, noisy.roles)
        out = []
        for clf in config.classifiers:
            if cols.size == 0:
                score = 0.5  # an empty selection carries no information
            else:
                score = _fit_and_score(clf, train.take_columns(cols), test.take_columns(cols),
                                       task.seed, config.classifier_trees)
            out.append(RunRecord(task.scenario, task.method, clf, task.repeat, task.fold,
                                 float(score), rel, tuple(int(j) for j in fs.indices),
                                 runtime, task.seed))
        return out
    except Exception as exc:  # noqa: BLE001 - re-raised with the cell coordinates
        raise CellFailure(task.scenario, task.method, task.repeat, task.fold, repr(exc)) from None


def build_tasks(config: BenchConfig, data) -> list[_Task]:
    methods = resolve_methods(config.methods)
    if REFERENCE_METHOD not in methods:
        methods = [REFERENCE_METHOD] + methods
    tasks = []
    for scen in config.scenarios:
        spec = config.scenario_spec(scen)
        _, clean = data[scen]
        plan = plan_cv(clean.labels, config.folds, config.repeats,
                       make_rng(cv_seed(config.master_seed, spec)))
        k = k_for(spec, config.k_policy)
        for method in methods:
            if not method_applies(method, spec):
                continue
            for fold in plan:
                seed = cell_seed(config.master_seed, scen, method, fold.repeat, fold.fold)
                tasks.append(_Task(scen, method, fold.repeat, fold.fold,
                                   fold.train, fold.test, k, seed))
    return tasks


def load_scenarios(config: BenchConfig,
                   params: GeneratorParams = GeneratorParams()) -> dict[str, tuple[LabeledDataset, LabeledDataset]]:
    return {s: build_scenario(config.scenario_spec(s), config.master_seed, params)
            for s in config.scenarios}


def run_benchmark(config: BenchConfig, data=None, progress=None) -> list[RunRecord]:
    """Run the full grid and return records sorted by (scenario, method, classifier, repeat, fold).

    The ``none`` reference method is always included.  ``progress`` is an
    optional callable receiving (done, total) after each cell.
    """
    config.validate()
    if data is None:
        data = load_scenarios(config)
    tasks = build_tasks(config, data)
    records: list[RunRecord] = []
    total = len(tasks)
    if config.workers == 1:
        _init_worker(data, config)
        for i, task in enumerate(tasks, 1):
            records.extend(_run_task(task))
            if progress:
                progress(i, total)
    else:
        with ProcessPoolExecutor(max_workers=config.workers, initializer=_init_worker,
                                 initargs=(data, config)) as pool:
            for i, recs in enumerate(pool.map(_run_task, tasks, chunksize=4), 1):
                records.extend(recs)
                if progress:
                    progress(i, total)
    records.sort(key=lambda r: r.key)
    return records


def stderr_progress(done: int, total: int) -> None:
    step = max(1, total // 20)
    if done == total or done % step == 0:
        print(f"[bench] {done}/{total} cells", file=sys.stderr, flush=True)


# --------------------------------------------------------------------------
# Persistence
# --------------------------------------------------------------------------

def write_results(records, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for r in records:
            w.writerow(r.to_row())
    return path


def read_results(path) -> list[RunRecord]:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path} is empty") from None
        if tuple(header) != RESULTS_HEADER:
            raise SchemaMismatch(f"{path}: unexpected header {','.join(header)}")
        out = []
        for line_no, row in enumerate(reader, 2):
            if len(row) != len(RESULTS_HEADER):
                raise SchemaMismatch(f"{path}:{line_no}: expected {len(RESULTS_HEADER)} fields")
            try:
                sel = tuple(int(j) for j in row[10].split(";")) if row[10] else ()
                rec = RunRecord(row[0], row[1], row[2], int(row[3]), int(row[4]), float(row[5]),
                                float(row[6]), sel, float(row[8]), int(row[9]))
            except ValueError as exc:
                raise SchemaMismatch(f"{path}:{line_no}: {exc}") from None
            if int(row[7]) != len(sel):
                raise SchemaMismatch(f"{path}:{line_no}: n_selected disagrees with selected_indices")
            out.append(rec)
    return out


def write_manifest(config: BenchConfig, path, extra: dict | None = None) -> Path:
    path = Path(path)
    manifest = {
        "registry_version": REGISTRY_VERSION,
        "results_header": list(RESULTS_HEADER),
        "k_policy": config.k_policy,
        "master_seed": config.master_seed,
        "config": config.to_dict(),
        "methods_resolved": resolve_methods(config.methods),
    }
    manifest["config"].pop("workers")  # output does not depend on it
    if extra:
        manifest.update(extra)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# --------------------------------------------------------------------------
# Stability tables
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilityRow:
    scenario: str
    method: str
    pooled: float
    per_repeat: float
    sets: int = field(default=0)


def _selections(records):
    """Distinct selections per (scenario, method), keyed by (repeat, fold)."""
    out: dict[tuple[str, str], dict[tuple[int, int], tuple[int, ...]]] = {}
    for r in records:
        out.setdefault((r.scenario, r.method), {})[(r.repeat, r.fold)] = r.selected
    return out


def _safe_stability(sets, p):
    try:
        return stability(sets, p)
    except DegenerateSelection:
        return float("nan")


def stability_table(records, p_by_scenario: dict[str, int]) -> list[StabilityRow]:
    """Pooled (all folds x repeats) and mean per-repeat stability per scenario and method.

    Degenerate cells, such as the ``none`` reference selecting every feature,
    are reported as NaN.
    """
    rows = []
    for (scen, method), sel in sorted(_selections(records).items()):
        p = p_by_scenario[scen]
        sets = [sel[k] for k in sorted(sel)]
        pooled = _safe_stability(sets, p) if len(sets) >= 2 else float("nan")
        repeats = sorted({k[0] for k in sel})
        per = []
        for r in repeats:
            rs = [sel[k] for k in sorted(sel) if k[0] == r]
            if len(rs) >= 2:
                per.append(_safe_stability(rs, p))
        per_repeat = float(np.mean(per)) if per else float("nan")
        rows.append(StabilityRow(scen, method, pooled, per_repeat, len(sets)))
    return rows


def per_repeat_stability(records, p_by_scenario: dict[str, int]) -> list[tuple[str, str, int, float]]:
    """(scenario, method, repeat, stability) for every non-degenerate repeat."""
    out = []
    for (scen, method), sel in sorted(_selections(records).items()):
        for r in sorted({k[0] for k in sel}):
            rs = [sel[k] for k in sorted(sel) if k[0] == r]
            if len(rs) < 2:
                continue
            value = _safe_stability(rs, p_by_scenario[scen])
            if not np.isnan(value):
                out.append((scen, method, r, value))
    return out


def write_stability(rows, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scenario", "method", "stability_pooled", "stability_per_repeat", "sets"])
        for r in rows:
            w.writerow([r.scenario, r.method, repr(r.pooled), repr(r.per_repeat), r.sets])
    return path


def default_workers() -> int:
    env = os.environ.get("FILTERBENCH_THREADS")
    if env:
        return int(env)
    return 1

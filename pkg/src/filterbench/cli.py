"""Command-line entry point: ``filterbench generate|bench|analyze|report``.

Exit codes: 0 success, 2 configuration or input error, 3 a benchmark cell
failed (the message names scenario, method, repeat and fold).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bench
from .analysis import (
    CONTROLS,
    GROUP_CONTROLS,
    Observation,
    RegressionSpec,
    SeKind,
    average_ranks,
    coefficient_grade,
    coefficient_rows,
    coefficients_markdown,
    fit_criterion_model,
    observations_from_records,
    quantile_grade,
    runtime_grade,
)
from .core import Criterion, write_dataset
from .datagen import SCENARIO_GROUPS, build_scenario, get_scenario, scenario_table
from .errors import CellFailure, FilterBenchError
from .filters.registry import REFERENCE_METHOD

EXIT_OK, EXIT_CONFIG, EXIT_CELL = 0, 2, 3


class ConfigError(Exception):
    pass


def _split_names(values) -> list[str]:
    out = []
    for v in values or []:
        out.extend(s.strip() for s in str(v).split(",") if s.strip())
    return out


def _expand_scenarios(names) -> list[str]:
    names = _split_names(names)
    if not names:
        raise ConfigError("no scenarios given")
    if "all" in names:
        return [s.name for s in scenario_table()]
    for n in names:
        get_scenario(n)
    return names


def _seed(value) -> int:
    seed = int(value)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError(f"seed {seed} is not an unsigned 64-bit integer")
    return seed


# --------------------------------------------------------------------------
# generate
# --------------------------------------------------------------------------

def cmd_generate(args) -> int:
    scenarios = _expand_scenarios(args.scenario)
    seed = _seed(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in scenarios:
        spec = get_scenario(name)
        if args.observations:
            spec = spec.with_observations(args.observations)
        train, _ = build_scenario(spec, seed)
        csv_path, _ = write_dataset(train, out, name)
        print(f"wrote {csv_path}", file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------
# bench
# --------------------------------------------------------------------------

def _load_config(path) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def _k_policy(value):
    if value is None or value == "relevant":
        return "relevant"
    try:
        k = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"k policy must be 'relevant' or an integer, got {value!r}") from None
    if k < 1:
        raise ConfigError("k must be positive")
    return k


def _threads(flag, config_value) -> int:
    if flag is not None:
        return int(flag)
    env = os.environ.get("FILTERBENCH_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"FILTERBENCH_THREADS={env!r} is not an integer") from None
    return int(config_value or 1)


def bench_config_from_args(args) -> tuple[bench.BenchConfig, Path]:
    cfg = _load_config(args.config)
    known = {"scenarios", "methods", "classifiers", "folds", "repeats", "seed", "k_policy",
             "observations", "filter_trees", "classifier_trees", "threads", "timing", "output_dir"}
    unknown = set(cfg) - known
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")

    def pick(flag, key, default=None):
        return flag if flag is not None else cfg.get(key, default)

    scenarios = _expand_scenarios(args.scenarios or cfg.get("scenarios"))
    methods = _split_names(args.methods or cfg.get("methods") or ["all"])
    classifiers = _split_names(args.classifiers or cfg.get("classifiers") or ["nb"])
    timing = cfg.get("timing", True)
    if args.no_timing:
        timing = False
    out = pick(args.out, "output_dir")
    if not out:
        raise ConfigError("an output directory is required (--out)")
    config = bench.BenchConfig(
        scenarios=tuple(scenarios),
        methods=tuple(methods),
        classifiers=tuple(classifiers),
        folds=int(pick(args.folds, "folds", 10)),
        repeats=int(pick(args.repeats, "repeats", 5)),
        master_seed=_seed(pick(args.seed, "seed", 0)),
        k_policy=_k_policy(pick(args.k, "k_policy")),
        observations=pick(args.observations, "observations"),
        filter_trees=pick(args.trees, "filter_trees"),
        classifier_trees=int(pick(args.classifier_trees, "classifier_trees", 500)),
        workers=_threads(args.threads, cfg.get("threads")),
        timing=bool(timing),
    )
    config.validate()
    return config, Path(out)


def cmd_bench(args) -> int:
    config, out = bench_config_from_args(args)
    out.mkdir(parents=True, exist_ok=True)
    progress = None if args.quiet else bench.stderr_progress
    records = bench.run_benchmark(config, progress=progress)
    bench.write_results(records, out / "results.csv")
    bench.write_manifest(config, out / "manifest.json")
    p_by = {s: config.scenario_spec(s).features_total for s in config.scenarios}
    bench.write_stability(bench.stability_table(records, p_by), out / "stability.csv")
    print(f"wrote {len(records)} records to {out / 'results.csv'}", file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------
# analyze / report
# --------------------------------------------------------------------------

def _scenario_specs(runs: Path, manifest_arg) -> dict:
    """Scenario specs as benchmarked (observation scaling read from the manifest)."""
    path = Path(manifest_arg) if manifest_arg else runs.parent / "manifest.json"
    observations = None
    if path.exists():
        try:
            observations = json.loads(path.read_text())["config"].get("observations")
        except (json.JSONDecodeError, KeyError, TypeError):
            raise ConfigError(f"malformed manifest {path}") from None
    specs = {}
    for s in scenario_table():
        specs[s.name] = s.with_observations(observations) if observations else s
    return specs


def _stability_observations(records, specs) -> list[Observation]:
    p_by = {name: spec.features_total for name, spec in specs.items()}
    return [Observation(scen, method, value)
            for scen, method, _, value in bench.per_repeat_stability(records, p_by)]


def _observations(records, criterion: Criterion, specs):
    if criterion is Criterion.STABILITY:
        return _stability_observations(records, specs)
    return observations_from_records(records, criterion)


def _model_groups(scenarios: set[str], group: str) -> dict[str, tuple[set[str], tuple[str, ...]]]:
    """Scenario subsets and controls for each model to fit."""
    if group == "pooled":
        return {"pooled": (scenarios, CONTROLS)}
    if group != "auto":
        members = set(SCENARIO_GROUPS[group]) & scenarios
        return {group: (members, GROUP_CONTROLS[group])}
    out = {}
    for name, members in SCENARIO_GROUPS.items():
        present = set(members) & scenarios
        if present - {"Baseline"}:
            out[name] = (present, GROUP_CONTROLS[name])
    return out or {"pooled": (scenarios, CONTROLS)}


def _default_reference(obs, criterion: Criterion, requested):
    if requested:
        return requested
    if criterion is Criterion.STABILITY:
        # the all-features reference has undefined stability
        methods = sorted({o.method for o in obs} - {REFERENCE_METHOD})
        if not methods:
            raise ConfigError("no method with defined stability to use as reference")
        print(f"note: stability reference defaults to {methods[0]!r}", file=sys.stderr)
        return methods[0]
    return REFERENCE_METHOD


def cmd_analyze(args) -> int:
    runs = Path(args.runs)
    records = bench.read_results(runs)
    specs = _scenario_specs(runs, args.manifest)
    criterion = Criterion(args.criterion)
    obs = _observations(records, criterion, specs)
    if not obs:
        raise ConfigError("no observations to analyze")
    reference = _default_reference(obs, criterion, args.reference)
    groups = _model_groups({o.scenario for o in obs}, args.group)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fit_rows = []
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "term", "estimate", "robust_se", "p_value", "stars"])
        for name, (members, controls) in groups.items():
            if criterion is Criterion.RUNTIME:
                controls = ()  # runtime is modelled on the methods alone
            elif criterion is Criterion.STABILITY:
                controls = tuple(c for c in controls if c != "classifier")
            subset = [o for o in obs if o.scenario in members]
            rspec = RegressionSpec(criterion, reference, controls, SeKind(args.se))
            model = fit_criterion_model(subset, rspec, specs)
            for row in coefficient_rows(model):
                w.writerow([name, row["term"], repr(row["estimate"]), repr(row["robust_se"]),
                            repr(row["p_value"]), row["stars"]])
            fit_rows.append([name, repr(model.r2), repr(model.adj_r2), model.n,
                             repr(model.f_statistic), ";".join(model.dropped_controls)])
            if not args.quiet:
                print(coefficients_markdown(model, f"{criterion.value}: {name}"))
    fit_path = out.with_name(out.stem + "_fit.csv")
    with open(fit_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "r2", "adj_r2", "n", "f_statistic", "dropped_controls"])
        w.writerows(fit_rows)
    return EXIT_OK


def grade_matrix(records, specs, reference: str = REFERENCE_METHOD):
    """Per-method grades for the four criteria plus average ranks."""
    methods = sorted({r.method for r in records} - {reference})
    if not methods:
        raise ConfigError("report needs at least one method besides the reference")

    auc_obs = observations_from_records(records, Criterion.AUC)
    model = fit_criterion_model(auc_obs, RegressionSpec(Criterion.AUC, reference, CONTROLS), specs)
    auc_grades = coefficient_grade(model)

    def mean_by(attr):
        acc: dict[tuple[str, str], list[float]] = {}
        for r in records:
            acc.setdefault((r.scenario, r.method), []).append(getattr(r, attr))
        return {k: float(np.mean(v)) for k, v in acc.items()}

    rel = mean_by("relevant_fraction")
    run = mean_by("runtime_seconds")
    aucs = mean_by("auc")
    p_by = {name: spec.features_total for name, spec in specs.items()}
    stab = {(row.scenario, row.method): row.pooled
            for row in bench.stability_table(records, p_by)}

    def per_method(values):
        acc: dict[str, list[float]] = {}
        for (_, m), v in values.items():
            if m != reference and np.isfinite(v):
                acc.setdefault(m, []).append(v)
        return {m: float(np.mean(acc[m])) if m in acc else float("nan") for m in methods}

    if len(methods) >= 2:
        rel_grades = quantile_grade(per_method(rel), True)
        stab_grades = quantile_grade(per_method(stab), True)
    else:
        rel_grades = {methods[0]: "0"}
        stab_grades = {methods[0]: "0" if np.isfinite(per_method(stab)[methods[0]]) else ""}
    run_mean = per_method(run)
    grades = {
        m: {
            "auc": auc_grades.get(m, "0"),
            "relevant_fraction": rel_grades[m],
            "stability": stab_grades[m],
            "runtime": runtime_grade(run_mean[m]),
        }
        for m in methods
    }

    def drop_ref(values):
        return {k: v for k, v in values.items() if k[1] != reference}

    ranks = {
        "auc": average_ranks(drop_ref(aucs), True),
        "relevant_fraction": average_ranks(drop_ref(rel), True),
        "stability": average_ranks(drop_ref(stab), True),
        "runtime": average_ranks(drop_ref(run), False),
    }
    return grades, ranks


CRITERIA_COLUMNS = ("auc", "relevant_fraction", "stability", "runtime")


def cmd_report(args) -> int:
    runs = Path(args.runs)
    records = bench.read_results(runs)
    specs = _scenario_specs(runs, args.manifest)
    grades, ranks = grade_matrix(records, specs, args.reference or REFERENCE_METHOD)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", *CRITERIA_COLUMNS])
        for m, g in grades.items():
            w.writerow([m, *(g[c] for c in CRITERIA_COLUMNS)])
    with open(out.with_name(out.stem + "_ranks.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", *(f"{c}_avg_rank" for c in CRITERIA_COLUMNS)])
        for m in grades:
            w.writerow([m, *(repr(ranks[c].get(m, float("nan"))) for c in CRITERIA_COLUMNS)])
    lines = ["| method | " + " | ".join(CRITERIA_COLUMNS) + " |",
             "|---|" + "---|" * len(CRITERIA_COLUMNS)]
    for m, g in grades.items():
        lines.append(f"| {m} | " + " | ".join(g[c] or " " for c in CRITERIA_COLUMNS) + " |")
    table = "\n".join(lines) + "\n"
    if args.markdown:
        Path(args.markdown).write_text(table)
    if not args.quiet:
        print(table)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="filterbench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write scenario datasets as CSV + JSON")
    g.add_argument("--scenario", action="append", required=True,
                   help="scenario name, comma list, or 'all' (repeatable)")
    g.add_argument("--seed", default=0, help="master seed (u64)")
    g.add_argument("--out", default="data", help="output directory")
    g.add_argument("--observations", type=int, help="rescale every scenario to this many rows")
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("bench", help="run the benchmark grid")
    b.add_argument("--config", help="JSON config; flags override its keys")
    b.add_argument("--scenarios", action="append", help="names, comma list, or 'all'")
    b.add_argument("--methods", action="append", help="method names/aliases or 'all'")
    b.add_argument("--classifiers", action="append", help="nb and/or forest")
    b.add_argument("--folds", type=int)
    b.add_argument("--repeats", type=int)
    b.add_argument("--seed", help="master seed (u64)")
    b.add_argument("--k", help="'relevant' (default) or a fixed number of features")
    b.add_argument("--observations", type=int, help="rescale every scenario to this many rows")
    b.add_argument("--trees", type=int, help="trees inside forest-based filters")
    b.add_argument("--classifier-trees", type=int, help="trees in the forest classifier")
    b.add_argument("--threads", type=int, help="worker processes (default $FILTERBENCH_THREADS or 1)")
    b.add_argument("--no-timing", action="store_true",
                   help="record runtime 0 so repeated runs are byte-identical")
    b.add_argument("--out", help="output directory")
    b.add_argument("--quiet", action="store_true")
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("analyze", help="fit method-dummy regression models")
    a.add_argument("--runs", required=True, help="results.csv from bench")
    a.add_argument("--criterion", default="auc", choices=[c.value for c in Criterion])
    a.add_argument("--out", required=True, help="coefficient table CSV")
    a.add_argument("--group", default="auto",
                   choices=["auto", "pooled", *SCENARIO_GROUPS],
                   help="scenario family to model; 'auto' fits each family present")
    a.add_argument("--reference", help="reference method (default 'none')")
    a.add_argument("--se", default="HC0", choices=[k.value for k in SeKind])
    a.add_argument("--manifest", help="bench manifest (default: next to --runs)")
    a.add_argument("--quiet", action="store_true")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("report", help="grade matrix over the four criteria")
    r.add_argument("--runs", required=True)
    r.add_argument("--out", required=True, help="grade matrix CSV")
    r.add_argument("--markdown", help="also write the matrix as a markdown table")
    r.add_argument("--reference")
    r.add_argument("--manifest")
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CellFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CELL
    except (ConfigError, FilterBenchError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
